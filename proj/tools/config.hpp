#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsainfer/bootstrap.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/schedule.hpp"
#include "lsainfer/series.hpp"

namespace lsa::cli {

struct InstanceConfig {
  InstanceKind kind = InstanceKind::random_hurwitz;
  std::optional<std::uint64_t> seed;  // falls back to the run seed
  // random_hurwitz
  int d = 2;
  double spectrum_lo = 0.5;
  double spectrum_hi = 1.5;
  double noise_scale = 1.0;
  int n_pairs = 0;
  // td_generative
  MdpSpec mdp;
  TdOptions td;
  // custom_atoms
  std::vector<Observation> atoms;
  std::vector<double> probabilities;
};

/// Bounds used by --assert; unset sides fall back to per-command defaults.
struct AssertBand {
  std::optional<double> min;
  std::optional<double> max;
};

struct ExperimentConfig {
  nlohmann::json effective;  // fully resolved document, embedded in the manifest
  std::string config_hash;   // FNV-1a 64 of the input bytes, hex
  std::uint64_t config_seed = 0;
  std::uint64_t seed = 0;
  bool seed_from_env = false;

  InstanceConfig instance;
  StepSchedule schedule;

  std::uint64_t n = 1024;
  std::vector<std::uint64_t> n_grid{256, 512, 1024, 2048, 4096};
  std::size_t M = 200;
  std::uint64_t R = 500;
  std::uint64_t R_outer = 50;
  std::uint64_t R_real = 5000;
  double level = 0.9;
  std::size_t K = 32;
  WeightKind weights = WeightKind::two_point;
  ReferenceLaw reference = ReferenceLaw::sigma_inf;
  std::optional<Vec> theta0;  // unset: zero for simulate/bootstrap/coverage, theta* for rate experiments
  double moment_p = 2.0;
  int L = 2;
  AssertBand band;

  std::string output = "out";
  unsigned workers = 1;
};

/// FNV-1a 64-bit digest of raw bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Parses and validates a JSON document. Unknown keys, wrong types and
/// out-of-domain values throw ConfigError naming the key path. A run
/// manifest is accepted too: its embedded effective config is used.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies LSA_INFER_SEED if set.
void apply_seed_override(ExperimentConfig& cfg);

/// Closest known key path for an unknown key, or empty.
std::string suggest_key(const std::string& unknown);

LsaInstance build_instance(const ExperimentConfig& cfg);

/// Reads an MDP from a JSON object with keys transitions, rewards, policy,
/// features and discount.
MdpSpec mdp_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace lsa::cli
