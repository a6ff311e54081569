#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lsainfer/linalg.hpp"
#include "lsainfer/rng.hpp"

namespace lsa {

/// One observation (A_k, b_k) of the linear system.
struct Observation {
  Mat A;
  Vec b;
};

enum class InstanceKind { random_hurwitz, lower_bound_1d, td_generative, custom_atoms };

std::string to_string(InstanceKind kind);

/// Finite discounted MDP with a fixed evaluation policy and linear features.
struct MdpSpec {
  int n_states = 0;
  int n_actions = 0;
  /// P(s'|s,a) stored at [(s * n_actions + a) * n_states + s'].
  std::vector<double> transition;
  Mat reward;    // n_states x n_actions
  Mat policy;    // n_states x n_actions, rows sum to 1
  double discount = 0.0;
  Mat features;  // n_states x d

  double p(int s, int a, int s_next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
  }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Throws ConfigError on malformed shapes or non-stochastic rows and
  /// RankDeficientError when the feature matrix lacks full column rank.
  void validate() const;

  /// P^nu(s, s') = sum_a nu(a|s) P(s'|s,a).
  Mat policy_transition() const;
  /// r^nu(s) = sum_a nu(a|s) r(s,a).
  Vec policy_reward() const;
};

struct TdOptions {
  /// Sampling law over states; empty means uniform.
  std::vector<double> state_distribution;
  /// Upper bound on the enumerated (s, a, s') support.
  std::size_t support_cap = std::size_t{1} << 22;
};

/// An LSA problem with exactly known population quantities.
///
/// Atom-based instances draw (A, b) from a finite mixture, so that Abar, bbar,
/// Sigma_eps, bA and eps_sup are computed exactly from the atoms. The 1D
/// lower-bound instance draws b = -xi with Gaussian xi and is flagged
/// `unbounded_noise`. Instances are immutable; sampling state lives in the
/// caller's Rng.
class LsaInstance {
 public:
  /// Builds an instance from explicit atoms. Probabilities must be positive
  /// and sum to 1 within 1e-12.
  static LsaInstance from_atoms(std::vector<Observation> atoms, std::vector<double> probabilities,
                                InstanceKind kind = InstanceKind::custom_atoms,
                                std::uint64_t seed = 0);

  static LsaInstance gaussian_identity_1d(std::uint64_t seed);

  int dim() const { return dim_; }
  InstanceKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  bool unbounded_noise() const { return unbounded_noise_; }
  bool is_atomic() const { return !atoms_.empty(); }

  const Mat& Abar() const { return Abar_; }
  const Vec& bbar() const { return bbar_; }
  const Vec& theta_star() const { return theta_star_; }
  const Mat& Sigma_eps() const { return Sigma_eps_; }
  double bA() const { return bA_; }
  double eps_sup() const { return eps_sup_; }

  const std::vector<Observation>& atoms() const { return atoms_; }
  const std::vector<double>& probabilities() const { return probs_; }

  /// Draws one observation. For atom instances the returned reference points
  /// into the atom table; otherwise into `scratch`.
  const Observation& draw(Rng& rng, Observation& scratch) const;

  /// Convenience copy-out draw.
  Observation draw(Rng& rng) const {
    Observation scratch;
    return draw(rng, scratch);
  }

  /// Default observation stream `index` of this instance.
  Rng stream(std::uint64_t index = 0) const { return Rng(derive_seed(seed_, index)); }

 private:
  LsaInstance() = default;
  std::size_t draw_index(Rng& rng) const;

  int dim_ = 0;
  InstanceKind kind_ = InstanceKind::custom_atoms;
  std::uint64_t seed_ = 0;
  bool unbounded_noise_ = false;
  bool uniform_atoms_ = false;
  Mat Abar_;
  Vec bbar_;
  Vec theta_star_;
  Mat Sigma_eps_;
  double bA_ = 0.0;
  double eps_sup_ = 0.0;
  std::vector<Observation> atoms_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

/// Unique solution of Abar theta = bbar; throws SingularMatrixError.
Vec solve_target(const Mat& Abar, const Vec& bbar);

/// epsilon = (A - Abar) theta* - (b - bbar).
Vec noise_at_solution(const Mat& A, const Vec& b, const LsaInstance& instance);

/// d = 1, A_k = 1, b_k = -xi_k with xi_k ~ N(0, 1); theta* = 0, Sigma_eps = 1.
LsaInstance make_gaussian_identity_1d(std::uint64_t seed);

/// Random instance with -Abar Hurwitz and real spectrum in [lo, hi]; atoms
/// come in symmetric pairs (Abar +/- E_j, bbar +/- e_j) so the mixture mean is
/// exact. `n_pairs` = 0 selects 2d pairs.
LsaInstance make_random_hurwitz(int d, std::uint64_t seed, double lo, double hi, double noise_scale,
                                int n_pairs = 0);

/// TD(0) under the generative model: s ~ mu, a ~ nu(.|s), s' ~ P(.|s,a);
/// A = phi(s)(phi(s) - discount phi(s'))^T, b = r(s,a) phi(s).
LsaInstance make_td_generative(const MdpSpec& mdp, std::uint64_t seed, const TdOptions& options = {});

}  // namespace lsa
