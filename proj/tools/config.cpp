#include "config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lsainfer/errors.hpp"
#include "lsainfer/io.hpp"

namespace lsa::cli {

using nlohmann::json;

namespace {

const std::map<std::string, std::vector<std::string>>& allowed_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"", {"seed", "instance", "schedule", "experiment", "assert", "output", "workers"}},
      {"instance",
       {"kind", "seed", "d", "spectrum", "noise_scale", "n_pairs", "mdp", "mdp_file", "state_distribution",
        "support_cap", "atoms"}},
      {"schedule", {"c0", "gamma", "k0"}},
      {"experiment",
       {"n", "n_grid", "M", "R", "R_outer", "R_real", "level", "K", "weights", "reference", "theta0", "p", "L"}},
      {"assert", {"min", "max"}},
  };
  return keys;
}

// Common misspellings and synonyms of real keys.
const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a{
      {"stepsize", "schedule.c0"},        {"step_size", "schedule.c0"},    {"alpha", "schedule.c0"},
      {"lr", "schedule.c0"},              {"learning_rate", "schedule.c0"}, {"alpha0", "schedule.c0"},
      {"exponent", "schedule.gamma"},     {"decay", "schedule.gamma"},     {"offset", "schedule.k0"},
      {"burn_in", "schedule.k0"},         {"replications", "experiment.R"}, {"bootstrap_size", "experiment.M"},
      {"confidence", "experiment.level"}, {"directions", "experiment.K"},  {"dim", "instance.d"},
      {"dimension", "instance.d"},        {"threads", "workers"},          {"out", "output"},
  };
  return a;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const json& obj, const std::string& path) {
  const auto& allowed = allowed_keys().at(path);
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::string msg = "unknown key '" + key + "'";
    const std::string hint = suggest_key(key);
    if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
    throw ConfigError(join(path, key), msg);
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(join(path, key), "required key is missing");
  return obj.at(key);
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(path, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(path, "expected a nonnegative integer");
}

std::vector<double> as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Mat as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  Mat M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = as_vector(v[r], path + "[" + std::to_string(r) + "]");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(path, "ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[c];
  }
  return M;
}

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

InstanceKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "random_hurwitz") return InstanceKind::random_hurwitz;
  if (s == "lower_bound_1d") return InstanceKind::lower_bound_1d;
  if (s == "td_generative") return InstanceKind::td_generative;
  if (s == "custom_atoms") return InstanceKind::custom_atoms;
  throw ConfigError(path, "unknown instance kind '" + s + "' (random_hurwitz|lower_bound_1d|td_generative|custom_atoms)");
}

ReferenceLaw parse_reference(const std::string& s, const std::string& path) {
  if (s == "sigma_n") return ReferenceLaw::sigma_n;
  if (s == "sigma_inf") return ReferenceLaw::sigma_inf;
  if (s == "standard_normal") return ReferenceLaw::standard_normal;
  throw ConfigError(path, "unknown reference '" + s + "' (sigma_n|sigma_inf|standard_normal)");
}

json mdp_json(const MdpSpec& m) {
  json t = json::array();
  for (int s = 0; s < m.n_states; ++s) {
    json per_action = json::array();
    for (int a = 0; a < m.n_actions; ++a) {
      json row = json::array();
      for (int sp = 0; sp < m.n_states; ++sp) row.push_back(m.p(s, a, sp));
      per_action.push_back(row);
    }
    t.push_back(per_action);
  }
  return {{"transitions", t},
          {"rewards", matrix_json(m.reward)},
          {"policy", matrix_json(m.policy)},
          {"features", matrix_json(m.features)},
          {"discount", m.discount}};
}

void parse_instance(const json& j, InstanceConfig& inst, json& eff) {
  const std::string path = "instance";
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown(j, path);
  const json& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError("instance.kind", "expected a string");
  inst.kind = parse_kind(kind.get<std::string>(), "instance.kind");
  eff["kind"] = kind;
  if (j.contains("seed")) {
    inst.seed = as_u64(j["seed"], "instance.seed");
    eff["seed"] = *inst.seed;
  }
  auto forbid_others = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
      if (key == "kind" || key == "seed") continue;
      if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
        throw ConfigError(join(path, key), "key does not apply to instance kind '" + to_string(inst.kind) + "'");
      }
    }
  };

  switch (inst.kind) {
    case InstanceKind::random_hurwitz: {
      forbid_others({"d", "spectrum", "noise_scale", "n_pairs"});
      const auto d = as_u64(require(j, "d", path), "instance.d");
      if (d < 1 || d > 64) throw ConfigError("instance.d", "d must lie in [1, 64]");
      inst.d = static_cast<int>(d);
      if (j.contains("spectrum")) {
        const auto sp = as_vector(j["spectrum"], "instance.spectrum");
        if (sp.size() != 2 || !(sp[0] > 0.0) || !(sp[1] >= sp[0])) {
          throw ConfigError("instance.spectrum", "expected [lo, hi] with 0 < lo <= hi");
        }
        inst.spectrum_lo = sp[0];
        inst.spectrum_hi = sp[1];
      }
      if (j.contains("noise_scale")) inst.noise_scale = as_double(j["noise_scale"], "instance.noise_scale");
      if (inst.noise_scale < 0.0) throw ConfigError("instance.noise_scale", "must be nonnegative");
      if (j.contains("n_pairs")) inst.n_pairs = static_cast<int>(as_u64(j["n_pairs"], "instance.n_pairs"));
      eff["d"] = inst.d;
      eff["spectrum"] = {inst.spectrum_lo, inst.spectrum_hi};
      eff["noise_scale"] = inst.noise_scale;
      eff["n_pairs"] = inst.n_pairs;
      break;
    }
    case InstanceKind::lower_bound_1d:
      forbid_others({});
      break;
    case InstanceKind::td_generative: {
      forbid_others({"mdp", "mdp_file", "state_distribution", "support_cap"});
      if (j.contains("mdp") == j.contains("mdp_file")) {
        throw ConfigError("instance.mdp", "exactly one of 'mdp' and 'mdp_file' is required");
      }
      if (j.contains("mdp")) {
        inst.mdp = mdp_from_json(j["mdp"], "instance.mdp");
      } else {
        if (!j["mdp_file"].is_string()) throw ConfigError("instance.mdp_file", "expected a path string");
        const std::string file = j["mdp_file"].get<std::string>();
        json doc;
        try {
          doc = json::parse(io::read_text(file));
        } catch (const json::parse_error& e) {
          throw ConfigError("instance.mdp_file", "cannot parse '" + file + "': " + e.what());
        } catch (const Error& e) {
          throw ConfigError("instance.mdp_file", e.what());
        }
        inst.mdp = mdp_from_json(doc, "instance.mdp_file");
      }
      if (j.contains("state_distribution")) {
        inst.td.state_distribution = as_vector(j["state_distribution"], "instance.state_distribution");
        eff["state_distribution"] = inst.td.state_distribution;
      }
      if (j.contains("support_cap")) {
        inst.td.support_cap = static_cast<std::size_t>(as_u64(j["support_cap"], "instance.support_cap"));
      }
      eff["support_cap"] = inst.td.support_cap;
      eff["mdp"] = mdp_json(inst.mdp);
      break;
    }
    case InstanceKind::custom_atoms: {
      forbid_others({"atoms"});
      const json& atoms = require(j, "atoms", path);
      if (!atoms.is_array() || atoms.empty()) throw ConfigError("instance.atoms", "expected a nonempty array");
      bool any_p = false, all_p = true;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string ap = "instance.atoms[" + std::to_string(i) + "]";
        const json& a = atoms[i];
        if (!a.is_object()) throw ConfigError(ap, "expected an object with A, b and optional p");
        for (const auto& [key, _] : a.items()) {
          if (key != "A" && key != "b" && key != "p") throw ConfigError(ap + "." + key, "unknown key '" + key + "'");
        }
        Observation obs;
        obs.A = as_matrix(require(a, "A", ap), ap + ".A");
        const auto b = as_vector(require(a, "b", ap), ap + ".b");
        obs.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
        inst.atoms.push_back(std::move(obs));
        if (a.contains("p")) {
          any_p = true;
          inst.probabilities.push_back(as_double(a["p"], ap + ".p"));
        } else {
          all_p = false;
        }
      }
      if (any_p && !all_p) throw ConfigError("instance.atoms", "give 'p' for every atom or for none");
      if (!any_p) inst.probabilities.assign(inst.atoms.size(), 1.0 / static_cast<double>(inst.atoms.size()));
      json out = json::array();
      for (std::size_t i = 0; i < inst.atoms.size(); ++i) {
        out.push_back({{"A", matrix_json(inst.atoms[i].A)},
                       {"b", vector_json(inst.atoms[i].b)},
                       {"p", inst.probabilities[i]}});
      }
      eff["atoms"] = out;
      break;
    }
  }
}

ExperimentConfig parse_document(const json& doc, const std::string& hash) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  if (doc.contains("manifest_version")) {
    if (!doc.contains("config")) throw ConfigError("config", "manifest has no embedded config");
    return parse_document(doc["config"], hash);
  }
  reject_unknown(doc, "");
  ExperimentConfig cfg;
  cfg.config_hash = hash;
  json& eff = cfg.effective;

  if (doc.contains("seed")) cfg.config_seed = as_u64(doc["seed"], "seed");
  cfg.seed = cfg.config_seed;
  eff["seed"] = cfg.config_seed;

  json inst_eff = json::object();
  parse_instance(require(doc, "instance", ""), cfg.instance, inst_eff);
  eff["instance"] = inst_eff;

  const json& sch = require(doc, "schedule", "");
  if (!sch.is_object()) throw ConfigError("schedule", "expected an object");
  reject_unknown(sch, "schedule");
  cfg.schedule.c0 = as_double(require(sch, "c0", "schedule"), "schedule.c0");
  cfg.schedule.gamma = as_double(require(sch, "gamma", "schedule"), "schedule.gamma");
  cfg.schedule.k0 = as_u64(require(sch, "k0", "schedule"), "schedule.k0");
  cfg.schedule.validate();
  eff["schedule"] = {{"c0", cfg.schedule.c0}, {"gamma", cfg.schedule.gamma}, {"k0", cfg.schedule.k0}};

  const json ex = doc.value("experiment", json::object());
  if (!ex.is_object()) throw ConfigError("experiment", "expected an object");
  reject_unknown(ex, "experiment");
  if (ex.contains("n")) cfg.n = as_u64(ex["n"], "experiment.n");
  if (cfg.n < 2) throw ConfigError("experiment.n", "n must be >= 2");
  if (ex.contains("n_grid")) {
    cfg.n_grid.clear();
    const json& g = ex["n_grid"];
    if (!g.is_array() || g.empty()) throw ConfigError("experiment.n_grid", "expected a nonempty array");
    for (std::size_t i = 0; i < g.size(); ++i) cfg.n_grid.push_back(as_u64(g[i], "experiment.n_grid"));
  }
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 2 || (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1])) {
      throw ConfigError("experiment.n_grid", "grid must be strictly increasing with entries >= 2");
    }
  }
  if (ex.contains("M")) cfg.M = static_cast<std::size_t>(as_u64(ex["M"], "experiment.M"));
  if (ex.contains("R")) cfg.R = as_u64(ex["R"], "experiment.R");
  if (ex.contains("R_outer")) cfg.R_outer = as_u64(ex["R_outer"], "experiment.R_outer");
  if (ex.contains("R_real")) cfg.R_real = as_u64(ex["R_real"], "experiment.R_real");
  if (ex.contains("level")) cfg.level = as_double(ex["level"], "experiment.level");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ConfigError("experiment.level", "level must lie in (0, 1)");
  if (ex.contains("K")) cfg.K = static_cast<std::size_t>(as_u64(ex["K"], "experiment.K"));
  if (cfg.K < 1) throw ConfigError("experiment.K", "K must be >= 1");
  if (ex.contains("weights")) {
    if (!ex["weights"].is_string()) throw ConfigError("experiment.weights", "expected a string");
    try {
      cfg.weights = weight_kind_from_string(ex["weights"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError("experiment.weights", e.what());
    }
  }
  if (ex.contains("reference")) {
    if (!ex["reference"].is_string()) throw ConfigError("experiment.reference", "expected a string");
    cfg.reference = parse_reference(ex["reference"].get<std::string>(), "experiment.reference");
  }
  if (ex.contains("theta0")) {
    const auto t = as_vector(ex["theta0"], "experiment.theta0");
    cfg.theta0 = Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size()));
  }
  if (ex.contains("p")) cfg.moment_p = as_double(ex["p"], "experiment.p");
  if (!(cfg.moment_p >= 1.0)) throw ConfigError("experiment.p", "p must be >= 1");
  if (ex.contains("L")) cfg.L = static_cast<int>(as_u64(ex["L"], "experiment.L"));
  if (cfg.L > 2) throw ConfigError("experiment.L", "L must lie in {0, 1, 2}");
  json ex_eff = {{"n", cfg.n},           {"n_grid", cfg.n_grid}, {"M", cfg.M},
                 {"R", cfg.R},           {"R_outer", cfg.R_outer}, {"R_real", cfg.R_real},
                 {"level", cfg.level},   {"K", cfg.K},           {"weights", to_string(cfg.weights)},
                 {"reference", to_string(cfg.reference)},        {"p", cfg.moment_p},
                 {"L", cfg.L}};
  if (cfg.theta0) ex_eff["theta0"] = vector_json(*cfg.theta0);
  eff["experiment"] = ex_eff;

  if (doc.contains("assert")) {
    const json& a = doc["assert"];
    if (!a.is_object()) throw ConfigError("assert", "expected an object");
    reject_unknown(a, "assert");
    if (a.contains("min")) cfg.band.min = as_double(a["min"], "assert.min");
    if (a.contains("max")) cfg.band.max = as_double(a["max"], "assert.max");
    json a_eff = json::object();
    if (cfg.band.min) a_eff["min"] = *cfg.band.min;
    if (cfg.band.max) a_eff["max"] = *cfg.band.max;
    eff["assert"] = a_eff;
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ConfigError("output", "expected a path string");
    cfg.output = doc["output"].get<std::string>();
  }
  eff["output"] = cfg.output;
  if (doc.contains("workers")) {
    cfg.workers = static_cast<unsigned>(as_u64(doc["workers"], "workers"));
    if (cfg.workers < 1) throw ConfigError("workers", "workers must be >= 1");
  }
  eff["workers"] = cfg.workers;
  return cfg;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex[h & 0xf];
  return s;
}

std::string suggest_key(const std::string& unknown) {
  std::string lower = unknown;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (auto it = aliases().find(lower); it != aliases().end()) return it->second;
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& [section, keys] : allowed_keys()) {
    for (const auto& k : keys) {
      const std::size_t d = edit_distance(lower, k);
      if (d < best_d) {
        best_d = d;
        best = join(section, k);
      }
    }
  }
  return best_d <= 2 ? best : std::string{};
}

MdpSpec mdp_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> ok{"transitions", "rewards", "policy", "features", "discount"};
    if (!ok.count(key)) throw ConfigError(path + "." + key, "unknown key '" + key + "'");
  }
  MdpSpec m;
  const json& t = require(j, "transitions", path);
  if (!t.is_array() || t.empty()) throw ConfigError(path + ".transitions", "expected [state][action][next_state]");
  m.n_states = static_cast<int>(t.size());
  m.n_actions = t[0].is_array() ? static_cast<int>(t[0].size()) : 0;
  if (m.n_actions < 1) throw ConfigError(path + ".transitions", "expected [state][action][next_state]");
  m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
  for (int s = 0; s < m.n_states; ++s) {
    if (!t[s].is_array() || static_cast<int>(t[s].size()) != m.n_actions) {
      throw ConfigError(path + ".transitions", "every state needs one row per action");
    }
    for (int a = 0; a < m.n_actions; ++a) {
      const auto row = as_vector(t[s][a], path + ".transitions");
      if (static_cast<int>(row.size()) != m.n_states) {
        throw ConfigError(path + ".transitions", "each row needs one entry per next state");
      }
      for (int sp = 0; sp < m.n_states; ++sp) {
        m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states + sp] = row[sp];
      }
    }
  }
  m.reward = as_matrix(require(j, "rewards", path), path + ".rewards");
  m.policy = as_matrix(require(j, "policy", path), path + ".policy");
  m.features = as_matrix(require(j, "features", path), path + ".features");
  m.discount = as_double(require(j, "discount", path), path + ".discount");
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path, e.what());
  }
  return m;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<parse>", line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return parse_document(doc, fnv1a_hex(text));
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw ConfigError("--config", e.what());
  }
  return parse_config(text);
}

void apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("LSA_INFER_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw ConfigError("LSA_INFER_SEED", "expected a nonnegative integer");
  cfg.seed = v;
  cfg.seed_from_env = true;
}

LsaInstance build_instance(const ExperimentConfig& cfg) {
  const InstanceConfig& in = cfg.instance;
  const std::uint64_t seed = in.seed.value_or(cfg.seed);
  switch (in.kind) {
    case InstanceKind::random_hurwitz:
      return make_random_hurwitz(in.d, seed, in.spectrum_lo, in.spectrum_hi, in.noise_scale, in.n_pairs);
    case InstanceKind::lower_bound_1d: return make_gaussian_identity_1d(seed);
    case InstanceKind::td_generative: return make_td_generative(in.mdp, seed, in.td);
    case InstanceKind::custom_atoms:
      return LsaInstance::from_atoms(in.atoms, in.probabilities, InstanceKind::custom_atoms, seed);
  }
  throw ConfigError("instance.kind", "unsupported kind");
}

}  // namespace lsa::cli
