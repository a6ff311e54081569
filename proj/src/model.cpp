#include "lsainfer/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lsainfer/errors.hpp"

namespace lsa {

std::string to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::random_hurwitz: return "random_hurwitz";
    case InstanceKind::lower_bound_1d: return "lower_bound_1d";
    case InstanceKind::td_generative: return "td_generative";
    case InstanceKind::custom_atoms: return "custom_atoms";
  }
  return "unknown";
}

Vec solve_target(const Mat& Abar, const Vec& bbar) {
  Vec theta = solve_checked(Abar, bbar, "model.solve_target");
  const double residual = (Abar * theta - bbar).norm();
  if (residual > 1e-10 * (1.0 + bbar.norm())) {
    throw SingularMatrixError("model.solve_target",
                              "residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return theta;
}

Vec noise_at_solution(const Mat& A, const Vec& b, const LsaInstance& instance) {
  const int d = instance.dim();
  if (A.rows() != d || A.cols() != d || b.size() != d) {
    throw DimensionError("model.noise_at_solution", "observation shape does not match instance dim " +
                                                        std::to_string(d));
  }
  return (A - instance.Abar()) * instance.theta_star() - (b - instance.bbar());
}

LsaInstance LsaInstance::from_atoms(std::vector<Observation> atoms, std::vector<double> probabilities,
                                    InstanceKind kind, std::uint64_t seed) {
  constexpr const char* origin = "model.from_atoms";
  if (atoms.empty()) throw ConfigError(origin, "no atoms");
  if (atoms.size() != probabilities.size()) throw DimensionError(origin, "atoms/probabilities length mismatch");
  const auto d = atoms.front().A.rows();
  if (d < 1) throw DimensionError(origin, "dimension must be positive");
  double total = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (atoms[j].A.rows() != d || atoms[j].A.cols() != d || atoms[j].b.size() != d) {
      throw DimensionError(origin, "atom " + std::to_string(j) + " has inconsistent shape");
    }
    if (!(probabilities[j] > 0.0)) throw ConfigError(origin, "atom probabilities must be positive");
    total += probabilities[j];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError(origin, "atom probabilities sum to " + std::to_string(total));

  LsaInstance inst;
  inst.dim_ = static_cast<int>(d);
  inst.kind_ = kind;
  inst.seed_ = seed;
  inst.Abar_ = Mat::Zero(d, d);
  inst.bbar_ = Vec::Zero(d);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    inst.Abar_ += probabilities[j] * atoms[j].A;
    inst.bbar_ += probabilities[j] * atoms[j].b;
  }
  if (!neg_is_hurwitz(inst.Abar_)) {
    throw NotHurwitzError(origin, "-Abar is not Hurwitz (min real part " +
                                      std::to_string(min_eigen_real_part(inst.Abar_)) + ")");
  }
  inst.theta_star_ = solve_target(inst.Abar_, inst.bbar_);
  inst.Sigma_eps_ = Mat::Zero(d, d);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const Mat dA = atoms[j].A - inst.Abar_;
    const Vec eps = dA * inst.theta_star_ - (atoms[j].b - inst.bbar_);
    inst.Sigma_eps_ += probabilities[j] * eps * eps.transpose();
    inst.bA_ = std::max({inst.bA_, spectral_norm(atoms[j].A), spectral_norm(dA)});
    inst.eps_sup_ = std::max(inst.eps_sup_, eps.norm());
  }
  inst.Sigma_eps_ = symmetrize(inst.Sigma_eps_);

  inst.uniform_atoms_ = std::all_of(probabilities.begin(), probabilities.end(),
                                    [&](double p) { return p == probabilities.front(); });
  inst.cumulative_.resize(probabilities.size());
  std::partial_sum(probabilities.begin(), probabilities.end(), inst.cumulative_.begin());
  inst.cumulative_.back() = 1.0;
  inst.atoms_ = std::move(atoms);
  inst.probs_ = std::move(probabilities);
  return inst;
}

LsaInstance LsaInstance::gaussian_identity_1d(std::uint64_t seed) {
  LsaInstance inst;
  inst.dim_ = 1;
  inst.kind_ = InstanceKind::lower_bound_1d;
  inst.seed_ = seed;
  inst.unbounded_noise_ = true;
  inst.Abar_ = Mat::Ones(1, 1);
  inst.bbar_ = Vec::Zero(1);
  inst.theta_star_ = Vec::Zero(1);
  inst.Sigma_eps_ = Mat::Ones(1, 1);
  inst.bA_ = 1.0;
  inst.eps_sup_ = std::numeric_limits<double>::infinity();
  return inst;
}

std::size_t LsaInstance::draw_index(Rng& rng) const {
  const double u = rng.uniform();
  if (uniform_atoms_) {
    return std::min(atoms_.size() - 1, static_cast<std::size_t>(u * static_cast<double>(atoms_.size())));
  }
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min(atoms_.size() - 1, static_cast<std::size_t>(it - cumulative_.begin()));
}

const Observation& LsaInstance::draw(Rng& rng, Observation& scratch) const {
  if (is_atomic()) return atoms_[draw_index(rng)];
  // Gaussian 1D lower-bound instance.
  scratch.A.setOnes(1, 1);
  scratch.b.resize(1);
  scratch.b(0) = -rng.normal();
  return scratch;
}

LsaInstance make_gaussian_identity_1d(std::uint64_t seed) { return LsaInstance::gaussian_identity_1d(seed); }

LsaInstance make_random_hurwitz(int d, std::uint64_t seed, double lo, double hi, double noise_scale, int n_pairs) {
  constexpr const char* origin = "model.make_random_hurwitz";
  if (d < 1) throw ConfigError(origin, "d must be >= 1");
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError(origin, "spectrum_range must satisfy 0 < lo <= hi");
  if (!(noise_scale >= 0.0)) throw ConfigError(origin, "noise_scale must be nonnegative");
  const int pairs = n_pairs > 0 ? n_pairs : 2 * d;
  const double sd = std::sqrt(static_cast<double>(d));

  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    auto unif = [&rng] { return 2.0 * rng.uniform() - 1.0; };

    // Abar = V diag(lambda) V^{-1} with V a mild perturbation of I.
    Vec lambda(d);
    for (int i = 0; i < d; ++i) lambda(i) = lo + (hi - lo) * rng.uniform();
    Mat V = Mat::Identity(d, d);
    if (d > 1) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) V(i, j) += 0.5 * rng.normal() / sd;
    }
    Eigen::JacobiSVD<Mat> svd(V);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 10.0) continue;
    const Mat Abar = V * lambda.asDiagonal() * inverse_checked(V, origin);

    Vec theta(d);
    for (int i = 0; i < d; ++i) theta(i) = rng.normal();
    const Vec bbar = Abar * theta;

    std::vector<Observation> atoms;
    atoms.reserve(2 * static_cast<std::size_t>(pairs));
    for (int j = 0; j < pairs; ++j) {
      Mat E(d, d);
      Vec e(d);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) E(r, c) = noise_scale * unif() / sd;
        e(r) = noise_scale * unif();
      }
      atoms.push_back({Abar + E, bbar + e});
      atoms.push_back({Abar - E, bbar - e});
    }
    std::vector<double> probs(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    LsaInstance inst = LsaInstance::from_atoms(std::move(atoms), std::move(probs), InstanceKind::random_hurwitz, seed);
    if (noise_scale > 0.0) {
      const double scale = std::max(1e-300, inst.Sigma_eps().trace());
      if (lambda_min_sym(inst.Sigma_eps()) <= 1e-8 * scale) continue;
    }
    return inst;
  }
  throw SingularMatrixError(origin, "could not draw an atom set with positive definite Sigma_eps in 16 attempts");
}

void MdpSpec::validate() const {
  constexpr const char* origin = "model.MdpSpec";
  if (n_states < 1 || n_actions < 1) throw ConfigError(origin, "n_states and n_actions must be positive");
  const auto S = static_cast<std::size_t>(n_states);
  const auto A = static_cast<std::size_t>(n_actions);
  if (transition.size() != S * A * S) throw ConfigError(origin, "transitions must have shape [S][A][S]");
  if (reward.rows() != n_states || reward.cols() != n_actions) throw ConfigError(origin, "rewards must have shape [S][A]");
  if (policy.rows() != n_states || policy.cols() != n_actions) throw ConfigError(origin, "policy must have shape [S][A]");
  if (features.rows() != n_states || features.cols() < 1) throw ConfigError(origin, "features must have shape [S][d]");
  if (!(discount > 0.0 && discount < 1.0) && discount != 0.0) {
    throw ConfigError(origin, "discount must lie in [0, 1)");
  }
  for (int s = 0; s < n_states; ++s) {
    double prow = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      if (policy(s, a) < 0.0) throw ConfigError(origin, "negative policy probability");
      prow += policy(s, a);
      double trow = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        if (p(s, a, s2) < 0.0) throw ConfigError(origin, "negative transition probability");
        trow += p(s, a, s2);
      }
      if (std::abs(trow - 1.0) > 1e-12) {
        throw ConfigError(origin, "transition row (" + std::to_string(s) + "," + std::to_string(a) + ") sums to " +
                                      std::to_string(trow));
      }
    }
    if (std::abs(prow - 1.0) > 1e-12) throw ConfigError(origin, "policy row " + std::to_string(s) + " does not sum to 1");
  }
  Eigen::ColPivHouseholderQR<Mat> qr(features);
  if (qr.rank() < features.cols()) {
    throw RankDeficientError(origin, "feature matrix has rank " + std::to_string(qr.rank()) + " < d = " +
                                         std::to_string(features.cols()));
  }
}

Mat MdpSpec::policy_transition() const {
  Mat P = Mat::Zero(n_states, n_states);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      for (int s2 = 0; s2 < n_states; ++s2) P(s, s2) += policy(s, a) * p(s, a, s2);
  return P;
}

Vec MdpSpec::policy_reward() const {
  Vec r = Vec::Zero(n_states);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) r(s) += policy(s, a) * reward(s, a);
  return r;
}

LsaInstance make_td_generative(const MdpSpec& mdp, std::uint64_t seed, const TdOptions& options) {
  constexpr const char* origin = "model.make_td_generative";
  mdp.validate();
  std::vector<double> mu = options.state_distribution;
  if (mu.empty()) mu.assign(static_cast<std::size_t>(mdp.n_states), 1.0 / mdp.n_states);
  if (mu.size() != static_cast<std::size_t>(mdp.n_states)) throw ConfigError(origin, "state_distribution has wrong length");
  if (std::abs(std::accumulate(mu.begin(), mu.end(), 0.0) - 1.0) > 1e-12) {
    throw ConfigError(origin, "state_distribution must sum to 1");
  }

  std::size_t support = 0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        if (mu[s] * mdp.policy(s, a) * mdp.p(s, a, s2) > 0.0) ++support;
  if (support > options.support_cap) {
    throw ConfigError(origin, "support size " + std::to_string(support) + " exceeds cap " +
                                  std::to_string(options.support_cap));
  }

  std::vector<Observation> atoms;
  std::vector<double> probs;
  atoms.reserve(support);
  probs.reserve(support);
  for (int s = 0; s < mdp.n_states; ++s) {
    const Vec phi = mdp.features.row(s).transpose();
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double prob = mu[s] * mdp.policy(s, a) * mdp.p(s, a, s2);
        if (!(prob > 0.0)) continue;
        const Vec phi_next = mdp.features.row(s2).transpose();
        atoms.push_back({phi * (phi - mdp.discount * phi_next).transpose(), mdp.reward(s, a) * phi});
        probs.push_back(prob);
      }
    }
  }
  // Renormalize away the rounding of the triple products.
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return LsaInstance::from_atoms(std::move(atoms), std::move(probs), InstanceKind::td_generative, seed);
}

}  // namespace lsa
