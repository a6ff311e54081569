#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lsainfer/errors.hpp"
#include "lsainfer/linalg.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/rng.hpp"

using namespace lsa;

namespace {

Mat random_matrix(int d, Rng& rng) {
  Mat M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = rng.normal();
  return M;
}

// Two-state chain, one action per state, deterministic swap.
MdpSpec two_state_swap(double discount) {
  MdpSpec m;
  m.n_states = 2;
  m.n_actions = 1;
  m.transition = {0.0, 1.0, 1.0, 0.0};
  m.reward = Mat(2, 1);
  m.reward << 1.0, -2.0;
  m.policy = Mat::Ones(2, 1);
  m.discount = discount;
  m.features = Mat::Identity(2, 2);
  return m;
}

}  // namespace

TEST_CASE("rng streams are deterministic and seed-separated") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    (void)c;
  }
  CHECK(Rng(1)() != Rng(2)());
  CHECK(derive_seed(5, 0) != derive_seed(5, 1));
  CHECK(derive_seed(5, 1) == derive_seed(5, 1));
}

TEST_CASE("rng normal draws have unit variance") {
  Rng rng(9);
  const int N = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / N) < 4.0 / std::sqrt(N));
  CHECK(std::abs(s2 / N - 1.0) < 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("solve_target on trivial systems") {
  Vec b(2);
  b << 3, -1;
  CHECK((solve_target(Mat::Identity(2, 2), b) - b).norm() == 0.0);
  Mat D = Mat::Zero(2, 2);
  D.diagonal() << 2, 4;
  Vec b2(2);
  b2 << 2, 2;
  const Vec t = solve_target(D, b2);
  CHECK(t(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("solve_target recovers a known solution of a random Hurwitz system") {
  const auto inst = make_random_hurwitz(5, 11, 0.5, 2.0, 0.0);
  const Vec ones = Vec::Ones(5);
  const Vec t = solve_target(inst.Abar(), inst.Abar() * ones);
  CHECK((t - ones).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solve_target rejects singular systems") {
  Mat S(2, 2);
  S << 1, 2, 2, 4;
  CHECK_THROWS_AS(solve_target(S, Vec::Ones(2)), SingularMatrixError);
}

TEST_CASE("noise_at_solution") {
  const auto inst = make_random_hurwitz(3, 4, 0.5, 1.5, 0.7);
  CHECK(noise_at_solution(inst.Abar(), inst.bbar(), inst).norm() < 1e-13);

  Rng rng(3);
  const Observation obs = inst.draw(rng);
  const Vec eps = noise_at_solution(obs.A, obs.b, inst);
  // Independent arithmetic path: residual of the observed system minus the mean residual.
  const Vec oracle = (obs.A * inst.theta_star() - obs.b) - (inst.Abar() * inst.theta_star() - inst.bbar());
  CHECK((eps - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gaussian 1D instance: noise equals the Gaussian draw") {
  const auto inst = make_gaussian_identity_1d(1);
  CHECK(inst.theta_star()(0) == 0.0);
  CHECK(inst.Sigma_eps()(0, 0) == 1.0);
  CHECK(inst.unbounded_noise());

  Rng r1(5), r2(5);
  for (int i = 0; i < 100; ++i) {
    const Observation a = inst.draw(r1);
    const Observation b = inst.draw(r2);
    CHECK(a.b(0) == b.b(0));
    CHECK(a.A(0, 0) == 1.0);
    // b = -xi, theta* = 0: eps = -(b - 0) = xi.
    CHECK(noise_at_solution(a.A, a.b, inst)(0) == -a.b(0));
  }

  Rng rng(1);
  const int N = 1000000;
  double mean = 0.0;
  for (int i = 0; i < N; ++i) mean += noise_at_solution(Mat::Ones(1, 1), inst.draw(rng).b, inst)(0);
  mean /= N;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(N));
}

TEST_CASE("random Hurwitz: noiseless case and spectrum") {
  const auto inst = make_random_hurwitz(1, 3, 1.0, 1.0, 0.0);
  CHECK(inst.Sigma_eps().norm() == 0.0);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const Observation o = inst.draw(rng);
    CHECK(noise_at_solution(o.A, o.b, inst).norm() == 0.0);
  }

  const auto inst3 = make_random_hurwitz(3, 7, 0.5, 1.5, 1.0);
  const Eigen::EigenSolver<Mat> es(inst3.Abar());
  for (int i = 0; i < 3; ++i) CHECK(es.eigenvalues()(i).real() > 0.0);
  CHECK(neg_is_hurwitz(inst3.Abar()));
}

TEST_CASE("random Hurwitz: exact Sigma_eps matches Monte Carlo") {
  const auto inst = make_random_hurwitz(2, 5, 0.5, 1.5, 1.0);
  Rng rng(17);
  const int N = 1000000;
  Mat m2 = Mat::Zero(2, 2);
  Mat m4 = Mat::Zero(2, 2);
  Observation scratch;
  for (int i = 0; i < N; ++i) {
    const Observation& o = inst.draw(rng, scratch);
    const Vec e = noise_at_solution(o.A, o.b, inst);
    const Mat outer = e * e.transpose();
    m2 += outer;
    m4 += outer.cwiseProduct(outer);
  }
  m2 /= N;
  m4 /= N;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((m4(i, j) - m2(i, j) * m2(i, j)) / N);
      CHECK(std::abs(m2(i, j) - inst.Sigma_eps()(i, j)) <= 5.0 * se + 1e-15);
    }
  }
}

TEST_CASE("population quantities of atom instances") {
  std::vector<Observation> atoms(2);
  atoms[0] = {Mat::Constant(1, 1, 2.0), Vec::Constant(1, 3.0)};
  atoms[1] = {Mat::Constant(1, 1, 0.0), Vec::Constant(1, -1.0)};
  const auto inst = LsaInstance::from_atoms(atoms, {0.5, 0.5});
  CHECK(inst.Abar()(0, 0) == 1.0);
  CHECK(inst.bbar()(0) == 1.0);
  CHECK(inst.theta_star()(0) == 1.0);
  // eps = (A - 1) * 1 - (b - 1) = +-1 - (+-2) = -+1.
  CHECK(inst.Sigma_eps()(0, 0) == doctest::Approx(1.0));
  CHECK(inst.eps_sup() == doctest::Approx(1.0));
  CHECK(inst.bA() == doctest::Approx(2.0));

  CHECK_THROWS_AS(LsaInstance::from_atoms(atoms, {0.5, 0.4}), ConfigError);
  std::vector<Observation> bad(1);
  bad[0] = {Mat::Constant(1, 1, -1.0), Vec::Constant(1, 0.0)};
  CHECK_THROWS_AS(LsaInstance::from_atoms(bad, {1.0}), NotHurwitzError);
}

TEST_CASE("TD generative model: Bellman oracle") {
  const MdpSpec m = two_state_swap(0.9);
  const auto inst = make_td_generative(m, 1);
  // Identity features: theta* = V solving (I - gamma P) V = r.
  const Mat P = m.policy_transition();
  const Vec V = (Mat::Identity(2, 2) - 0.9 * P).fullPivLu().solve(m.policy_reward());
  CHECK((inst.theta_star() - V).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("TD generative model: myopic case is a least-squares reward fit") {
  MdpSpec m = two_state_swap(0.0);
  m.features = Mat(2, 1);
  m.features << 1.0, 2.0;
  const auto inst = make_td_generative(m, 1);
  // Uniform states: Abar = E[phi phi^T] = (1 + 4)/2, bbar = E[r phi] = (1 - 4)/2.
  CHECK(inst.Abar()(0, 0) == doctest::Approx(2.5));
  const Vec ls = m.features.colPivHouseholderQr().solve(m.policy_reward());
  CHECK(inst.theta_star()(0) == doctest::Approx(ls(0)).epsilon(1e-12));
}

TEST_CASE("TD generative model: enumerated Abar matches sampling") {
  MdpSpec m;
  m.n_states = 3;
  m.n_actions = 2;
  m.transition.resize(18);
  Rng rng(2);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      double tot = 0.0;
      for (int sp = 0; sp < 3; ++sp) tot += (m.transition[(s * 2 + a) * 3 + sp] = rng.uniform() + 0.1);
      for (int sp = 0; sp < 3; ++sp) m.transition[(s * 2 + a) * 3 + sp] /= tot;
    }
  }
  m.reward = random_matrix(3, rng).leftCols(2);
  m.policy = Mat::Constant(3, 2, 0.5);
  m.discount = 0.8;
  m.features = Mat(3, 2);
  m.features << 1, 0, 0, 1, 1, 1;
  const auto inst = make_td_generative(m, 4);

  const int N = 1000000;
  Mat s1 = Mat::Zero(2, 2), s2 = Mat::Zero(2, 2);
  Rng draw(8);
  Observation scratch;
  for (int i = 0; i < N; ++i) {
    const Observation& o = inst.draw(draw, scratch);
    s1 += o.A;
    s2 += o.A.cwiseProduct(o.A);
  }
  s1 /= N;
  s2 /= N;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((s2(i, j) - s1(i, j) * s1(i, j)) / N);
      CHECK(std::abs(s1(i, j) - inst.Abar()(i, j)) <= 5.0 * se + 1e-15);
    }
  }
}

TEST_CASE("TD generative model: errors") {
  MdpSpec m = two_state_swap(0.9);
  m.features = Mat(2, 2);
  m.features << 1, 2, 2, 4;
  CHECK_THROWS_AS(make_td_generative(m, 1), RankDeficientError);

  TdOptions opt;
  opt.support_cap = 1;
  CHECK_THROWS_AS(make_td_generative(two_state_swap(0.9), 1, opt), ConfigError);
}

TEST_CASE("linalg helpers") {
  Mat S(2, 2);
  S << 2, 1, 1, 2;
  CHECK(spectral_norm(S) == doctest::Approx(3.0));
  Mat N(2, 2);
  N << 1, 2, 0, 1;
  CHECK(spectral_norm(N) == doctest::Approx(1.0 + std::sqrt(2.0)));
  const Mat R = sym_sqrt(S);
  CHECK((R * R - S).norm() < 1e-12);
  CHECK((sym_inv_sqrt(S) * R - Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK(lambda_min_sym(S) == doctest::Approx(1.0));
  CHECK(q_weighted_norm(N, Mat::Identity(2, 2)) == doctest::Approx(spectral_norm(N)));
}
