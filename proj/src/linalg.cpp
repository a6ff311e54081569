#include "lsainfer/linalg.hpp"

#include <cmath>

#include "lsainfer/errors.hpp"

namespace lsa {

namespace {

void check_pivots(const Eigen::FullPivLU<Mat>& lu, const Mat& A, const char* origin) {
  const double scale = A.cwiseAbs().maxCoeff();
  const auto& U = lu.matrixLU();
  double min_pivot = std::abs(U(0, 0));
  for (Eigen::Index i = 1; i < U.rows(); ++i) min_pivot = std::min(min_pivot, std::abs(U(i, i)));
  if (!(scale > 0.0) || min_pivot < 1e-14 * scale) {
    throw SingularMatrixError(origin, "matrix is singular (pivot " + std::to_string(min_pivot) +
                                          ", scale " + std::to_string(scale) + ")");
  }
}

}  // namespace

Vec solve_checked(const Mat& A, const Vec& b, const char* origin) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw DimensionError(origin, "solve: shape mismatch");
  }
  Eigen::FullPivLU<Mat> lu(A);
  check_pivots(lu, A, origin);
  return lu.solve(b);
}

Mat inverse_checked(const Mat& A, const char* origin) {
  if (A.rows() != A.cols()) throw DimensionError(origin, "inverse: matrix not square");
  Eigen::FullPivLU<Mat> lu(A);
  check_pivots(lu, A, origin);
  return lu.inverse();
}

bool is_symmetric(const Mat& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  if (is_symmetric(M)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  const Mat G = M.transpose() * M;
  Vec v = Vec::Ones(G.cols()) / std::sqrt(static_cast<double>(G.cols()));
  double prev = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = G * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 0 && std::abs(nw - prev) <= 1e-10 * nw) return std::sqrt(nw);
    prev = nw;
  }
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double lambda_min_sym(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double lambda_max_sym(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Mat sym_sqrt(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S));
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Mat sym_inv_sqrt(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S));
  if (es.eigenvalues()(0) <= 0.0) throw SingularMatrixError("linalg", "inverse square root of non-SPD matrix");
  const Vec r = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
}

double q_weighted_norm(const Mat& M, const Mat& Q) {
  return spectral_norm(sym_sqrt(Q) * M * sym_inv_sqrt(Q));
}

double min_eigen_real_part(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().real().minCoeff();
}

bool neg_is_hurwitz(const Mat& A) { return A.rows() == A.cols() && min_eigen_real_part(A) > 0.0; }

}  // namespace lsa
