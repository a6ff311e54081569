#pragma once

#include <Eigen/Dense>

namespace lsa {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Solves A x = b with full pivoting. Throws SingularMatrixError when the
/// smallest pivot falls below 1e-14 times the largest absolute entry of A.
Vec solve_checked(const Mat& A, const Vec& b, const char* origin = "linalg");

/// Inverse with the same singularity rule as solve_checked.
Mat inverse_checked(const Mat& A, const char* origin = "linalg");

/// Largest singular value. Symmetric inputs go through a self-adjoint
/// eigendecomposition; otherwise power iteration on M^T M (relative
/// tolerance 1e-10, at most 1e4 iterations) with an SVD fallback.
double spectral_norm(const Mat& M);

bool is_symmetric(const Mat& M, double tol = 1e-12);

double lambda_min_sym(const Mat& S);
double lambda_max_sym(const Mat& S);

/// Symmetric square root of an SPD matrix and its inverse.
Mat sym_sqrt(const Mat& S);
Mat sym_inv_sqrt(const Mat& S);

/// ||Q^{1/2} M Q^{-1/2}||, the operator norm induced by x -> sqrt(x^T Q x).
double q_weighted_norm(const Mat& M, const Mat& Q);

/// True when every eigenvalue of A has strictly positive real part
/// (i.e. -A is Hurwitz).
bool neg_is_hurwitz(const Mat& A);

/// Smallest real part across eigenvalues of A.
double min_eigen_real_part(const Mat& A);

inline Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

}  // namespace lsa
