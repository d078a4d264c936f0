#pragma once

#include <Eigen/Dense>

namespace tilq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical slack used by every solver and classifier. The underlying
/// conditions are exact (PSD cones, range membership, Penrose identities);
/// these thresholds separate genuine sign information from rounding noise.
struct Tolerances {
  double pinv_rtol = 1e-12;  ///< relative singular-value cutoff for pinv
  double psd_tol = 1e-8;     ///< eigenvalue slack, scaled by max(1, ||M||)
  double range_tol = 1e-8;   ///< range-membership residual slack, scaled

  void validate() const;  // throws std::invalid_argument unless all > 0
};

/// (M + M^T) / 2. Throws on non-square input.
Matrix symmetrize(const Matrix& M);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// pinv_rtol * sigma_max * max(rows, cols) are treated as zero.
Matrix pinv(const Matrix& M, const Tolerances& tol = {});

/// Smallest eigenvalue of a symmetric matrix (input is symmetrized first).
double min_eig_sym(const Matrix& M);

/// Largest |eigenvalue| of the symmetrized input; scale for PSD slack.
double sym_norm(const Matrix& M);

/// M is PSD up to slack: min_eig >= -psd_tol * max(1, ||M||).
bool is_psd(const Matrix& M, const Tolerances& tol = {});

/// M is PD with margin: min_eig > psd_tol * max(1, ||M||).
bool is_pd(const Matrix& M, const Tolerances& tol = {});

/// v lies in the column space of O: ||O O^+ v - v|| <= range_tol * max(1, ||v||).
bool in_range(const Matrix& O, const Vector& v, const Tolerances& tol = {});

/// Residual of the range test above (unscaled norm).
double range_residual(const Matrix& O, const Vector& v, const Tolerances& tol = {});

/// ratio sigma_min / sigma_max (0 for a zero matrix).
double sv_ratio(const Matrix& M);

/// Invertibility with the same spirit as the pinv cutoff:
/// sigma_min > rtol * sigma_max.
bool is_invertible(const Matrix& M, double rtol = 1e-10);

/// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Matrix& M, const char* what);

}  // namespace tilq
