#include "tilq/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace tilq {

void Tolerances::validate() const {
  if (!(pinv_rtol > 0.0) || !(psd_tol > 0.0) || !(range_tol > 0.0)) {
    throw std::invalid_argument("Tolerances must be strictly positive");
  }
}

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

Matrix symmetrize(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("symmetrize: matrix must be square");
  }
  return 0.5 * (M + M.transpose());
}

Matrix pinv(const Matrix& M, const Tolerances& tol) {
  tol.validate();
  require_finite(M, "pinv");
  if (M.rows() == 0 || M.cols() == 0) {
    return Matrix::Zero(M.cols(), M.rows());
  }
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw std::runtime_error("pinv: SVD failed");
  }
  const auto& sv = svd.singularValues();
  const double cutoff =
      tol.pinv_rtol * sv.maxCoeff() * static_cast<double>(std::max(M.rows(), M.cols()));
  Vector inv_sv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

double min_eig_sym(const Matrix& M) {
  const Matrix S = symmetrize(M);
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("min_eig_sym: eigen-decomposition failed");
  }
  return es.eigenvalues().minCoeff();
}

double sym_norm(const Matrix& M) {
  const Matrix S = symmetrize(M);
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("sym_norm: eigen-decomposition failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_psd(const Matrix& M, const Tolerances& tol) {
  tol.validate();
  const Matrix S = symmetrize(M);
  return min_eig_sym(S) >= -tol.psd_tol * std::max(1.0, sym_norm(S));
}

bool is_pd(const Matrix& M, const Tolerances& tol) {
  tol.validate();
  const Matrix S = symmetrize(M);
  return min_eig_sym(S) > tol.psd_tol * std::max(1.0, sym_norm(S));
}

double range_residual(const Matrix& O, const Vector& v, const Tolerances& tol) {
  if (O.rows() != v.size()) {
    throw std::invalid_argument("range test: dimension mismatch");
  }
  return (O * (pinv(O, tol) * v) - v).norm();
}

bool in_range(const Matrix& O, const Vector& v, const Tolerances& tol) {
  return range_residual(O, v, tol) <= tol.range_tol * std::max(1.0, v.norm());
}

double sv_ratio(const Matrix& M) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  if (smax == 0.0) return 0.0;
  return sv.minCoeff() / smax;
}

bool is_invertible(const Matrix& M, double rtol) {
  if (M.rows() != M.cols() || M.rows() == 0) return false;
  return sv_ratio(M) > rtol;
}

}  // namespace tilq
