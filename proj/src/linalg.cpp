#include "skytrack/linalg.hpp"

#include <algorithm>

namespace skytrack {

namespace {

double jitter_for(const Matrix& cov) {
  const auto n = static_cast<double>(cov.rows());
  const double tr = cov.trace();
  return n > 0 && tr > 0 ? 1e-12 * tr / n : 1e-300;
}

}  // namespace

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SqrtFactor robust_sqrt(const Matrix& cov) {
  if (!cov.allFinite()) throw NumericalError("covariance has non-finite entries");
  const Matrix sym = symmetrize(cov);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), RepairKind::kNone};

  const Matrix jittered =
      sym + jitter_for(sym) * Matrix::Identity(sym.rows(), sym.cols());
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), RepairKind::kJitter};

  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return {es.eigenvectors() * root.asDiagonal(), RepairKind::kEigenClamp};
}

Matrix clamp_eigenvalues(const Matrix& cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector lambda = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * lambda.asDiagonal() *
                    es.eigenvectors().transpose());
}

bool repair_psd(Matrix& cov) {
  cov = symmetrize(cov);
  if (cov.size() == 0) return false;
  if (min_eigenvalue(cov) >= 0.0) return false;
  const double floor = std::max(1e-12 * std::abs(cov.trace()), 1e-300);
  cov = clamp_eigenvalues(cov, floor);
  return true;
}

bool is_psd(const Matrix& cov) {
  if (!cov.allFinite()) return false;
  if (cov.size() == 0) return true;
  const Matrix shifted =
      symmetrize(cov) + jitter_for(cov) * Matrix::Identity(cov.rows(), cov.cols());
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

}  // namespace skytrack
