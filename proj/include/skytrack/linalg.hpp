#pragma once

#include "skytrack/common.hpp"

namespace skytrack {

enum class RepairKind { kNone, kJitter, kEigenClamp };

/// Square-root factor S with S * S^T = P (lower-triangular unless an
/// eigenvalue clamp was needed).
struct SqrtFactor {
  Matrix factor;
  RepairKind repair = RepairKind::kNone;
};

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Matrix& symmetric);

/// Cholesky with the repair ladder: plain, then jitter 1e-12*trace/n*I, then
/// negative eigenvalues clamped to zero. Throws NumericalError only for
/// non-finite input.
SqrtFactor robust_sqrt(const Matrix& cov);

/// Symmetrizes and raises every eigenvalue below `floor` to `floor`.
Matrix clamp_eigenvalues(const Matrix& cov, double floor);

/// Symmetrizes `cov`; if its smallest eigenvalue is negative, clamps at
/// 1e-12*trace. Returns true when a clamp happened.
bool repair_psd(Matrix& cov);

/// Independent PSD check used for invariants: Cholesky of
/// cov + 1e-12*trace/n*I.
bool is_psd(const Matrix& cov);

}  // namespace skytrack
