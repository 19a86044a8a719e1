#pragma once

#include "skytrack/common.hpp"
#include "skytrack/linalg.hpp"
#include "skytrack/models.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>

namespace skytrack {

/// Weighted point rule. Points are stored column-wise.
struct SigmaPointSet {
  Matrix points;
  Vector weights_mean;
  Vector weights_cov;

  Eigen::Index size() const { return points.cols(); }
};

/// One random draw of the stochastic spherical-radial rule.
struct SifRuleDraw {
  Matrix rotation;  // orthogonal
  double radius = 0.0;
};

/// Predicted measurement moments under a Gaussian state.
struct TransformResult {
  Vector z_mean;
  Matrix cov_zz;  // includes R
  Matrix cov_xz;
  RepairKind prior_repair = RepairKind::kNone;
  bool cov_zz_repaired = false;
};

TransformResult transform_linearize(const MeasurementModel& model, const GaussianDensity& prior);

SigmaPointSet unscented_points(const GaussianDensity& prior, double alpha, double beta,
                               double kappa);
SigmaPointSet cubature_points(const GaussianDensity& prior);

/// Draws a Haar rotation (QR of a standard normal matrix, sign-corrected)
/// and a chi(n+2) radius.
SifRuleDraw draw_sif_rule(Eigen::Index n, Rng& rng);

/// Center plus 2n points mean +- radius * L * rotation * e_i, weights
/// 1 - n/radius^2 and 1/(2 radius^2).
SigmaPointSet sif_points(const GaussianDensity& prior, const SifRuleDraw& draw);
SigmaPointSet sif_points(const Vector& mean, const Matrix& sqrt_cov, const SifRuleDraw& draw);

/// Evaluates the three moment integrals on a point set. Angle components
/// are averaged through wrapped residuals about h(prior mean).
TransformResult points_transform(const MeasurementModel& model, const GaussianDensity& prior,
                                 const SigmaPointSet& points);

struct SifDiagnostics {
  Vector z_mean_std_error;  // spread of per-iteration estimates / sqrt(iterations)
  int iterations = 0;
};

/// Stochastic integration: running mean over `iterations` independent rule
/// draws. `diagnostics`, when given, receives the per-component standard
/// error of the measurement mean.
TransformResult sif_transform(const MeasurementModel& model, const GaussianDensity& prior,
                              int iterations, Rng& rng, SifDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------

struct EkfKind {};
struct UkfKind {
  double alpha = 0.5;
  double beta = 2.0;
  std::optional<double> kappa;  // 3 - n when empty
};
struct CkfKind {};
struct SifKind {
  int iterations = 10;
};

using FilterKind = std::variant<EkfKind, UkfKind, CkfKind, SifKind>;

std::string kind_name(const FilterKind& kind);
void validate_kind(const FilterKind& kind);

/// Moment-transform strategy bound to a filter kind. The stochastic rule
/// draws from the supplied random source; the source must outlive this.
class MomentTransform {
 public:
  MomentTransform(FilterKind kind, Rng& rng);

  TransformResult apply(const MeasurementModel& model, const GaussianDensity& prior);

  const FilterKind& kind() const { return kind_; }
  std::uint64_t calls() const { return calls_; }

 private:
  FilterKind kind_;
  Rng* rng_;
  std::uint64_t calls_ = 0;
};

}  // namespace skytrack
