#include "skytrack/transforms.hpp"

#include <cmath>
#include <limits>

namespace skytrack {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void finish_cov_zz(TransformResult& out, const MeasurementModel& model) {
  out.cov_zz = symmetrize(out.cov_zz + model.R());
  out.cov_zz_repaired = repair_psd(out.cov_zz);
}

}  // namespace

TransformResult transform_linearize(const MeasurementModel& model, const GaussianDensity& prior) {
  TransformResult out;
  out.z_mean = model.evaluate(prior.mean());
  const Matrix H = model.jacobian(prior.mean());
  if (!H.allFinite()) throw NumericalError("measurement Jacobian is not finite");
  out.cov_zz = H * prior.cov() * H.transpose();
  out.cov_xz = prior.cov() * H.transpose();
  finish_cov_zz(out, model);
  return out;
}

SigmaPointSet unscented_points(const GaussianDensity& prior, double alpha, double beta,
                               double kappa) {
  const Eigen::Index n = prior.dim();
  const double nd = static_cast<double>(n);
  const double scale = alpha * alpha * (nd + kappa);
  if (!(scale > 0.0)) throw InvalidArgument("unscented transform needs alpha^2 (n + kappa) > 0");
  const double lambda = scale - nd;

  const SqrtFactor root = robust_sqrt(prior.cov());
  const double spread = std::sqrt(scale);

  SigmaPointSet set;
  set.points.resize(n, 2 * n + 1);
  set.weights_mean.resize(2 * n + 1);
  set.points.col(0) = prior.mean();
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.col(1 + i) = prior.mean() + spread * root.factor.col(i);
    set.points.col(1 + n + i) = prior.mean() - spread * root.factor.col(i);
  }
  set.weights_mean.setConstant(1.0 / (2.0 * scale));
  set.weights_mean[0] = lambda / scale;
  set.weights_cov = set.weights_mean;
  set.weights_cov[0] += 1.0 - alpha * alpha + beta;
  return set;
}

SigmaPointSet cubature_points(const GaussianDensity& prior) {
  const Eigen::Index n = prior.dim();
  if (n == 0) throw InvalidArgument("cubature rule needs a non-empty state");
  const SqrtFactor root = robust_sqrt(prior.cov());
  const double spread = std::sqrt(static_cast<double>(n));

  SigmaPointSet set;
  set.points.resize(n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.col(i) = prior.mean() + spread * root.factor.col(i);
    set.points.col(n + i) = prior.mean() - spread * root.factor.col(i);
  }
  set.weights_mean = Vector::Constant(2 * n, 1.0 / (2.0 * static_cast<double>(n)));
  set.weights_cov = set.weights_mean;
  return set;
}

SifRuleDraw draw_sif_rule(Eigen::Index n, Rng& rng) {
  if (n <= 0) throw InvalidArgument("rule dimension must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gauss(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) gauss(r, c) = normal(rng);

  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ();
  const Matrix& packed = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i)
    if (packed(i, i) < 0.0) q.col(i) = -q.col(i);

  std::chi_squared_distribution<double> chi2(static_cast<double>(n + 2));
  double radius = 0.0;
  while (!(radius > 0.0)) radius = std::sqrt(chi2(rng));
  return {std::move(q), radius};
}

SigmaPointSet sif_points(const Vector& mean, const Matrix& sqrt_cov, const SifRuleDraw& draw) {
  const Eigen::Index n = mean.size();
  if (draw.rotation.rows() != n || draw.rotation.cols() != n)
    throw InvalidArgument("rotation dimension does not match the state");
  if (!(draw.radius > 0.0)) throw InvalidArgument("rule radius must be positive");

  const Matrix directions = draw.radius * sqrt_cov * draw.rotation;
  const double r2 = draw.radius * draw.radius;

  SigmaPointSet set;
  set.points.resize(n, 2 * n + 1);
  set.points.col(0) = mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.col(1 + i) = mean + directions.col(i);
    set.points.col(1 + n + i) = mean - directions.col(i);
  }
  set.weights_mean = Vector::Constant(2 * n + 1, 1.0 / (2.0 * r2));
  set.weights_mean[0] = 1.0 - static_cast<double>(n) / r2;
  set.weights_cov = set.weights_mean;
  return set;
}

SigmaPointSet sif_points(const GaussianDensity& prior, const SifRuleDraw& draw) {
  return sif_points(prior.mean(), robust_sqrt(prior.cov()).factor, draw);
}

namespace {

/// Residuals of h at every point, relative to h(center).
Matrix point_residuals(const MeasurementModel& model, const Vector& z_center,
                       const SigmaPointSet& points) {
  Matrix res(model.meas_dim(), points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i)
    res.col(i) = model.residual(model.evaluate(points.points.col(i)), z_center);
  return res;
}

}  // namespace

TransformResult points_transform(const MeasurementModel& model, const GaussianDensity& prior,
                                 const SigmaPointSet& points) {
  if (points.points.rows() != prior.dim())
    throw InvalidArgument("point dimension does not match the prior");
  if (points.weights_mean.size() != points.size() || points.weights_cov.size() != points.size())
    throw InvalidArgument("weight count does not match point count");

  const Vector z_center = model.evaluate(prior.mean());
  const Matrix res = point_residuals(model, z_center, points);
  const Vector offset = res * points.weights_mean;
  const Matrix centered = res.colwise() - offset;
  const Matrix dx = points.points.colwise() - prior.mean();

  TransformResult out;
  out.z_mean = model.wrap(z_center + offset);
  out.cov_zz = centered * points.weights_cov.asDiagonal() * centered.transpose();
  out.cov_xz = dx * points.weights_cov.asDiagonal() * centered.transpose();
  finish_cov_zz(out, model);
  return out;
}

TransformResult sif_transform(const MeasurementModel& model, const GaussianDensity& prior,
                              int iterations, Rng& rng, SifDiagnostics* diagnostics) {
  if (iterations < 1) throw InvalidArgument("stochastic integration needs at least one iteration");
  const Eigen::Index n = prior.dim();
  const Eigen::Index nz = model.meas_dim();

  const SqrtFactor root = robust_sqrt(prior.cov());
  const Vector z_center = model.evaluate(prior.mean());

  // Running means of the three integrands, all taken about h(mean).
  Vector offset = Vector::Zero(nz);
  Matrix second = Matrix::Zero(nz, nz);
  Matrix cross = Matrix::Zero(n, nz);
  Vector offset_m2 = Vector::Zero(nz);

  for (int m = 1; m <= iterations; ++m) {
    const SigmaPointSet set = sif_points(prior.mean(), root.factor, draw_sif_rule(n, rng));
    const Matrix res = point_residuals(model, z_center, set);
    const Matrix dx = set.points.colwise() - prior.mean();
    const auto& w = set.weights_mean;

    const Vector offset_m = res * w;
    const Matrix second_m = res * w.asDiagonal() * res.transpose();
    const Matrix cross_m = dx * w.asDiagonal() * res.transpose();

    const double inv_m = 1.0 / static_cast<double>(m);
    const Vector delta = offset_m - offset;
    offset += delta * inv_m;
    offset_m2 += delta.cwiseProduct(offset_m - offset);
    second += (second_m - second) * inv_m;
    cross += (cross_m - cross) * inv_m;
  }

  TransformResult out;
  out.prior_repair = root.repair;
  out.z_mean = model.wrap(z_center + offset);
  out.cov_zz = second - offset * offset.transpose();
  out.cov_xz = cross;
  finish_cov_zz(out, model);

  if (diagnostics) {
    diagnostics->iterations = iterations;
    if (iterations > 1) {
      const double its = static_cast<double>(iterations);
      diagnostics->z_mean_std_error = (offset_m2 / (its - 1.0) / its).cwiseSqrt();
    } else {
      diagnostics->z_mean_std_error = Vector::Constant(nz, std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string kind_name(const FilterKind& kind) {
  return std::visit(Overloaded{[](const EkfKind&) { return std::string("EKF"); },
                               [](const UkfKind&) { return std::string("UKF"); },
                               [](const CkfKind&) { return std::string("CKF"); },
                               [](const SifKind&) { return std::string("SIF"); }},
                    kind);
}

void validate_kind(const FilterKind& kind) {
  if (const auto* ukf = std::get_if<UkfKind>(&kind)) {
    if (!(ukf->alpha > 0.0)) throw InvalidArgument("UKF alpha must be positive");
  }
  if (const auto* sif = std::get_if<SifKind>(&kind)) {
    if (sif->iterations < 1) throw InvalidArgument("SIF iterations must be at least 1");
  }
}

MomentTransform::MomentTransform(FilterKind kind, Rng& rng) : kind_(kind), rng_(&rng) {
  validate_kind(kind_);
}

TransformResult MomentTransform::apply(const MeasurementModel& model,
                                       const GaussianDensity& prior) {
  ++calls_;
  return std::visit(
      Overloaded{
          [&](const EkfKind&) { return transform_linearize(model, prior); },
          [&](const UkfKind& k) {
            const double kappa = k.kappa.value_or(3.0 - static_cast<double>(prior.dim()));
            return points_transform(model, prior, unscented_points(prior, k.alpha, k.beta, kappa));
          },
          [&](const CkfKind&) { return points_transform(model, prior, cubature_points(prior)); },
          [&](const SifKind& k) { return sif_transform(model, prior, k.iterations, *rng_); }},
      kind_);
}

}  // namespace skytrack
