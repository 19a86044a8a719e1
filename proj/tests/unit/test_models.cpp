#include "skytrack/linalg.hpp"
#include "skytrack/models.hpp"

#include <doctest.h>

#include <numbers>

using namespace skytrack;

namespace {

Matrix sigma_block(double dt) {
  Matrix s(2, 2);
  s << std::pow(dt, 3) / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
  return s;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double a = wrap_angle(u(gen));
    CHECK(a > -std::numbers::pi);
    CHECK(a <= std::numbers::pi);
  }
}

TEST_CASE("GaussianDensity validates its covariance") {
  CHECK_NOTHROW(GaussianDensity(Vector::Zero(2), Matrix::Identity(2, 2)));
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(3), Matrix::Identity(2, 2)), InvalidArgument);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(2), asym), InvalidArgument);
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(GaussianDensity(Vector::Zero(2), indefinite), NumericalError);
  Matrix tiny_asym = Matrix::Identity(2, 2);
  tiny_asym(0, 1) = 1e-12;
  const GaussianDensity g(Vector::Zero(2), tiny_asym);
  CHECK((g.cov() - g.cov().transpose()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("NCV dynamics at the scenario parameters") {
  const LinearDynamics d = build_ncv_2d(1.0, 0.05, 0.05);
  Matrix F(4, 4);
  F << 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1;
  CHECK(d.F == F);
  Matrix Q = Matrix::Zero(4, 4);
  Q.block(0, 0, 2, 2) = 0.05 * sigma_block(1.0);
  Q.block(2, 2, 2, 2) = 0.05 * sigma_block(1.0);
  CHECK((d.Q - Q).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(d.Q(0, 0) == doctest::Approx(0.05 / 3.0));
  CHECK(d.Q(0, 1) == doctest::Approx(0.025));

  CHECK(build_ncv_2d(1.0, 0.0, 0.0).Q.isZero(0.0));

  const LinearDynamics d2 = build_ncv_2d(2.0, 1.0, 1.0);
  CHECK(d2.Q(0, 0) == doctest::Approx(8.0 / 3.0));
  CHECK(d2.Q(0, 1) == doctest::Approx(2.0));
  CHECK(d2.Q(1, 1) == doctest::Approx(2.0));

  CHECK_THROWS_AS(build_ncv_2d(0.0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(build_ncv_2d(-1.0, 1, 1), InvalidArgument);
}

TEST_CASE("turn-rate dynamics closed form") {
  const double w = 0.349066;
  const LinearDynamics d = build_turn_rate_2d(1.0, w, 0.05, 0.05);
  // Independent evaluation of the closed-form entries.
  CHECK(d.F(0, 1) == doctest::Approx(std::sin(w) / w).epsilon(1e-12));
  CHECK(d.F(1, 1) == doctest::Approx(std::cos(w)).epsilon(1e-12));
  CHECK(d.F(2, 1) == doctest::Approx((1 - std::cos(w)) / w).epsilon(1e-12));
  CHECK(d.F(3, 1) == doctest::Approx(std::sin(w)).epsilon(1e-12));
  CHECK(d.F(0, 3) == doctest::Approx(-(1 - std::cos(w)) / w).epsilon(1e-12));
  CHECK(d.F(1, 3) == doctest::Approx(-std::sin(w)).epsilon(1e-12));
  // Frozen values at 20 deg/s, dt = 1.
  CHECK(std::abs(d.F(0, 1) - 0.9798155) < 1e-6);
  CHECK(std::abs(d.F(1, 1) - 0.9396926) < 1e-6);
  CHECK(std::abs(d.F(2, 1) - 0.1727680) < 1e-6);
  CHECK(std::abs(d.F(3, 1) - 0.3420203) < 1e-6);
  CHECK((d.Q - build_ncv_2d(1.0, 0.05, 0.05).Q).cwiseAbs().maxCoeff() == 0.0);

  const LinearDynamics neg = build_turn_rate_2d(1.0, -w, 0.05, 0.05);
  Matrix flipped = d.F;
  for (auto [r, c] : {std::pair{0, 3}, {1, 3}, {2, 1}, {3, 1}}) flipped(r, c) = -flipped(r, c);
  CHECK((neg.F - flipped).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(build_turn_rate_2d(1.0, 0.0, 0.1, 0.1).F == build_ncv_2d(1.0, 0.1, 0.1).F);
  const double jump =
      (build_turn_rate_2d(1.0, 1e-10, 0, 0).F - build_turn_rate_2d(1.0, 0.0, 0, 0).F).cwiseAbs().maxCoeff();
  CHECK(jump < 1e-8);
  // Continuity just above the switch-over threshold.
  const double near =
      (build_turn_rate_2d(1.0, 2e-9, 0, 0).F - build_turn_rate_2d(1.0, 0.0, 0, 0).F).cwiseAbs().maxCoeff();
  CHECK(near < 1e-8);
  CHECK_THROWS_AS(build_turn_rate_2d(0.0, w, 0, 0), InvalidArgument);
}

TEST_CASE("CV 3D dynamics") {
  const LinearDynamics d = build_cv_3d(1.0, 10, 10, 5);
  Matrix Q = Matrix::Zero(6, 6);
  Q.block(0, 0, 2, 2) = 10 * sigma_block(1.0);
  Q.block(2, 2, 2, 2) = 10 * sigma_block(1.0);
  Q.block(4, 4, 2, 2) = 5 * sigma_block(1.0);
  CHECK((d.Q - Q).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(d.F(0, 1) == 1.0);
  CHECK(d.F(4, 5) == 1.0);
  CHECK(d.F(0, 3) == 0.0);
  CHECK(d.F(2, 5) == 0.0);
  CHECK(d.F * vec({0, 1, 0, 2, 0, 3}) == vec({1, 1, 2, 2, 3, 3}));
  CHECK_THROWS_AS(build_cv_3d(0.0, 1, 1, 1), InvalidArgument);
}

TEST_CASE("dynamics noise is symmetric PSD across parameters") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double dt = u(gen), q1 = u(gen), q2 = u(gen), w = u(gen) - 2.5;
    for (const LinearDynamics& d : {build_ncv_2d(dt, q1, q2), build_turn_rate_2d(dt, w, q1, q2),
                                    build_cv_3d(dt, q1, q2, q1 + q2)}) {
      CHECK((d.Q - d.Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(min_eigenvalue(d.Q) >= -1e-12 * d.Q.trace());
    }
  }
}

TEST_CASE("MotionModel discretizes for arbitrary gaps") {
  const MotionModel m = MotionModel::turn_rate_2d(0.2, 1.0, 2.0);
  const LinearDynamics d = m.discretize(2.5);
  CHECK((d.F - build_turn_rate_2d(2.5, 0.2, 1.0, 2.0).F).cwiseAbs().maxCoeff() == 0.0);
  CHECK(MotionModel::cv_3d(1, 1, 1).state_dim() == 6);
}

TEST_CASE("range-bearing model") {
  const SensorPose origin{Vector::Zero(2), std::nullopt, "radar"};
  Matrix R(2, 2);
  R << 4, 0, 0, 0.5 * std::pow(std::numbers::pi / 180, 2);
  const auto model = build_range_bearing(origin, R);
  CHECK(model->angle_mask() == std::vector<bool>{false, true});

  Vector z = model->evaluate(vec({1000, 0, 0, 0}));
  CHECK(z(0) == doctest::Approx(1000));
  CHECK(z(1) == doctest::Approx(0));
  z = model->evaluate(vec({0, 0, 1000, 0}));
  CHECK(z(0) == doctest::Approx(1000));
  CHECK(z(1) == doctest::Approx(std::numbers::pi / 2));
  z = model->evaluate(vec({300, 0, 400, 0}));
  CHECK(z(0) == doctest::Approx(500));
  CHECK(std::abs(z(1) - 0.927295) < 1e-6);
  CHECK(z(1) == doctest::Approx(std::acos(0.6)));

  CHECK_THROWS_AS(model->evaluate(vec({0, 5, 0, 5})), DegenerateGeometry);

  const SensorPose offset{vec({100, -200}), 5000.0, "r2"};
  const auto m2 = build_range_bearing(offset, R);
  z = m2->evaluate(vec({100, 0, 300, 0}));
  CHECK(z(0) == doctest::Approx(500));
  CHECK(z(1) == doctest::Approx(std::numbers::pi / 2));
  CHECK((m2->invert(z) - vec({100, 300})).norm() < 1e-9);
}

TEST_CASE("elevation-bearing-range model") {
  const SensorPose s{Vector::Zero(3), std::nullopt, "s"};
  const auto model = build_az_el_range(s, Matrix::Identity(3, 3));
  CHECK(model->angle_mask() == std::vector<bool>{true, true, false});

  Vector z = model->evaluate(vec({0, 0, 0, 0, 1000, 0}));
  CHECK(z(0) == doctest::Approx(std::numbers::pi / 2));
  CHECK(z(1) == 0.0);
  CHECK(z(2) == doctest::Approx(1000));

  z = model->evaluate(vec({3000, 0, 4000, 0, 0, 0}));
  CHECK(z(0) == doctest::Approx(0));
  CHECK(std::abs(z(1) - 0.927295) < 1e-6);
  CHECK(z(2) == doctest::Approx(5000));

  z = model->evaluate(vec({0, 0, 0, 0, -100, 0}));
  CHECK(z(0) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(z(1) == 0.0);
  CHECK(z(2) == doctest::Approx(100));

  CHECK_THROWS_AS(model->evaluate(Vector::Zero(6)), DegenerateGeometry);
}

TEST_CASE("analytic Jacobians agree with central differences") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(-20000, 20000);
  std::uniform_real_distribution<double> vel(-300, 300);
  const auto rb = build_range_bearing({vec({50, -70}), std::nullopt, "rb"}, Matrix::Identity(2, 2));
  const auto ebr = build_az_el_range({vec({50, -70, 10}), std::nullopt, "ebr"}, Matrix::Identity(3, 3));
  for (int i = 0; i < 200; ++i) {
    for (const auto& m : {rb, ebr}) {
      Vector x(m->state_dim());
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = k % 2 ? vel(gen) : pos(gen);
      const Matrix analytic = m->jacobian(x);
      const Matrix numeric = m->numeric_jacobian(x);
      const double scale = std::max(1e-12, analytic.cwiseAbs().maxCoeff());
      CHECK((analytic - numeric).cwiseAbs().maxCoeff() / scale < 1e-4);
    }
  }
}

TEST_CASE("custom models fall back to numeric Jacobians and wrap angles") {
  MeasurementModel m([](const Vector& x) { return Vector::Constant(1, x(0) + 10.0); },
                     Matrix::Identity(1, 1), {true}, 2);
  CHECK_FALSE(m.has_analytic_jacobian());
  const Vector z = m.evaluate(vec({0.0, 0.0}));
  CHECK(z(0) == doctest::Approx(wrap_angle(10.0)));
  const Matrix J = m.jacobian(vec({0.0, 0.0}));
  CHECK(J(0, 0) == doctest::Approx(1.0));
  CHECK(J(0, 1) == doctest::Approx(0.0));
  CHECK(m.residual(vec({3.1}), vec({-3.1}))(0) == doctest::Approx(6.2 - 2 * std::numbers::pi));
  CHECK_THROWS_AS(m.invert(vec({0.0})), InvalidArgument);
}

TEST_CASE("measurement models reject bad noise") {
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(build_range_bearing({Vector::Zero(2), std::nullopt, "r"}, indefinite), InvalidArgument);
  CHECK_THROWS_AS(build_range_bearing({Vector::Zero(3), std::nullopt, "r"}, Matrix::Identity(2, 2)),
                  InvalidArgument);
  CHECK_THROWS_AS(build_range_bearing({Vector::Zero(2), -1.0, "r"}, Matrix::Identity(2, 2)), InvalidArgument);
}

TEST_CASE("model switch matrix") {
  Matrix T(3, 3);
  T << 0.7, 0.15, 0.15, 0.4, 0.6, 0.0, 0.6, 0.4, 0.0;
  const ModelSwitchMatrix sw(T);
  Rng rng(42);
  std::array<int, 3> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<size_t>(sw.sample_next(0, rng))];
  CHECK(std::abs(counts[0] / double(draws) - 0.7) < 0.01);
  CHECK(std::abs(counts[1] / double(draws) - 0.15) < 0.01);
  CHECK(std::abs(counts[2] / double(draws) - 0.15) < 0.01);
  for (int i = 0; i < 10000; ++i) CHECK(sw.sample_next(1, rng) != 2);

  const ModelSwitchMatrix identity(Matrix::Identity(3, 3));
  for (int i = 0; i < 10000; ++i) CHECK(identity.sample_next(0, rng) == 0);

  Matrix bad = T;
  bad(1, 1) = 0.5;
  try {
    ModelSwitchMatrix{bad};
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  Matrix negative = T;
  negative(0, 0) = 1.1;
  negative(0, 1) = -0.25;
  CHECK_THROWS_AS(ModelSwitchMatrix{negative}, InvalidArgument);
}
