#include "skytrack/scenarios.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace skytrack;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "skytrack_unit";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

fs::path fixture() { return fs::path(SKYTRACK_TEST_DATA) / "adsb_fixture.csv"; }

}  // namespace

TEST_CASE("Class-B simulation") {
  ClassBConfig cfg;
  cfg.horizon = 40;

  SUBCASE("equal seeds give identical scenarios") {
    const ClassBScenario a = simulate_class_b(cfg, 42);
    const ClassBScenario b = simulate_class_b(cfg, 42);
    const ClassBScenario c = simulate_class_b(cfg, 43);
    REQUIRE(a.truths.size() == 10);
    for (size_t i = 0; i < a.truths.size(); ++i)
      for (size_t k = 0; k < a.truths[i].states.size(); ++k)
        CHECK(a.truths[i].states[k] == b.truths[i].states[k]);
    for (size_t k = 0; k < a.scans.size(); ++k)
      for (size_t d = 0; d < a.scans[k].detections.size(); ++d)
        CHECK(a.scans[k].detections[d].z == b.scans[k].detections[d].z);
    CHECK(a.truths[0].states[0] != c.truths[0].states[0]);
  }

  SUBCASE("initial states lie in the box with bounded speed") {
    cfg.n_targets = 200;
    cfg.box_center = Eigen::Vector2d(1000, -500);
    const ClassBScenario s = simulate_class_b(cfg, 3);
    for (const auto& p : s.truths) {
      const Vector& x = p.states.front();
      CHECK(std::abs(x[0] - 1000) <= 15000);
      CHECK(std::abs(x[2] + 500) <= 5000);
      CHECK(std::abs(x[1]) <= 200);
      CHECK(std::abs(x[3]) <= 200);
    }
  }

  SUBCASE("identity switch matrix never leaves the initial model") {
    cfg.switch_matrix = Matrix::Identity(3, 3);
    const ClassBScenario s = simulate_class_b(cfg, 5);
    for (const auto& p : s.truths)
      for (int m : p.model_index) CHECK(m == 0);
  }

  SUBCASE("noise-free truth and detections follow the models exactly") {
    cfg.q_x = cfg.q_y = 0.0;
    cfg.R = Matrix::Zero(2, 2);
    const ClassBScenario s = simulate_class_b(cfg, 11);
    const auto models = cfg.motion_models();
    for (const auto& p : s.truths) {
      for (size_t k = 1; k < p.states.size(); ++k) {
        const LinearDynamics step = models[static_cast<size_t>(p.model_index[k])].discretize(cfg.dt);
        CHECK((p.states[k] - step.F * p.states[k - 1]).norm() <= 1e-9 * (1 + p.states[k].norm()));
      }
    }
    for (size_t k = 0; k < s.scans.size(); ++k) {
      CHECK(s.scans[k].time == k * cfg.dt);
      for (const Detection& d : s.scans[k].detections) {
        const Vector& x = s.truths[static_cast<size_t>(d.truth_id)].states[k];
        CHECK(d.z[0] == doctest::Approx(std::hypot(x[0], x[2])).epsilon(1e-12));
        CHECK(d.z[1] == doctest::Approx(std::atan2(x[2], x[0])).epsilon(1e-12));
      }
    }
  }

  SUBCASE("priors are centered near the truth with the configured spread") {
    cfg.n_targets = 400;
    cfg.horizon = 1;
    const ClassBScenario s = simulate_class_b(cfg, 8);
    REQUIRE(s.priors.size() == 400);
    double sq = 0.0;
    for (size_t i = 0; i < s.priors.size(); ++i) {
      CHECK(s.priors[i].timestamp == 0.0);
      CHECK(s.priors[i].cov()(0, 0) == doctest::Approx(100.0));
      CHECK(s.priors[i].cov()(1, 1) == doctest::Approx(25.0));
      sq += std::pow(s.priors[i].mean()[0] - s.truths[i].states[0][0], 2);
    }
    CHECK(std::sqrt(sq / 400) == doctest::Approx(10.0).epsilon(0.15));
  }

  SUBCASE("invalid configurations") {
    cfg.switch_matrix = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(simulate_class_b(cfg, 1), InvalidArgument);
  }
}

TEST_CASE("geodesy") {
  const geodesy::Geodetic origin{52.0, -1.0, 0.0};
  const geodesy::LocalFrame frame(origin);
  CHECK(frame.to_local(origin).norm() < 1e-6);

  // One degree of latitude north is about 111.25 km at 52N.
  const Eigen::Vector3d north = frame.to_local({53.0, -1.0, 0.0});
  CHECK(north[0] == doctest::Approx(111257).epsilon(1e-3));
  CHECK(std::abs(north[1]) < 1e-6);
  CHECK(north[2] < 0.0);  // earth curvature drops away from the tangent plane

  const Eigen::Vector3d up = frame.to_local({52.0, -1.0, 1000.0});
  CHECK(up[2] == doctest::Approx(1000.0));

  double worst = 0.0;
  for (double lat = 49.9; lat <= 58.7; lat += 0.7)
    for (double lon = -8.2; lon <= 1.8; lon += 0.9)
      for (double alt : {0.0, 5000.0, 12000.0}) {
        const geodesy::Geodetic g{lat, lon, alt};
        const Eigen::Vector3d local = frame.to_local(g);
        const Eigen::Vector3d back = frame.to_local(frame.to_geodetic(local));
        worst = std::max(worst, (back - local).norm());
        const geodesy::Geodetic e = geodesy::ecef_to_geodetic(geodesy::geodetic_to_ecef(g));
        CHECK(std::abs(e.alt_m - alt) < 1e-6);
      }
  CHECK(worst < 1e-6);
}

TEST_CASE("ADS-B loader") {
  const geodesy::LocalFrame frame({51.5, -0.5, 0.0});

  SUBCASE("missing column names the column") {
    const auto p = write_temp("nolat.csv", "time,icao24,lon,geoaltitude\n0,abc,0,1000\n");
    try {
      load_adsb(p, frame, 5.0);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("'lat'") != std::string::npos);
    }
  }

  SUBCASE("interpolation and skipped rows") {
    const auto p = write_temp("interp.csv",
                              "time,icao24,lat,lon,geoaltitude\n"
                              "0,abc,51.5,-0.5,1000\n"
                              "10,abc,51.6,-0.5,2000\n"
                              "3,abc,,-0.5,\n"
                              "4,abc,91,-0.5,1000\n"
                              "5\n");
    const AdsbData d = load_adsb(p, frame, 5.0);
    CHECK(d.skipped_rows == 3);
    CHECK(d.aircraft == 1);
    REQUIRE(d.paths.size() == 1);
    CHECK(d.grid == std::vector<double>{0, 5, 10});
    const Eigen::Vector3d a = frame.to_local({51.5, -0.5, 1000});
    const Eigen::Vector3d b = frame.to_local({51.6, -0.5, 2000});
    const Vector mid = *d.paths[0].state_at(5.0);
    CHECK((position_of(mid) - Vector(0.5 * (a + b))).norm() < 1e-6);
    CHECK(mid[1] == doctest::Approx((b[0] - a[0]) / 10));
    CHECK(mid[5] == doctest::Approx((b[2] - a[2]) / 10));
  }

  SUBCASE("long gaps split a path") {
    const auto p = write_temp("gap.csv",
                              "icao24,time,geoaltitude,lat,lon\n"
                              "abc,0,1000,51.5,-0.5\n"
                              "abc,20,1000,51.5,-0.4\n"
                              "abc,100,1000,51.5,-0.3\n"
                              "abc,120,1000,51.5,-0.2\n");
    const AdsbData d = load_adsb(p, frame, 10.0, 30.0);
    REQUIRE(d.paths.size() == 2);
    CHECK(d.paths[0].times.back() == 20.0);
    CHECK(d.paths[1].times.front() == 100.0);
    CHECK(d.paths[0].id != d.paths[1].id);
  }

  SUBCASE("fixture aircraft count matches an independent group-by") {
    std::ifstream in(fixture());
    std::string line;
    std::getline(in, line);
    std::set<std::string> ids;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string t, id, lat;
      std::getline(ss, t, ',');
      std::getline(ss, id, ',');
      std::getline(ss, lat, ',');
      if (!lat.empty() && lat.find_first_not_of("0123456789.-") == std::string::npos) ids.insert(id);
    }
    const AdsbData d = load_adsb(fixture(), frame, 5.0);
    CHECK(d.aircraft == ids.size());
    CHECK(d.aircraft == 5);
    CHECK(d.skipped_rows == 2);
    CHECK(d.paths.size() == 5);
    for (const auto& path : d.paths)
      for (size_t k = 1; k < path.times.size(); ++k) CHECK(path.times[k] - path.times[k - 1] == 5.0);
  }
}

TEST_CASE("Class-A detection simulation") {
  ClassAConfig cfg;
  cfg.sensors = {{"ground", {52.0, -1.0, 0.0}, std::nullopt}};
  cfg.origin = geodesy::Geodetic{52.0, -1.0, 0.0};
  const geodesy::LocalFrame frame(*cfg.origin);

  GroundTruthPath near, far;
  near.id = 0;
  far.id = 1;
  near.times = far.times = {0.0};
  Vector xn(6), xf(6);
  xn << 110900, 0, 0, 0, 0, 0;
  xf << 0, 0, 111100, 0, 0, 0;
  near.states = {xn};
  far.states = {xf};
  std::vector<GroundTruthPath> paths = {near, far};

  const std::vector<Scan> scans = simulate_detections(paths, {0.0}, cfg, frame, 1);
  REQUIRE(scans.size() == 1);
  REQUIRE(scans[0].detections.size() == 1);
  CHECK(scans[0].detections[0].truth_id == 0);
  CHECK_FALSE(scans[0].detections[0].is_clutter);

  SUBCASE("noise-free measurements invert to the truth") {
    cfg.R = Matrix::Zero(3, 3);
    cfg.sensors.push_back({"airborne", {52.3, -0.8, 5000.0}, Eigen::Vector3d(50, 100, 0)});
    GroundTruthPath path;
    path.id = 7;
    for (int k = 0; k < 5; ++k) {
      Vector x(6);
      x << 20000 + 200 * k, 200, -30000, 0, 10000, 0;
      path.times.push_back(10.0 * k);
      path.states.push_back(x);
    }
    const std::vector<Scan> s = simulate_detections({path}, path.times, cfg, frame, 9);
    for (size_t k = 0; k < s.size(); ++k) {
      REQUIRE(s[k].detections.size() == 2);
      for (const Detection& d : s[k].detections) {
        CHECK((d.model->invert(d.z) - position_of(path.states[k])).norm() < 1e-6);
        if (d.sensor() == "airborne")
          CHECK(d.model->sensor()->position[1] == doctest::Approx(frame.to_local({52.3, -0.8, 5000})[1] + 100.0 * 10 * k));
      }
    }
  }

  SUBCASE("clutter is flagged and in range") {
    cfg.clutter_rate = 3.0;
    const std::vector<Scan> s = simulate_detections(paths, {0.0}, cfg, frame, 4);
    for (const Detection& d : s[0].detections) {
      if (!d.is_clutter) continue;
      CHECK(d.truth_id == -1);
      CHECK(d.z[2] <= cfg.max_range);
    }
  }

  SUBCASE("scene origin defaults to the midpoint of the first two sensors") {
    ClassAConfig def;
    const geodesy::Geodetic o = def.scene_origin();
    CHECK(o.lat_deg == doctest::Approx((53.3537 + 51.47) / 2));
    CHECK(o.lon_deg == doctest::Approx((-2.275 - 0.4543) / 2));
  }
}
