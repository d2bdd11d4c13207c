#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <random>

#include "scb/dynamics.hpp"
#include "scb/gravity.hpp"
#include "scb/reference.hpp"
#include "scb/scenario.hpp"

namespace scb::testing {

inline std::filesystem::path scenario_dir() { return std::filesystem::path(SCB_SOURCE_DIR) / "scenarios"; }

inline const Scenario& scenario_a() {
  static const Scenario s = load_scenario(scenario_dir() / "scenario_a.json");
  return s;
}

inline const Scenario& scenario_b() {
  static const Scenario s = load_scenario(scenario_dir() / "scenario_b.json");
  return s;
}

// Body used across the module tests: long axis along y, as in the shipped scenarios.
inline Ellipsoid long_ellipsoid() {
  Ellipsoid e;
  e.a = 1000.0;
  e.b = 400.0;
  e.c = 400.0;
  e.density = 1380.0;
  e.orientation << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  return e;
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Eigen::Vector3d random_vector(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline double rel_err(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-300) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

// Least-squares slope of log|y| against t.
inline double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ly = std::log(std::abs(y[i]));
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace scb::testing

namespace scb::testing {

// Augmented states scattered around a reference path: position within
// `spread` metres, velocity within 0.3 m/s, thrust magnitude inside the bounds.
inline AugmentedState near_reference(std::mt19937_64& rng, const ReferenceTrajectory& ref, const VehicleParams& veh,
                                     double spread = 20.0) {
  std::uniform_real_distribution<double> when(ref.samples().front().t, ref.final_time() - 30.0);
  std::uniform_real_distribution<double> thrust(veh.thrust_min + 0.5, veh.thrust_max - 0.5);
  const ReferenceSample rs = ref.sample(when(rng));
  AugmentedState xh;
  xh.x.r = rs.r + random_vector(rng, spread);
  xh.x.v = rs.v + random_vector(rng, 0.3);
  xh.x.m = rs.m;
  xh.u = thrust(rng) * random_unit(rng);
  return xh;
}

}  // namespace scb::testing
