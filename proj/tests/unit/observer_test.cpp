#include <doctest.h>

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "scb/dynamics.hpp"
#include "scb/observer.hpp"

using namespace scb;
using scb::testing::rel_err;

namespace {

using Vector10 = Eigen::Matrix<double, 10, 1>;

BodyEnvironment spinning_env() {
  BodyEnvironment env;
  env.omega = {0, 0, 4.3633e-4};
  env.gravity.nominal = GravityModel::point_mass(0.75 * 61.7);
  env.gravity.truth = env.gravity.nominal;
  return env;
}

struct Trace {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> error;  // w - w_hat
};

// Plant (r, v, m = const) driven by a thrust program and an external w(t),
// observer integrated alongside.
Trace observe(double tau, const std::function<Eigen::Vector3d(double)>& w, double t_end, double dt) {
  const BodyEnvironment env = spinning_env();
  const double m = 650.0;
  auto thrust = [](double t) { return Eigen::Vector3d(5.0 * std::sin(0.3 * t), 2.0, -3.0 + t * 0.1); };
  const Eigen::Vector3d r0(1500, -200, 300), v0(-1.64, -3.02, -3.64);
  const ObserverState obs0 = init_observer(tau, v0);
  Vector10 y;
  y << r0, v0, obs0.nu, 0.0;
  auto f = [&](double t, const Vector10& s) -> Vector10 {
    const SpacecraftState x{s.segment<3>(0), s.segment<3>(3), m};
    const ObserverState obs{s.segment<3>(6), tau};
    Vector10 d;
    d << x.v, drift_acceleration(x.r, x.v, env) + thrust(t) / m + w(t), nu_derivative(x, thrust(t), obs, env), 0.0;
    return d;
  };
  Trace tr;
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    const ObserverState obs{y.segment<3>(6), tau};
    tr.t.push_back(t);
    tr.error.push_back(w(t) - w_hat(y.segment<3>(3), obs));
    if (i < n) y = rk4_step(f, y, dt, t);
  }
  return tr;
}

}  // namespace

TEST_CASE("observer initialisation") {
  const ObserverState obs = init_observer(10.0, {-1.64, -3.02, -3.64});
  CHECK(rel_err(obs.nu, Eigen::Vector3d(-16.4, -30.2, -36.4)) < 1e-15);
  CHECK(obs.tau == 10.0);
  CHECK(init_observer(10.0, Eigen::Vector3d::Zero()).nu.norm() == 0.0);
  CHECK(w_hat({-1.64, -3.02, -3.64}, obs).norm() == 0.0);
  CHECK(w_hat({3.0, 0.1, -7.0}, init_observer(7.5, {3.0, 0.1, -7.0})).norm() == 0.0);
  CHECK_THROWS(init_observer(0.0, Eigen::Vector3d::Zero()));
}

TEST_CASE("nu derivative reductions") {
  BodyEnvironment env;
  env.gravity.nominal = GravityModel::point_mass(1e-300);
  const SpacecraftState x{{1000, 0, 0}, {0.5, -0.2, 0.1}, 600};
  ObserverState obs{{1.0, 2.0, -3.0}, 10.0};
  const Eigen::Vector3d nd = nu_derivative(x, Eigen::Vector3d::Zero(), obs, env);
  CHECK(rel_err(nd, Eigen::Vector3d(10.0 * w_hat(x.v, obs))) < 1e-12);

  // hovering with an exact estimate leaves nu at rest
  const BodyEnvironment spin = spinning_env();
  const Eigen::Vector3d w(2e-5, -1e-5, 3e-5);
  const SpacecraftState hover{{800, 100, -50}, Eigen::Vector3d::Zero(), 600};
  const Eigen::Vector3d u = -hover.m * (drift_acceleration(hover.r, hover.v, spin) + w);
  obs.nu = obs.tau * hover.v - w;
  CHECK(nu_derivative(hover, u, obs, spin).norm() < 1e-15);
}

TEST_CASE("constant disturbance is recovered at rate tau") {
  const Eigen::Vector3d w(3e-5, -8e-5, 1.2e-4);
  for (double tau : {5.0, 10.0, 20.0}) {
    const Trace tr = observe(tau, [&](double) { return w; }, 5.0 / tau, 1e-3);
    const double e0 = tr.error.front().norm();
    CHECK(e0 == doctest::Approx(w.norm()).epsilon(1e-12));
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      CHECK(tr.error[i].norm() <= e0 * std::exp(-tau * tr.t[i]) * 1.001 + 1e-15);
    }
  }
}

TEST_CASE("ramp disturbance leaves a lag of slope over tau") {
  const double c = 2e-5;
  auto ramp = [&](double t) { return Eigen::Vector3d(c * t, 0.0, 0.0); };
  auto settled = [&](double tau) { return observe(tau, ramp, 3.0, 1e-3).error.back().norm(); };
  const double e10 = settled(10.0), e20 = settled(20.0);
  CHECK(e10 == doctest::Approx(c / 10.0).epsilon(0.05));
  CHECK(e20 == doctest::Approx(c / 20.0).epsilon(0.05));
  CHECK(e10 / e20 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("estimation error obeys its first-order dynamics") {
  const double tau = 10.0;
  auto w = [](double t) { return Eigen::Vector3d(1e-4 * std::sin(0.5 * t), 5e-5 * std::cos(0.2 * t), 2e-5); };
  auto w_dot = [](double t) { return Eigen::Vector3d(5e-5 * std::cos(0.5 * t), -1e-5 * std::sin(0.2 * t), 0.0); };
  const double dt = 1e-3;
  const Trace tr = observe(tau, w, 2.0, dt);
  for (std::size_t i = 1; i + 1 < tr.t.size(); i += 50) {
    const Eigen::Vector3d de = (tr.error[i + 1] - tr.error[i - 1]) / (2.0 * dt);
    const Eigen::Vector3d residual = de + tau * tr.error[i] - w_dot(tr.t[i]);
    // central-difference truncation on e ~ exp(-tau t) is (tau dt)^2/6 of tau|e|
    const double truncation = std::pow(tau * dt, 2) / 6.0 * tau * tr.error[i].norm();
    CHECK(residual.norm() < 1e-11 + 1.5 * truncation);
  }
}
