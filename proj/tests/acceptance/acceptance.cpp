// End-to-end acceptance checks. One line per criterion; exit status 1 if any fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "scb/observer.hpp"
#include "scb/simulation.hpp"
#include "scb/tracking.hpp"

using namespace scb;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1, 2: full controller on the shipped scenarios

Verdict landing_run(const Scenario& s) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run(s, RunOptions{.record = false}).result;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Verdict v;
  v.pass = r.landed() && r.position_error <= s.landing.radius && std::abs(r.altitude_error) <= s.landing.altitude &&
           r.speed_error <= s.landing.speed && wall < 60.0;
  v.detail = fmt("%s at t = %.2f s, |r-r_f| %.3f m, altitude %.3f m, |v-v_f| %.4f m/s, wall %.2f s;",
                 to_string(r.status).c_str(), r.t_end, r.position_error, r.altitude_error, r.speed_error, wall);
  for (const char* name : {"h11", "h22", "h30", "h40", "psi2", "phi1", "phi2"}) {
    const auto it = r.constraints.find(name);
    if (it == r.constraints.end()) {
      v.pass = false;
      v.detail += fmt(" %s missing", name);
      continue;
    }
    v.pass = v.pass && it->second.min_value >= -kViolationTolerance;
    v.detail += fmt(" %s %.3g", name, it->second.min_value);
  }
  return v;
}

// ---------------------------------------------------------------------------
// 3: baselines

Verdict baselines() {
  Verdict v;
  for (const Scenario* s : {&testing::scenario_a(), &testing::scenario_b()}) {
    auto go = [&](ControlMode m) {
      RunOptions o;
      o.control = m;
      o.record = false;
      return run(*s, o).result;
    };
    auto violated = [](const RunResult& r, const char* name) {
      return std::find(r.violations.begin(), r.violations.end(), name) != r.violations.end();
    };
    const RunResult ref = go(ControlMode::Reference);
    const RunResult ud = go(ControlMode::Desired);
    const RunResult sat = go(ControlMode::DesiredSaturated);
    const bool ref_ok = violated(ref, "psi2") || !ref.landed();
    const bool ud_ok = violated(ud, "phi1") || violated(ud, "phi2");
    const bool sat_ok = violated(sat, "psi2");
    v.pass = v.pass && ref_ok && ud_ok && sat_ok;
    v.detail += fmt(" %s: ref %s (psi2 min %.3g) %s; ud phi1 %.3g phi2 %.3g %s; ud-sat psi2 min %.3g %s;",
                    s->name.c_str(), to_string(ref.status).c_str(), ref.constraints.at("psi2").min_value,
                    ref_ok ? "ok" : "NOT REPRODUCED", ud.constraints.at("phi1").min_value,
                    ud.constraints.at("phi2").min_value, ud_ok ? "ok" : "NOT REPRODUCED",
                    sat.constraints.at("psi2").min_value, sat_ok ? "ok" : "NOT REPRODUCED");
  }
  return v;
}

// ---------------------------------------------------------------------------
// 4: observer

std::vector<std::pair<double, double>> observer_error(double tau, const std::function<Eigen::Vector3d(double)>& w,
                                                      double t_end, double dt) {
  BodyEnvironment env;
  env.omega = {0, 0, 4.3633e-4};
  env.gravity.nominal = GravityModel::point_mass(0.75 * 61.7);
  env.gravity.truth = env.gravity.nominal;
  const double m = 650.0;
  auto thrust = [](double t) { return Eigen::Vector3d(5.0 * std::sin(0.3 * t), 2.0, -3.0 + 0.1 * t); };
  using V9 = Eigen::Matrix<double, 9, 1>;
  V9 y;
  const Eigen::Vector3d v0(-1.64, -3.02, -3.64);
  y << Eigen::Vector3d(1500, -200, 300), v0, init_observer(tau, v0).nu;
  auto f = [&](double t, const V9& s) -> V9 {
    const SpacecraftState x{s.segment<3>(0), s.segment<3>(3), m};
    const ObserverState obs{s.segment<3>(6), tau};
    V9 d;
    d << x.v, drift_acceleration(x.r, x.v, env) + thrust(t) / m + w(t), nu_derivative(x, thrust(t), obs, env);
    return d;
  };
  std::vector<std::pair<double, double>> out;
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    out.emplace_back(t, (w(t) - w_hat(y.segment<3>(3), {y.segment<3>(6), tau})).norm());
    if (i < n) y = rk4_step(f, y, dt, t);
  }
  return out;
}

Verdict observer() {
  Verdict v;
  const Eigen::Vector3d w0(3e-5, -8e-5, 1.2e-4);
  double worst = 0.0;
  for (const auto& [t, e] : observer_error(10.0, [&](double) { return w0; }, 0.5, 1e-3)) {
    worst = std::max(worst, e / (w0.norm() * std::exp(-10.0 * t)));
  }
  const double c = 2e-5;
  auto ramp = [&](double t) { return Eigen::Vector3d(c * t, 0, 0); };
  const double e10 = observer_error(10.0, ramp, 3.0, 1e-3).back().second;
  const double e20 = observer_error(20.0, ramp, 3.0, 1e-3).back().second;
  const double r10 = e10 / (c / 10.0), r20 = e20 / (c / 20.0), halving = e10 / e20;
  v.pass = worst <= 1.001 && std::abs(r10 - 1) <= 0.05 && std::abs(r20 - 1) <= 0.05 && std::abs(halving / 2 - 1) <= 0.05;
  v.detail = fmt("constant: max |e|/(|e0| e^-10t) = %.6f; ramp: e/(c/tau) = %.4f (tau 10), %.4f (tau 20), ratio %.4f",
                 worst, r10, r20, halving);
  return v;
}

// ---------------------------------------------------------------------------
// 5: tracking poles

BodyEnvironment point_mass_env() {
  BodyEnvironment env;
  env.omega = {0, 0, 4.3633e-4};
  env.gravity.truth = GravityModel::point_mass(61.7);
  env.gravity.nominal = env.gravity.truth.scaled(0.75);
  return env;
}

ReferenceTrajectory sweep(const BodyEnvironment& env) {
  ReferenceBoundary bc;
  bc.r0 = {1900, -350, -900};
  bc.v0 = {-1.6, -1.0, 1.5};
  bc.rf = {900, 200, 300};
  bc.vf = {0.1, 0.0, -0.2};
  bc.t_final = 400.0;
  return generate_reference(bc, env, VehicleParams{});
}

Verdict tracking_poles() {
  const BodyEnvironment env = point_mass_env();
  const ReferenceTrajectory ref = sweep(env);
  const TrackingGains g;
  const double tau = 10.0, dt = 0.05;
  auto w = [&](const Eigen::Vector3d& r) { return env.gravity.disturbance(r); };
  using V7 = Eigen::Matrix<double, 7, 1>;
  const ReferenceSample r0 = ref.sample(0.0);
  V7 y;
  y << r0.r + Eigen::Vector3d(5, -3, 2), r0.v, r0.m;
  // estimate replaced by the true disturbance
  auto f = [&](double t, const V7& s) -> V7 {
    const SpacecraftState x = SpacecraftState::unpack(s);
    const ObserverState obs{tau * x.v - w(x.r), tau};
    const Eigen::Vector3d u = u_desired(x, ref.sample(t), obs, env, g);
    return state_derivative(x, u, env, w(x.r), VehicleParams{});
  };
  std::vector<Eigen::Vector3d> e, ed;
  const int n = 6000;
  for (int i = 0; i <= n; ++i) {
    const ReferenceSample rs = ref.sample(i * dt);
    e.push_back(y.segment<3>(0) - rs.r);
    ed.push_back(y.segment<3>(3) - rs.v);
    if (i < n) y = rk4_step(f, y, dt, i * dt);
  }
  Eigen::MatrixXd A(3 * (n - 1), 2);
  Eigen::VectorXd b(A.rows());
  Eigen::Index row = 0;
  for (int i = 1; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Eigen::Vector3d acc = (ed[k + 1] - ed[k - 1]) / (2 * dt);
    for (int j = 0; j < 3; ++j, ++row) {
      A(row, 0) = -ed[k][j];
      A(row, 1) = -e[k][j];
      b[row] = acc[j];
    }
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  const std::complex<double> disc = std::sqrt(std::complex<double>(c[0] * c[0] - 4 * c[1]));
  const double slow = std::abs(((-c[0] + disc) / 2.0).real()), fast = std::abs(((-c[0] - disc) / 2.0).real());
  Verdict v;
  v.pass = std::abs(slow / 0.04 - 1) <= 0.05 && std::abs(fast / 0.05 - 1) <= 0.05;
  v.detail = fmt("fitted s^2 + %.5f s + %.6f, roots -%.5f, -%.5f (design -0.04, -0.05)", c[0], c[1], slow, fast);
  return v;
}

// ---------------------------------------------------------------------------
// 6: control dynamics

Verdict thrust_convergence() {
  BodyEnvironment env = point_mass_env();
  env.gravity.truth = env.gravity.nominal;  // no disturbance, estimate stays exact
  const ReferenceTrajectory ref = sweep(env);
  const TrackingGains g;
  const VehicleParams veh;
  const double tau = 10.0, dt = 1e-3;
  using V13 = Eigen::Matrix<double, 13, 1>;
  const ReferenceSample r0 = ref.sample(0.0);
  V13 y;
  y << r0.r + Eigen::Vector3d(2, 1, -1), r0.v, r0.m, r0.u + Eigen::Vector3d(3, -2, 1), tau * r0.v;
  auto parts = [&](const V13& s) {
    return std::tuple{SpacecraftState{s.segment<3>(0), s.segment<3>(3), s[6]}, Eigen::Vector3d(s.segment<3>(7)),
                      ObserverState{s.segment<3>(10), tau}};
  };
  auto f = [&](double t, const V13& s) -> V13 {
    const auto [x, u, obs] = parts(s);
    const DesiredControl dc = zeta_desired(x, u, ref.sample(t), obs, env, g, veh);
    V13 d;
    d << state_derivative(x, u, env, Eigen::Vector3d::Zero(), veh), g.lag_rate * (dc.zeta_d - u),
        nu_derivative(x, u, obs, env);
    return d;
  };
  std::vector<double> ts, es;
  for (int i = 0; i <= 1000; ++i) {
    const auto [x, u, obs] = parts(y);
    ts.push_back(i * dt);
    es.push_back((u - u_desired(x, ref.sample(i * dt), obs, env, g)).norm());
    if (i < 1000) y = rk4_step(f, y, dt, i * dt);
  }
  const double rate = -testing::log_slope(ts, es);
  Verdict v;
  v.pass = std::abs(rate / g.sigma - 1) <= 0.05;
  v.detail = fmt("fitted decay rate %.5f 1/s (sigma %.1f), |u - u_d| %.3g -> %.3g N over 1 s", rate, g.sigma,
                 es.front(), es.back());
  return v;
}

// ---------------------------------------------------------------------------
// 7: filter optimality against a log-barrier Newton solve

struct Instance {
  Eigen::Vector4d grad;  // of b in (zeta, kappa)
  double offset;         // b at zeta = 0, kappa = 0
};

// min 0.5|z - z_d|^2 + 0.5 gamma k^2  s.t.  grad.(z, k) + offset >= 0, in
// coordinates y = (z, sqrt(gamma) k) so that the Hessian is the identity.
double barrier_solve(const Instance& in, const Eigen::Vector3d& zd, double gamma) {
  Eigen::Vector4d c = in.grad;
  c[3] /= std::sqrt(gamma);
  Eigen::Vector4d yd;
  yd << zd, 0.0;
  const double cn = c.norm();
  // strictly feasible start along the constraint normal
  Eigen::Vector4d y = yd + c * ((-(c.dot(yd) + in.offset) + 1.0 * cn) / (cn * cn));
  for (double mu = 1.0; mu > 1e-16; mu *= 0.1) {
    for (int it = 0; it < 100; ++it) {
      const double slack = c.dot(y) + in.offset;
      const Eigen::Vector4d g = (y - yd) - mu / slack * c;
      const Eigen::Matrix4d H = Eigen::Matrix4d::Identity() + mu / (slack * slack) * c * c.transpose();
      Eigen::Vector4d step = -H.ldlt().solve(g);
      double t = 1.0;
      while (c.dot(y + t * step) + in.offset <= 0.0) t *= 0.5;
      y += t * step;
      if ((t * step).norm() < 1e-15 * (1.0 + y.norm())) break;
    }
  }
  return 0.5 * (y.head<3>() - zd).squaredNorm() + 0.5 * y[3] * y[3];
}

Verdict filter_optimality() {
  const Scenario& s = testing::scenario_a();
  const SafetyFilter f(s.constraints, s.cbf, s.env, s.vehicle, s.gains.lag_rate);
  const ReferenceTrajectory ref = s.build_reference();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> push(0.01, 5.0);
  double worst_gain = -1e300, worst_b = 0.0, worst_candidate = -1e300;
  int made = 0, degenerate = 0;
  while (made < 1000) {
    const AugmentedState xh = testing::near_reference(rng, ref, s.vehicle, 5.0);
    const CompositeCbf cbf = f.composite(xh, {});
    if (!(cbf.h > 0.0)) continue;
    // the closed form needs a nonvanishing denominator; such states are outside its domain
    const double a = s.gains.lag_rate;
    if (a * a * cbf.dh_du.squaredNorm() + cbf.h * cbf.h / s.cbf.gamma <= 1e-12) {
      ++degenerate;
      continue;
    }
    // b(zeta, kappa) is affine; push zeta_d just past its zero set
    const double b0 = f.relaxed_constraint_b(xh, cbf, {}, Eigen::Vector3d::Zero(), 0.0);
    const Eigen::Vector3d gz = s.gains.lag_rate * cbf.dh_du;
    const Eigen::Vector3d start = testing::random_vector(rng, 15.0);
    const double b_start = b0 + gz.dot(start);
    const Eigen::Vector3d zd = start - gz * ((b_start + push(rng) * gz.norm()) / gz.squaredNorm());
    const FilterDecision d = f.filter(xh, {}, zd);
    if (!d.active) continue;
    ++made;
    const double cost = f.cost(zd, d.zeta_star, d.kappa_star);
    Instance in;
    in.grad << gz, cbf.h;
    in.offset = b0;
    worst_gain = std::max(worst_gain, cost - barrier_solve(in, zd, s.cbf.gamma));
    worst_b = std::max(worst_b, std::abs(f.relaxed_constraint_b(xh, cbf, {}, d.zeta_star, d.kappa_star)));
    for (int k = 0; k < 20; ++k) {
      const Eigen::Vector3d z = d.zeta_star + testing::random_vector(rng, 1.0);
      const double kap = d.kappa_star * (1.0 + std::uniform_real_distribution<double>(-1, 1)(rng));
      if (f.relaxed_constraint_b(xh, cbf, {}, z, kap) < 0.0) continue;
      worst_candidate = std::max(worst_candidate, cost - f.cost(zd, z, kap));
    }
  }
  Verdict v;
  v.pass = worst_gain <= 1e-8 && worst_candidate <= 1e-8 && worst_b <= 1e-9;
  v.detail = fmt("1000 active instances (%d degenerate skipped): max J* - J_qp = %.3g, max J* - J_candidate = %.3g, "
                 "max |b*| = %.3g",
                 degenerate, worst_gain, worst_candidate, worst_b);
  return v;
}

// ---------------------------------------------------------------------------
// 8: forward invariance from sampled initial states

Verdict invariance() {
  Scenario base = testing::scenario_a();
  base.cbf.state_mode = DisturbanceMode::Truth;
  base.cbf.filter_mode = DisturbanceMode::Truth;
  const ReferenceTrajectory ref = base.build_reference();
  const SafetyFilter f(base.constraints, base.cbf, base.env, base.vehicle, base.gains.lag_rate);
  const Eigen::Vector3d u0 = ref.sample(0.0).u;

  std::mt19937_64 rng(8);
  std::vector<Scenario> picks;
  int tried = 0;
  while (picks.size() < 50) {
    ++tried;
    Scenario s = base;
    s.r0 = base.r0 + testing::random_vector(rng, 100.0);
    s.v0 = base.v0 + testing::random_vector(rng, 0.5);
    const AugmentedState xh{{s.r0, s.v0, s.vehicle.wet_mass}, u0};
    const BaseCbfs bc = base_cbfs(xh.x, xh.u, s.constraints);
    if (!(bc.h10 > 0 && bc.h20 > 0 && bc.h30 > 0 && bc.h40 > 0)) continue;
    const CompositeCbf c = f.composite(xh, s.env.gravity.disturbance(s.r0));
    if (!(c.h > 0 && f.hocbf_glideslope(xh, {}).h21 > 0)) continue;
    picks.push_back(s);
  }

  struct Outcome {
    RunStatus status;
    double h, h10, h20, h30, h40;
  };
  std::vector<Outcome> out(picks.size());
  auto work = [&](std::size_t i) {
    const RunOutput r = run(picks[i], ref);
    const auto& tel = r.telemetry;
    auto col = [&](const char* name) {
      const auto idx = static_cast<std::size_t>(
          std::find(tel.columns.begin(), tel.columns.end(), name) - tel.columns.begin());
      double lo = 1e300;
      for (const auto& row : tel.rows) {
        if (std::isfinite(row[idx])) lo = std::min(lo, row[idx]);
      }
      return lo;
    };
    out[i] = {r.result.status, col("h"), col("h10"), col("h20"), col("h30"), col("h40")};
  };
  std::vector<std::thread> pool;
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < picks.size(); i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();

  Verdict v;
  int landed = 0, bad = 0;
  double lo = 1e300;
  std::string worst;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Outcome& o = out[i];
    const double m = std::min({o.h, o.h10, o.h20, o.h30, o.h40});
    const bool ended_ok = o.status == RunStatus::Landed || o.status == RunStatus::Timeout;
    if (o.status == RunStatus::Landed) ++landed;
    if (m < -kViolationTolerance || !ended_ok) {
      ++bad;
      if (worst.size() < 300) worst += fmt(" #%zu %s min %.3g;", i, to_string(o.status).c_str(), m);
    }
    lo = std::min(lo, m);
  }
  v.pass = bad == 0;
  v.detail = fmt("%zu states (%d draws), %d landed, %d with a barrier below -1e-6, lowest %.3g", out.size(), tried,
                 landed, bad, lo) + worst;
  return v;
}

// ---------------------------------------------------------------------------
// 9: gravity

Verdict gravity() {
  const Ellipsoid e = testing::scenario_a().ellipsoids.front();
  const GravityModel g = GravityModel::harmonic(e, e.a);
  const double radius = std::max({e.a, e.b, e.c});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(1.5 * radius, 4.0 * radius);
  double worst = 0.0, lap = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d r = dist(rng) * testing::random_unit(rng);
    const double oracle = quadrature_oracle(e, r, 48);
    worst = std::max(worst, std::abs(g.potential(r) - oracle) / std::abs(oracle));
    double stencil = -6.0 * g.potential(r);
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d h = Eigen::Vector3d::Zero();
      h[k] = 1.0;
      stencil += g.potential(r + h) + g.potential(r - h);
    }
    lap = std::max(lap, std::abs(stencil) / g.potential(r));
  }
  Verdict v;
  v.pass = worst < 0.01 && lap < 1e-9;
  v.detail = fmt("50 points in [1.5, 4] x %.0f m: max relative potential error %.4g, max Laplacian residual %.3g",
                 radius, worst, lap);
  return v;
}

// ---------------------------------------------------------------------------
// 10: differentiation

Verdict differentiation() {
  const Scenario& s = testing::scenario_a();
  const SafetyFilter f(s.constraints, s.cbf, s.env, s.vehicle, s.gains.lag_rate);
  const ReferenceTrajectory ref = s.build_reference();
  std::mt19937_64 rng(10);
  const std::array<double, 10> step = {1e-3, 1e-3, 1e-3, 1e-5, 1e-5, 1e-5, 1e-3, 1e-5, 1e-5, 1e-5};
  double worst = 0.0;
  int states = 0;
  while (states < 100) {
    const AugmentedState xh = testing::near_reference(rng, ref, s.vehicle);
    const CompositeCbf c = f.composite(xh, {});
    if (!(c.h > 0.0)) continue;
    ++states;
    Eigen::Matrix<double, 10, 1> grad, fd;
    grad << c.dh_dx, c.dh_du;
    for (int k = 0; k < 10; ++k) {
      Vector10d hi = xh.packed(), lo = xh.packed();
      hi[k] += step[static_cast<std::size_t>(k)];
      lo[k] -= step[static_cast<std::size_t>(k)];
      fd[k] = (f.composite(AugmentedState::unpack(hi), {}).h - f.composite(AugmentedState::unpack(lo), {}).h) /
              (2 * step[static_cast<std::size_t>(k)]);
    }
    worst = std::max(worst, (grad - fd).norm() / grad.norm());
  }

  // u_d rate along a lagged trajectory
  const BodyEnvironment env = point_mass_env();
  const ReferenceTrajectory sw = sweep(env);
  const TrackingGains g;
  const VehicleParams veh;
  const double tau = 10.0, a = 3.0, delta = 1e-3;
  auto zeta = [](double t) { return Eigen::Vector3d(6 + 3 * std::sin(0.2 * t), -4 + std::cos(0.1 * t), 9); };
  using V13 = Eigen::Matrix<double, 13, 1>;
  const ReferenceSample r0 = sw.sample(0.0);
  V13 y;
  y << r0.r + Eigen::Vector3d(3, -2, 1), r0.v, r0.m, r0.u, tau * r0.v;
  BodyEnvironment exact = env;
  exact.gravity.truth = exact.gravity.nominal;
  auto rhs = [&](double t, const V13& st) -> V13 {
    const SpacecraftState x{st.segment<3>(0), st.segment<3>(3), st[6]};
    const Eigen::Vector3d u = st.segment<3>(7);
    V13 d;
    d << state_derivative(x, u, exact, Eigen::Vector3d::Zero(), veh), a * (zeta(t) - u),
        nu_derivative(x, u, {st.segment<3>(10), tau}, exact);
    return d;
  };
  std::vector<V13> traj;
  for (int i = 0; i <= 40000; ++i) {
    traj.push_back(y);
    if (i < 40000) y = rk4_step(rhs, y, delta, i * delta);
  }
  auto ud = [&](int i) {
    const V13& st = traj[static_cast<std::size_t>(i)];
    return u_desired({st.segment<3>(0), st.segment<3>(3), st[6]}, sw.sample(i * delta), {st.segment<3>(10), tau},
                     exact, g);
  };
  double rate_err = 0.0;
  for (int i = 1; i < 40000; i += 397) {
    const V13& st = traj[static_cast<std::size_t>(i)];
    const Eigen::Vector3d model = u_desired_dot({st.segment<3>(0), st.segment<3>(3), st[6]}, st.segment<3>(7),
                                                sw.sample(i * delta), {st.segment<3>(10), tau}, exact, g, veh)
                                      .value;
    const Eigen::Vector3d diff = (ud(i + 1) - ud(i - 1)) / (2 * delta);
    rate_err = std::max(rate_err, (model - diff).norm() / model.norm());
  }
  Verdict v;
  v.pass = worst < 1e-5 && rate_err < 1e-3;
  v.detail = fmt("composite gradient max relative error %.3g over 100 safe states; u_d rate max relative error %.3g",
                 worst, rate_err);
  return v;
}

// ---------------------------------------------------------------------------
// 11: soft-min sandwich

Verdict soft_minimum() {
  const double rho = testing::scenario_a().cbf.rho;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> z(-10.0, 10.0);
  std::uniform_real_distribution<double> spread(0.0, 1.0);
  double above = 0.0, below = 0.0;
  for (int i = 0; i < 100000; ++i) {
    // mix wide and tightly clustered tuples
    const double c = z(rng), w = spread(rng) < 0.5 ? 10.0 : 1e-3;
    const std::array<double, 4> v = {c + w * z(rng) / 10, c + w * z(rng) / 10, c + w * z(rng) / 10,
                                     c + w * z(rng) / 10};
    const double lo = *std::min_element(v.begin(), v.end());
    const double sm = softmin(v, rho);
    const double ulp = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lo));
    above = std::max(above, (sm - lo) / ulp);
    below = std::max(below, ((lo - std::log(4.0) / rho) - sm) / ulp);
  }
  Verdict v;
  v.pass = above <= 1.0 && below <= 1.0;
  v.detail = fmt("1e5 tuples: worst excess over min %.2f ulp, worst shortfall below min - ln4/rho %.2f ulp", above,
                 below);
  return v;
}

// ---------------------------------------------------------------------------
// 12: determinism

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "scb_acceptance";
  fs::create_directories(dir);
  std::vector<std::string> bytes;
  for (int i = 0; i < 2; ++i) {
    const fs::path p = dir / ("telemetry_" + std::to_string(i) + ".csv");
    write_telemetry_csv(run(testing::scenario_a()).telemetry, p);
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bytes.push_back(ss.str());
  }
  Verdict v;
  v.pass = !bytes[0].empty() && bytes[0] == bytes[1];
  v.detail = fmt("two Scenario A runs, %zu bytes of telemetry each, %s", bytes[0].size(),
                 v.pass ? "identical" : "different");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Scenario A analogue lands cleanly", [] { return landing_run(testing::scenario_a()); }},
      {"Scenario B analogue lands cleanly", [] { return landing_run(testing::scenario_b()); }},
      {"baseline controllers fail as described", baselines},
      {"observer error decay and ramp lag", observer},
      {"tracking error poles", tracking_poles},
      {"thrust converges to u_d at rate sigma", thrust_convergence},
      {"closed-form filter is optimal and tight", filter_optimality},
      {"forward invariance from 50 sampled safe states", invariance},
      {"harmonic gravity accuracy", gravity},
      {"composite gradient and u_d rate", differentiation},
      {"soft-min sandwich", soft_minimum},
      {"deterministic telemetry", determinism},
  };
  // optional criterion numbers on the command line select a subset
  std::vector<bool> wanted(criteria.size(), argc < 2);
  for (int k = 1; k < argc; ++k) {
    const auto n = static_cast<std::size_t>(std::atoi(argv[k]));
    if (n >= 1 && n <= criteria.size()) wanted[n - 1] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted[i]) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& ex) {
      v = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2zu %s: %s (%s) [%.1f s]\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
