#include "scb/simulation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "scb/observer.hpp"
#include "scb/tracking.hpp"

namespace scb {

using nlohmann::json;

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Landed:
      return "landed";
    case RunStatus::Timeout:
      return "timeout";
    case RunStatus::PropellantExhausted:
      return "propellant_exhausted";
    case RunStatus::FilterInfeasible:
      return "filter_infeasible";
    case RunStatus::GuardTripped:
      return "guard_tripped";
  }
  return "timeout";
}

RunStatus parse_run_status(const std::string& name) {
  for (RunStatus s : {RunStatus::Landed, RunStatus::Timeout, RunStatus::PropellantExhausted,
                      RunStatus::FilterInfeasible, RunStatus::GuardTripped}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown run status '" + name + "'");
}

LandingCheck landing_check(const SpacecraftState& x, const Scenario& s) {
  const ConstraintParams& p = s.constraints;
  LandingCheck c;
  c.position_error = (x.r - p.r_f).norm();
  c.altitude_error = p.e_hat_s.dot(x.r - p.r_f);
  c.speed_error = (x.v - p.v_f).norm();
  c.position_ok = c.position_error <= s.landing.radius;
  c.altitude_ok = std::abs(c.altitude_error) <= s.landing.altitude;
  c.speed_ok = c.speed_error <= s.landing.speed;
  c.met = c.position_ok && c.altitude_ok && c.speed_ok;
  return c;
}

// ---------------------------------------------------------------------------
// Monitor

const std::vector<std::string>& ConstraintMonitor::monitored() {
  static const std::vector<std::string> names = {"psi1", "psi2", "phi1", "phi2", "h",
                                                 "h11",  "h22",  "h30",  "h40"};
  return names;
}

void ConstraintMonitor::note(const std::string& name, double value, double t) {
  if (!std::isfinite(value)) return;
  auto [it, fresh] = stats_.try_emplace(name);
  ConstraintStat& s = it->second;
  if (fresh || value < s.min_value) {
    s.min_value = value;
    s.min_time = t;
  }
  if (value < -kViolationTolerance) {
    if (!s.first_violation) s.first_violation = t;
    ++s.violation_count;
  }
}

void ConstraintMonitor::update(const MonitorRecord& rec) {
  if (rec.landing_instant) {
    terminal_psi1_ = rec.psi1;
  } else {
    note("psi1", rec.psi1, rec.t);
  }
  note("psi2", rec.psi2, rec.t);
  note("phi1", rec.phi1, rec.t);
  note("phi2", rec.phi2, rec.t);
  note("h", rec.h, rec.t);
  note("h11", rec.h11, rec.t);
  note("h22", rec.h22, rec.t);
  note("h30", rec.h30, rec.t);
  note("h40", rec.h40, rec.t);
}

std::vector<std::string> ConstraintMonitor::violated() const {
  std::vector<std::string> out;
  for (const auto& name : monitored()) {
    auto it = stats_.find(name);
    if (it != stats_.end() && it->second.first_violation) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics serialization

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(json& j, const RunResult& r) {
  json cons = json::object();
  for (const auto& [name, s] : r.constraints) {
    cons[name] = {{"min", s.min_value},
                  {"min_time", s.min_time},
                  {"first_violation", optional_json(s.first_violation)},
                  {"violation_count", s.violation_count}};
  }
  j = json{{"status", to_string(r.status)},
           {"control", r.control},
           {"t_end", r.t_end},
           {"t_l", optional_json(r.t_l)},
           {"terminal_errors",
            {{"position", r.position_error}, {"altitude", r.altitude_error}, {"speed", r.speed_error}}},
           {"constraints", cons},
           {"violations", r.violations},
           {"terminal_psi1", optional_json(r.terminal_psi1)},
           {"propellant_used", r.propellant_used},
           {"control_steps", r.control_steps},
           {"intervention",
            {{"active_fraction", r.intervention_fraction}, {"max_zeta_change", r.max_intervention}}},
           {"message", r.message},
           {"final_state", r.final_state}};
}

void from_json(const json& j, RunResult& r) {
  r.status = parse_run_status(j.at("status").get<std::string>());
  r.control = j.at("control").get<std::string>();
  r.t_end = j.at("t_end").get<double>();
  r.t_l = optional_from(j, "t_l");
  const json& te = j.at("terminal_errors");
  r.position_error = te.at("position").get<double>();
  r.altitude_error = te.at("altitude").get<double>();
  r.speed_error = te.at("speed").get<double>();
  r.constraints.clear();
  for (const auto& [name, s] : j.at("constraints").items()) {
    ConstraintStat c;
    c.min_value = s.at("min").get<double>();
    c.min_time = s.at("min_time").get<double>();
    c.first_violation = optional_from(s, "first_violation");
    c.violation_count = s.at("violation_count").get<int>();
    r.constraints[name] = c;
  }
  r.violations = j.at("violations").get<std::vector<std::string>>();
  r.terminal_psi1 = optional_from(j, "terminal_psi1");
  r.propellant_used = j.at("propellant_used").get<double>();
  r.control_steps = j.at("control_steps").get<int>();
  r.intervention_fraction = j.at("intervention").at("active_fraction").get<double>();
  r.max_intervention = j.at("intervention").at("max_zeta_change").get<double>();
  r.message = j.at("message").get<std::string>();
  r.final_state = j.at("final_state").get<std::vector<double>>();
}

// ---------------------------------------------------------------------------
// Closed loop

const std::vector<std::string>& telemetry_columns() {
  static const std::vector<std::string> cols = {
      "t",    "rx",   "ry",   "rz",   "vx",    "vy",    "vz",    "m",    "ux",   "uy",
      "uz",   "zx",   "zy",   "zz",   "whx",   "why",   "whz",   "wx",   "wy",   "wz",
      "udx",  "udy",  "udz",  "zdx",  "zdy",   "zdz",   "h",     "h11",  "h22",  "h30",
      "h40",  "phi",  "lambda", "kappa", "psi1", "psi2", "tphi1", "tphi2", "h10", "h20",
      "h21",  "rrx",  "rry",  "rrz",  "vrx",   "vry",   "vrz",   "mr",   "urx",  "ury",
      "urz",  "active"};
  return cols;
}

namespace {

using Vector13d = Eigen::Matrix<double, 13, 1>;

struct PlantView {
  SpacecraftState x;
  Eigen::Vector3d u;
  ObserverState obs;
};

PlantView view(const Vector13d& y, double tau) {
  PlantView p;
  p.x.r = y.segment<3>(0);
  p.x.v = y.segment<3>(3);
  p.x.m = y[6];
  p.u = y.segment<3>(7);
  p.obs.nu = y.segment<3>(10);
  p.obs.tau = tau;
  return p;
}

Eigen::Vector3d clip_magnitude(const Eigen::Vector3d& u, double lo, double hi) {
  const double n = u.norm();
  if (n > hi) return u * (hi / n);
  if (n < lo) {
    if (n > 0.0) return u * (lo / n);
    return Eigen::Vector3d(lo, 0.0, 0.0);
  }
  return u;
}

void append(std::vector<double>& row, const Eigen::Vector3d& v) {
  row.insert(row.end(), {v[0], v[1], v[2]});
}

std::vector<double> state_list(const SpacecraftState& x) {
  return {x.r[0], x.r[1], x.r[2], x.v[0], x.v[1], x.v[2], x.m};
}

}  // namespace

RunOutput run(const Scenario& s, const RunOptions& opts) {
  return run(s, s.build_reference(), opts);
}

RunOutput run(const Scenario& s, const ReferenceTrajectory& traj, const RunOptions& opts) {
  const ControlMode mode = opts.control.value_or(s.control);
  const double t_max = opts.t_max.value_or(s.timing.t_max);
  const double period = s.timing.control_period();
  const double dt = s.timing.dt();
  const double tau = s.observer_gain;
  const double lag = s.gains.lag_rate;
  const bool lagged = mode == ControlMode::Full;

  if (!s.reference.allow_infeasible) {
    const ReferenceReport report = validate_reference(traj, s.constraints);
    // psi1 is monitored but does not gate the reference, which only has to
    // respect the position and input constraints.
    for (std::size_t i = 1; i < 4; ++i) {
      const auto& c = report.constraints[i];
      if (c.first_violation) {
        throw ScenarioError(std::string("reference violates ") + kConstraintNames[i] + " from t = " +
                            std::to_string(*c.first_violation) +
                            " s; set reference.allow_infeasible to run anyway");
      }
    }
  }

  const SafetyFilter filter(s.constraints, s.cbf, s.env, s.vehicle, lag);

  RunOutput out;
  RunResult& res = out.result;
  res.control = to_string(mode);
  if (opts.record) out.telemetry.columns = telemetry_columns();

  const ReferenceSample ref0 = traj.sample(0.0);
  Vector13d y;
  y << s.r0, s.v0, s.vehicle.wet_mass, ref0.u, tau * s.v0;

  ConstraintMonitor monitor;
  int active_steps = 0;
  bool warned_brillouin = false;
  const long max_steps = static_cast<long>(std::floor(t_max / period + 1e-9));

  // Piecewise-constant input over one control period: zeta for the lagged
  // cascade, u itself for the baseline modes.
  Eigen::Vector3d held = ref0.u;

  auto derivative = [&](double t, const Vector13d& state) -> Vector13d {
    const PlantView p = view(state, tau);
    const Eigen::Vector3d w = s.env.gravity.disturbance(p.x.r);
    Vector13d d;
    const Vector7d xd = state_derivative(p.x, p.u, s.env, w, s.vehicle);
    d.head<7>() = xd;
    if (lagged) {
      d.segment<3>(7) = lag * (held - p.u);
    } else {
      d.segment<3>(7).setZero();
    }
    d.segment<3>(10) = nu_derivative(p.x, p.u, p.obs, s.env);
    (void)t;
    return d;
  };

  auto fail = [&](RunStatus status, double t, const std::string& msg, const PlantView& p) {
    res.status = status;
    res.t_end = t;
    res.message = msg;
    res.final_state = state_list(p.x);
    spdlog::warn("run stopped at t = {:.2f} s: {}", t, msg);
  };

  bool finished = false;
  for (long k = 0; !finished; ++k) {
    const double t = static_cast<double>(k) * period;
    PlantView p = view(y, tau);
    const ReferenceSample ref = traj.sample(t);
    const Eigen::Vector3d w_est = w_hat(p.x.v, p.obs);

    if (!warned_brillouin && s.env.truth().inside_brillouin(p.x.r)) {
      spdlog::info("t = {:.2f} s: inside the circumscribing sphere; harmonic series evaluated anyway", t);
      warned_brillouin = true;
    }

    DesiredControl dc;
    FilterDecision fd;
    bool filter_ok = true;
    std::string guard_msg;
    try {
      dc = zeta_desired(p.x, p.u, ref, p.obs, s.env, s.gains, s.vehicle);
      fd = filter.filter(AugmentedState{p.x, p.u}, w_est, dc.zeta_d);
    } catch (const ApexGuardTripped& ex) {
      filter_ok = false;
      guard_msg = ex.what();
    } catch (const FilterInfeasible& ex) {
      if (mode == ControlMode::Full) {
        fail(RunStatus::FilterInfeasible, t, ex.what(), p);
        break;
      }
      filter_ok = false;
    }
    if (!filter_ok && mode == ControlMode::Full && !guard_msg.empty()) {
      fail(RunStatus::GuardTripped, t, guard_msg, p);
      break;
    }

    Eigen::Vector3d command;
    switch (mode) {
      case ControlMode::Full:
        command = fd.zeta_star;
        if (fd.active) {
          ++active_steps;
          res.max_intervention = std::max(res.max_intervention, (fd.zeta_star - dc.zeta_d).norm());
        }
        break;
      case ControlMode::Reference:
        command = ref.u;
        break;
      case ControlMode::Desired:
        command = dc.u_d;
        break;
      case ControlMode::DesiredSaturated:
        command = clip_magnitude(dc.u_d, s.vehicle.thrust_min, s.vehicle.thrust_max);
        break;
    }
    // Baseline modes apply the thrust directly at the control instant.
    if (!lagged) {
      y.segment<3>(7) = command;
      p.u = command;
    }
    held = command;

    const RawConstraints rc = raw_constraints(p.x, p.u, s.constraints);
    const BaseCbfs base = base_cbfs(p.x, p.u, s.constraints);
    const LandingCheck lc = landing_check(p.x, s);

    MonitorRecord rec;
    rec.t = t;
    rec.psi1 = rc.psi1;
    rec.psi2 = rc.psi2;
    rec.phi1 = rc.phi1;
    rec.phi2 = rc.phi2;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CompositeCbf cbf;
    if (filter_ok && lagged) {
      cbf = fd.cbf;
    } else {
      try {
        cbf = filter.composite(AugmentedState{p.x, p.u}, w_est);
      } catch (const ApexGuardTripped&) {
        cbf.h = nan;
        cbf.components = {nan, nan, nan, nan};
      }
    }
    rec.h = cbf.h;
    rec.h11 = cbf.components[0];
    rec.h22 = cbf.components[1];
    rec.h30 = base.h30;
    rec.h40 = base.h40;
    rec.phi = filter_ok ? fd.phi : nan;
    rec.lambda = filter_ok ? fd.lambda : nan;
    rec.landing_instant = lc.met;
    monitor.update(rec);

    if (opts.record) {
      double h21 = nan;
      try {
        h21 = filter.hocbf_glideslope(AugmentedState{p.x, p.u}, Eigen::Vector3d::Zero()).h21;
      } catch (const ApexGuardTripped&) {
      }
      std::vector<double> row;
      row.reserve(telemetry_columns().size());
      row.push_back(t);
      append(row, p.x.r);
      append(row, p.x.v);
      row.push_back(p.x.m);
      append(row, p.u);
      append(row, command);
      append(row, w_est);
      append(row, s.env.gravity.disturbance(p.x.r));
      append(row, dc.u_d);
      append(row, dc.zeta_d);
      row.insert(row.end(), {rec.h, rec.h11, rec.h22, rec.h30, rec.h40, rec.phi, rec.lambda,
                             filter_ok ? fd.kappa_star : nan, rc.psi1, rc.psi2, rc.phi1, rc.phi2,
                             base.h10, base.h20, h21});
      append(row, ref.r);
      append(row, ref.v);
      row.push_back(ref.m);
      append(row, ref.u);
      row.push_back(fd.active && lagged ? 1.0 : 0.0);
      out.telemetry.rows.push_back(std::move(row));
    }

    ++res.control_steps;
    res.t_end = t;
    res.final_state = state_list(p.x);
    res.position_error = lc.position_error;
    res.altitude_error = lc.altitude_error;
    res.speed_error = lc.speed_error;

    if (lc.met) {
      res.status = RunStatus::Landed;
      res.t_l = t;
      spdlog::info("landed at t = {:.2f} s", t);
      break;
    }
    if (k >= max_steps) {
      res.status = RunStatus::Timeout;
      break;
    }

    try {
      for (int i = 0; i < s.timing.substeps; ++i) {
        y = rk4_step(derivative, y, dt, t + i * dt);
      }
    } catch (const PropellantExhausted& ex) {
      fail(RunStatus::PropellantExhausted, t, ex.what(), p);
      finished = true;
    }
    if (k % 2500 == 0) spdlog::debug("t = {:.1f} s, |r - r_f| = {:.2f} m", t, lc.position_error);
  }

  res.constraints = monitor.stats();
  res.violations = monitor.violated();
  res.terminal_psi1 = monitor.terminal_psi1();
  res.propellant_used = s.vehicle.wet_mass - res.final_state.at(6);
  res.intervention_fraction =
      res.control_steps > 0 ? static_cast<double>(active_steps) / res.control_steps : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Output files

void write_telemetry_csv(const Telemetry& t, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    std::fprintf(f, "%s%s", i ? "," : "", t.columns[i].c_str());
  }
  std::fputc('\n', f);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) std::fputc(',', f);
      if (std::isnan(row[i])) {
        std::fputs("nan", f);
      } else {
        std::fprintf(f, "%.17g", row[i]);
      }
    }
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("error while writing " + path.string());
}

std::string plot_script(const std::string& csv_name) {
  std::string s = R"(# gnuplot script for the run telemetry; `gnuplot plots.gp` writes PNGs.
set datafile separator ","
set datafile missing "nan"
set key autotitle columnhead
set terminal pngcairo size 1000,700
set grid
data = "@CSV@"

set output "trajectory.png"
set title "Trajectory in the body frame"
set xlabel "x [m]"; set ylabel "y [m]"; set zlabel "z [m]"
splot data using (column("rx")):(column("ry")):(column("rz")) with lines title "r", \
      data using (column("rrx")):(column("rry")):(column("rrz")) with lines dt 2 title "r_r"

set output "disturbance.png"
set title "Normalized disturbance estimation error"
set xlabel "t [s]"; set ylabel "|w - w_hat| / |w|"
plot data using (column("t")):(sqrt((column("wx")-column("whx"))**2 + (column("wy")-column("why"))**2 + (column("wz")-column("whz"))**2) / sqrt(column("wx")**2 + column("wy")**2 + column("wz")**2)) with lines title "error"

set output "state_constraints.png"
set title "State constraints"
set ylabel "value"
plot data using (column("t")):(column("psi1")) with lines title "psi1", \
     data using (column("t")):(column("psi2")) with lines title "psi2"

set output "input_constraints.png"
set title "Input constraints"
plot data using (column("t")):(column("tphi1")) with lines title "T_max - |u|", \
     data using (column("t")):(column("tphi2")) with lines title "|u| - T_min"

set output "cbfs.png"
set title "Control barrier functions"
plot data using (column("t")):(column("h")) with lines title "h", \
     data using (column("t")):(column("h11")) with lines title "h11", \
     data using (column("t")):(column("h22")) with lines title "h22", \
     data using (column("t")):(column("h30")) with lines title "h30", \
     data using (column("t")):(column("h40")) with lines title "h40"

set output "thrust.png"
set title "Thrust magnitude"
set ylabel "|u| [N]"
plot data using (column("t")):(sqrt(column("ux")**2 + column("uy")**2 + column("uz")**2)) with lines title "u", \
     data using (column("t")):(sqrt(column("udx")**2 + column("udy")**2 + column("udz")**2)) with lines title "u_d", \
     data using (column("t")):(sqrt(column("urx")**2 + column("ury")**2 + column("urz")**2)) with lines dt 2 title "u_r"
)";
  const std::string tag = "@CSV@";
  s.replace(s.find(tag), tag.size(), csv_name);
  return s;
}

void emit(const RunOutput& out, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  write_telemetry_csv(out.telemetry, out_dir / "telemetry.csv");
  {
    const auto path = out_dir / "metrics.json";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << json(out.result).dump(2) << '\n';
  }
  {
    const auto path = out_dir / "plots.gp";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << plot_script();
  }
}

// ---------------------------------------------------------------------------
// Batch

std::vector<BatchEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open manifest " + path.string());
  const json doc = json::parse(in, nullptr, true, true);
  if (!doc.contains("runs") || !doc.at("runs").is_array()) {
    throw ScenarioError("manifest needs a runs array");
  }
  const auto base = path.parent_path();
  std::vector<BatchEntry> out;
  for (const auto& r : doc.at("runs")) {
    BatchEntry e;
    e.scenario = r.at("scenario").get<std::string>();
    if (e.scenario.is_relative()) e.scenario = base / e.scenario;
    e.out_dir = r.value("out", e.scenario.stem().string());
    if (e.out_dir.is_relative()) e.out_dir = base / e.out_dir;
    if (r.contains("control")) e.options.control = parse_control_mode(r.at("control").get<std::string>());
    if (r.contains("t_max")) e.options.t_max = r.at("t_max").get<double>();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<BatchOutcome> run_batch(const std::vector<BatchEntry>& entries, unsigned threads) {
  std::vector<BatchOutcome> results(entries.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(entries.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      BatchOutcome& o = results[i];
      o.entry = entries[i];
      try {
        const Scenario s = load_scenario(entries[i].scenario);
        RunOutput out = run(s, entries[i].options);
        emit(out, entries[i].out_dir);
        o.result = std::move(out.result);
      } catch (const std::exception& ex) {
        o.error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

int exit_code(const RunResult& r) {
  if (!r.landed()) return 3;
  return r.violations.empty() ? 0 : 2;
}

}  // namespace scb
