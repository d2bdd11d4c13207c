#include "scb/reference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <limits>
#include <sstream>

namespace scb {

namespace {

ReferenceSample make_hold(const ReferenceSample& last, const BodyEnvironment& env) {
  // Sitting on the site in the rotating frame: v_r = omega x r_f.
  ReferenceSample hold = last;
  hold.v = env.omega.cross(last.r);
  hold.u = -last.m * drift_acceleration(last.r, hold.v, env);
  hold.u_dot.setZero();
  return hold;
}

}  // namespace

ReferenceTrajectory::ReferenceTrajectory(std::vector<ReferenceSample> samples,
                                         const BodyEnvironment& env)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw ReferenceSchemaError("reference trajectory has no samples", 0);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw ReferenceSchemaError("reference time is not strictly increasing", i + 1);
    }
  }
  accel_.reserve(samples_.size());
  for (const auto& s : samples_) accel_.push_back(drift_acceleration(s.r, s.v, env) + s.u / s.m);
  hold_ = make_hold(samples_.back(), env);
  hold_.t = samples_.back().t;
}

ReferenceSample ReferenceTrajectory::sample(double t) const {
  if (t >= samples_.back().t) {
    if (t == samples_.back().t) return samples_.back();
    ReferenceSample out = hold_;
    out.t = t;
    return out;
  }
  if (t <= samples_.front().t) return samples_.front();

  auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double value, const ReferenceSample& s) { return value < s.t; });
  const ReferenceSample& s1 = *hi;
  const ReferenceSample& s0 = *(hi - 1);
  if (t == s0.t) return s0;

  const double h = s1.t - s0.t;
  const double s = (t - s0.t) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double s5 = s4 * s;
  const auto i0 = static_cast<std::size_t>(&s0 - samples_.data());
  const Eigen::Vector3d& a0 = accel_[i0];
  const Eigen::Vector3d& a1 = accel_[i0 + 1];

  // Quintic Hermite basis (p0, v0, a0, a1, v1, p1) and its derivative in s.
  const double b0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
  const double b1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
  const double b2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const double b3 = 0.5 * s3 - s4 + 0.5 * s5;
  const double b4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
  const double b5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  const double d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
  const double d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
  const double d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
  const double d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
  const double d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
  const double d5 = -d0;

  ReferenceSample out;
  out.t = t;
  const double hh = h * h;
  out.r = b0 * s0.r + b1 * h * s0.v + b2 * hh * a0 + b3 * hh * a1 + b4 * h * s1.v + b5 * s1.r;
  out.v = (d0 * s0.r + d1 * h * s0.v + d2 * hh * a0 + d3 * hh * a1 + d4 * h * s1.v + d5 * s1.r) / h;
  out.m = (1.0 - s) * s0.m + s * s1.m;
  // Thrust: cubic Hermite through (u, u_dot) so that u_dot is its derivative.
  const double c00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double c10 = s3 - 2.0 * s2 + s;
  const double c01 = -2.0 * s3 + 3.0 * s2;
  const double c11 = s3 - s2;
  const double e00 = 6.0 * s2 - 6.0 * s;
  const double e10 = 3.0 * s2 - 4.0 * s + 1.0;
  const double e11 = 3.0 * s2 - 2.0 * s;
  out.u = c00 * s0.u + c10 * h * s0.u_dot + c01 * s1.u + c11 * h * s1.u_dot;
  out.u_dot = (e00 * (s0.u - s1.u)) / h + e10 * s0.u_dot + e11 * s1.u_dot;
  return out;
}

namespace {

// Per-axis polynomial in normalized time s = t / T matching derivatives up to
// order `order` at both ends.
class BoundaryPolynomial {
 public:
  BoundaryPolynomial(const ReferenceBoundary& bc) : t_final_(bc.t_final) {
    const bool septic = bc.j0.has_value() || bc.jf.has_value();
    const int conditions = septic ? 4 : 3;
    const int n = 2 * conditions;
    const double T = bc.t_final;

    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs(n, 3);
    const std::array<Eigen::Vector3d, 4> start = {bc.r0, bc.v0 * T, bc.a0 * T * T,
                                                  bc.j0.value_or(Eigen::Vector3d::Zero()) * T * T * T};
    const std::array<Eigen::Vector3d, 4> end = {bc.rf, bc.vf * T, bc.af * T * T,
                                                bc.jf.value_or(Eigen::Vector3d::Zero()) * T * T * T};
    for (int d = 0; d < conditions; ++d) {
      // d-th derivative at s = 0 isolates coefficient d.
      lhs(d, d) = falling(d, d);
      rhs.row(d) = start[static_cast<std::size_t>(d)].transpose();
      for (int k = d; k < n; ++k) lhs(conditions + d, k) = falling(k, d);
      rhs.row(conditions + d) = end[static_cast<std::size_t>(d)].transpose();
    }
    coeffs_ = lhs.fullPivLu().solve(rhs);
  }

  // Returns the `order`-th time derivative at t.
  Eigen::Vector3d eval(double t, int order) const {
    const double s = t / t_final_;
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int k = static_cast<int>(coeffs_.rows()) - 1; k >= order; --k) {
      out += falling(k, order) * std::pow(s, k - order) * coeffs_.row(k).transpose();
    }
    return out / std::pow(t_final_, order);
  }

 private:
  static double falling(int k, int d) {
    double f = 1.0;
    for (int i = 0; i < d; ++i) f *= (k - i);
    return f;
  }

  double t_final_;
  Eigen::MatrixXd coeffs_;
};

}  // namespace

ReferenceTrajectory generate_reference(const ReferenceBoundary& bc, const BodyEnvironment& env,
                                       const VehicleParams& vehicle, double spacing) {
  if (!(bc.t_final > 0.0)) throw std::invalid_argument("reference final time must be positive");
  if (!(spacing > 0.0)) throw std::invalid_argument("reference spacing must be positive");
  vehicle.validate();

  const BoundaryPolynomial poly(bc);
  const Eigen::Vector3d& w = env.omega;
  // Thrust per unit mass required by the nominal dynamics.
  auto specific_thrust = [&](double t) {
    const Eigen::Vector3d r = poly.eval(t, 0);
    const Eigen::Vector3d v = poly.eval(t, 1);
    return Eigen::Vector3d(poly.eval(t, 2) - drift_acceleration(r, v, env));
  };

  const auto intervals = static_cast<std::size_t>(std::max(1.0, std::ceil(bc.t_final / spacing - 1e-9)));
  const double h = bc.t_final / static_cast<double>(intervals);
  const double alpha = vehicle.alpha();

  std::vector<ReferenceSample> samples;
  samples.reserve(intervals + 1);
  double log_mass = std::log(vehicle.wet_mass);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double t = (i == intervals) ? bc.t_final : static_cast<double>(i) * h;
    if (i > 0) {
      // Simpson's rule on m' = -alpha m |A(t)|, integrated in log m.
      const double t0 = static_cast<double>(i - 1) * h;
      log_mass -= alpha * (t - t0) / 6.0 *
                  (specific_thrust(t0).norm() + 4.0 * specific_thrust(0.5 * (t0 + t)).norm() +
                   specific_thrust(t).norm());
    }
    ReferenceSample s;
    s.t = t;
    s.r = poly.eval(t, 0);
    s.v = poly.eval(t, 1);
    s.m = std::exp(log_mass);
    const Eigen::Vector3d a = poly.eval(t, 2);
    const Eigen::Vector3d jerk = poly.eval(t, 3);
    const Eigen::Vector3d thrust_accel = a - drift_acceleration(s.r, s.v, env);
    s.u = s.m * thrust_accel;
    const Eigen::Vector3d thrust_accel_dot = jerk - env.nominal().hessian(s.r) * s.v +
                                             2.0 * w.cross(a) + w.cross(w.cross(s.v));
    const double m_dot = -alpha * s.u.norm();
    s.u_dot = m_dot * thrust_accel + s.m * thrust_accel_dot;
    samples.push_back(s);
  }
  return ReferenceTrajectory(std::move(samples), env);
}

namespace {

const std::vector<std::string> kRequiredColumns = {"t",  "rx", "ry", "rz", "vx", "vy",
                                                   "vz", "m",  "ux", "uy", "uz"};
const std::vector<std::string> kRateColumns = {"udx", "udy", "udz"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ReferenceSchemaError("row " + std::to_string(row) + ": cannot parse column '" + column +
                                   "' value '" + cell + "'",
                               row);
  }
  if (!std::isfinite(value)) {
    throw ReferenceSchemaError(
        "row " + std::to_string(row) + ": non-finite value in column '" + column + "'", row);
  }
  return value;
}

}  // namespace

ReferenceTrajectory load_reference(const std::filesystem::path& path, const BodyEnvironment& env) {
  std::ifstream in(path);
  if (!in) throw ReferenceSchemaError("cannot open reference file " + path.string(), 0);

  std::string line;
  if (!std::getline(in, line)) throw ReferenceSchemaError("reference file is empty", 0);
  const std::vector<std::string> header = split_csv(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const auto& c : kRequiredColumns) {
    if (!index.count(c)) throw ReferenceSchemaError("reference file missing column '" + c + "'", 0);
  }
  const auto rate_count = std::count_if(kRateColumns.begin(), kRateColumns.end(),
                                        [&](const std::string& c) { return index.count(c) > 0; });
  if (rate_count != 0 && rate_count != 3) {
    throw ReferenceSchemaError("reference file has a partial set of udx,udy,udz columns", 0);
  }
  const bool has_rate = rate_count == 3;

  std::vector<ReferenceSample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ReferenceSchemaError("row " + std::to_string(row) + ": expected " +
                                     std::to_string(header.size()) + " columns",
                                 row);
    }
    auto get = [&](const std::string& c) { return parse_cell(cells[index.at(c)], row, c); };
    ReferenceSample s;
    s.t = get("t");
    s.r = {get("rx"), get("ry"), get("rz")};
    s.v = {get("vx"), get("vy"), get("vz")};
    s.m = get("m");
    s.u = {get("ux"), get("uy"), get("uz")};
    if (has_rate) s.u_dot = {get("udx"), get("udy"), get("udz")};
    if (!samples.empty() && !(s.t > samples.back().t)) {
      throw ReferenceSchemaError(
          "row " + std::to_string(row) + ": time is not strictly increasing", row);
    }
    samples.push_back(s);
  }
  if (samples.empty()) throw ReferenceSchemaError("reference file has no data rows", 0);

  if (!has_rate && samples.size() > 1) {
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
      samples[i].u_dot = (samples[hi].u - samples[lo].u) / (samples[hi].t - samples[lo].t);
    }
  }
  return ReferenceTrajectory(std::move(samples), env);
}

void save_reference(const ReferenceTrajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reference file " + path.string());
  out << "t,rx,ry,rz,vx,vy,vz,m,ux,uy,uz,udx,udy,udz\n";
  char buf[64];
  auto put = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& s : traj.samples()) {
    put(s.t);
    for (int i = 0; i < 3; ++i) put(s.r[i]);
    for (int i = 0; i < 3; ++i) put(s.v[i]);
    put(s.m);
    for (int i = 0; i < 3; ++i) put(s.u[i]);
    for (int i = 0; i < 3; ++i) put(s.u_dot[i], i == 2);
  }
  if (!out) throw std::runtime_error("failed writing reference file " + path.string());
}

}  // namespace scb

namespace scb {

bool ReferenceReport::feasible(double tolerance) const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const ConstraintSummary& c) { return !c.first_violation.has_value() ||
                                                              c.min_value >= -tolerance; });
}

ReferenceReport validate_reference(const ReferenceTrajectory& traj, const ConstraintParams& p) {
  ReferenceReport report;
  for (auto& c : report.constraints) c.min_value = std::numeric_limits<double>::infinity();
  std::array<std::optional<double>, 4> open_since;
  double last_t = 0.0;
  for (const auto& s : traj.samples()) {
    const RawConstraints rc = raw_constraints(s.state(), s.u, p);
    const std::array<double, 4> values = {rc.psi1, rc.psi2, rc.phi1, rc.phi2};
    for (std::size_t i = 0; i < 4; ++i) {
      ConstraintSummary& c = report.constraints[i];
      if (values[i] < c.min_value) {
        c.min_value = values[i];
        c.min_time = s.t;
      }
      if (values[i] < 0.0) {
        if (!c.first_violation) c.first_violation = s.t;
        if (!open_since[i]) open_since[i] = s.t;
      } else if (open_since[i]) {
        c.violating_intervals.emplace_back(*open_since[i], last_t);
        open_since[i].reset();
      }
    }
    last_t = s.t;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (open_since[i]) report.constraints[i].violating_intervals.emplace_back(*open_since[i], last_t);
  }
  const ReferenceSample& hold = traj.terminal_hold();
  report.hold = raw_constraints(hold.state(), hold.u, p);
  return report;
}

}  // namespace scb
