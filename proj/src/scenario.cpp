#include "scb/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace scb {

using nlohmann::json;

ControlMode parse_control_mode(const std::string& name) {
  if (name == "full") return ControlMode::Full;
  if (name == "ref") return ControlMode::Reference;
  if (name == "ud") return ControlMode::Desired;
  if (name == "ud-sat") return ControlMode::DesiredSaturated;
  throw ScenarioError("unknown control mode '" + name + "' (expected full, ref, ud or ud-sat)");
}

std::string to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::Full:
      return "full";
    case ControlMode::Reference:
      return "ref";
    case ControlMode::Desired:
      return "ud";
    case ControlMode::DesiredSaturated:
      return "ud-sat";
  }
  return "full";
}

namespace {

Eigen::Vector3d vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(what + " must be a 3-element array");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ScenarioError(what + " must be numeric");
    out[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ScenarioError(std::string(key) + " must be a number");
  return obj.at(key).get<double>();
}

double required_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + "." + key + " is required");
  return number(obj, key, 0.0);
}

const json& required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + "." + key + " is required");
  return obj.at(key);
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw ScenarioError(std::string(key) + " must be a table");
  return doc.at(key);
}

DisturbanceMode parse_disturbance_mode(const std::string& s) {
  if (s == "zero") return DisturbanceMode::Zero;
  if (s == "estimate") return DisturbanceMode::Estimate;
  if (s == "truth") return DisturbanceMode::Truth;
  throw ScenarioError("unknown disturbance mode '" + s + "'");
}

Eigen::Matrix3d principal_axes(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError("principal_axes must list three vectors");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) m.col(i) = vec3(j[static_cast<std::size_t>(i)], "principal axis");
  if (!(m.transpose() * m).isIdentity(1e-9)) {
    throw ScenarioError("principal_axes must be orthonormal");
  }
  return m;
}

Ellipsoid parse_ellipsoid(const json& j) {
  Ellipsoid e;
  const Eigen::Vector3d axes = vec3(j.at("semi_axes"), "semi_axes");
  e.a = axes[0];
  e.b = axes[1];
  e.c = axes[2];
  e.density = required_number(j, "density", "ellipsoid");
  if (j.contains("center")) e.center_offset = vec3(j.at("center"), "center");
  if (j.contains("principal_axes")) e.orientation = principal_axes(j.at("principal_axes"));
  try {
    e.validate();
  } catch (const std::exception& ex) {
    throw ScenarioError(std::string("ellipsoid: ") + ex.what());
  }
  return e;
}

std::optional<Eigen::Vector3d> optional_vec3(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return vec3(j.at(key), key);
}

}  // namespace

void Scenario::validate() const {
  vehicle.validate();
  constraints.validate();
  cbf.validate();
  gains.validate();
  if (!(observer_gain > 0.0)) throw ScenarioError("controller.tau must be positive");
  if (!(timing.control_rate > 0.0 && timing.substeps >= 1 && timing.t_max > 0.0)) {
    throw ScenarioError("timing values must be positive");
  }
  if (!(landing.radius > 0.0 && landing.altitude > 0.0 && landing.speed > 0.0)) {
    throw ScenarioError("landing tolerances must be positive");
  }
  if (reference.generate.has_value() == reference.file.has_value()) {
    throw ScenarioError("reference must specify exactly one of generate or file");
  }
}

ReferenceTrajectory Scenario::build_reference() const {
  if (reference.file) return load_reference(*reference.file, env);
  return generate_reference(*reference.generate, env, vehicle);
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ScenarioError("scenario document must be a table");
  Scenario s;
  s.source = doc;
  s.name = doc.value("name", std::string("scenario"));

  // Body and gravity models.
  const json& body = section(doc, "body");
  if (!body.contains("ellipsoids") || !body.at("ellipsoids").is_array() ||
      body.at("ellipsoids").empty()) {
    throw ScenarioError("body.ellipsoids must list at least one ellipsoid");
  }
  for (const auto& e : body.at("ellipsoids")) s.ellipsoids.push_back(parse_ellipsoid(e));
  const double period_h = required_number(body, "rotation_period_hours", "body");
  if (!(period_h > 0.0)) throw ScenarioError("body.rotation_period_hours must be positive");
  Eigen::Vector3d axis = body.contains("rotation_axis") ? vec3(body.at("rotation_axis"), "rotation_axis")
                                                        : Eigen::Vector3d::UnitZ();
  if (!(axis.norm() > 0.0)) throw ScenarioError("body.rotation_axis must be non-zero");
  s.env.omega = axis.normalized() * (2.0 * std::numbers::pi / (period_h * 3600.0));

  const GravityModel truth = GravityModel::harmonic(s.ellipsoids);
  const json& nominal = section(body, "nominal");
  const std::string nominal_kind = nominal.value("model", std::string("point_mass"));
  const double mass_scale = number(nominal, "mass_scale", 1.0);
  GravityModel nominal_model;
  if (nominal_kind == "point_mass") {
    const Eigen::Vector3d offset =
        nominal.contains("offset") ? vec3(nominal.at("offset"), "nominal.offset") : Eigen::Vector3d::Zero();
    nominal_model = GravityModel::point_mass(truth.total_mu(), offset).scaled(mass_scale);
  } else if (nominal_kind == "harmonic") {
    nominal_model = truth.scaled(mass_scale);
  } else {
    throw ScenarioError("body.nominal.model must be point_mass or harmonic");
  }
  s.env.gravity = DisturbanceField{truth, nominal_model};

  // Vehicle.
  const json& veh = section(doc, "vehicle");
  s.vehicle.wet_mass = number(veh, "wet_mass", s.vehicle.wet_mass);
  s.vehicle.dry_mass = number(veh, "dry_mass", s.vehicle.dry_mass);
  s.vehicle.isp = number(veh, "isp", s.vehicle.isp);
  s.vehicle.thrust_min = number(veh, "thrust_min", s.vehicle.thrust_min);
  s.vehicle.thrust_max = number(veh, "thrust_max", s.vehicle.thrust_max);

  // Boundary states.
  const json& init = section(doc, "initial");
  s.r0 = vec3(required(init, "r", "initial"), "initial.r");
  s.v0 = vec3(required(init, "v", "initial"), "initial.v");
  const json& target = section(doc, "target");
  const Eigen::Vector3d r_f = vec3(required(target, "r", "target"), "target.r");
  const Eigen::Vector3d derived_vf = s.env.omega.cross(r_f);
  Eigen::Vector3d v_f = derived_vf;
  if (target.contains("v") && !(target.at("v").is_string() && target.at("v") == "derive")) {
    v_f = vec3(target.at("v"), "target.v");
    if ((v_f - derived_vf).norm() > 1e-3) {
      std::ostringstream msg;
      msg << "target.v differs from omega x r_f by " << (v_f - derived_vf).norm() << " m/s";
      throw ScenarioError(msg.str());
    }
  }

  const json& land = section(doc, "landing");
  s.landing.radius = number(land, "radius", s.landing.radius);
  s.landing.altitude = number(land, "altitude", s.landing.altitude);
  s.landing.speed = number(land, "speed", s.landing.speed);

  // Constraints; derived constants follow the standard rules unless overridden.
  const json& cons = section(doc, "constraints");
  const double theta = number(cons, "glideslope_deg", 45.0) * std::numbers::pi / 180.0;
  s.constraints = ConstraintParams::standard(r_f, v_f, s.landing.radius, theta, s.vehicle);
  if (cons.contains("v_min")) s.constraints.v_min = number(cons, "v_min", 0.0);
  if (cons.contains("beta")) s.constraints.beta = number(cons, "beta", 0.0);
  if (auto e = optional_vec3(cons, "e_hat_s")) s.constraints.e_hat_s = e->normalized();
  if (cons.contains("v_min")) {
    const double rf2 = r_f.squaredNorm();
    s.constraints.k_vel = 1.0 / (10.0 * s.constraints.v_min * rf2);
  }
  s.constraints.k_vel = number(cons, "k_vel", s.constraints.k_vel);
  s.constraints.k_gs = number(cons, "k_gs", s.constraints.k_gs);
  s.constraints.k_u = number(cons, "k_u", s.constraints.k_u);
  const std::string sense = cons.value("speed_sense", std::string("max"));
  if (sense == "max") {
    s.constraints.speed_sense = SpeedSense::MaxSpeed;
  } else if (sense == "min") {
    s.constraints.speed_sense = SpeedSense::MinSpeed;
  } else {
    throw ScenarioError("constraints.speed_sense must be max or min");
  }
  s.constraints.apex_guard = number(cons, "apex_guard", s.constraints.apex_guard);

  // Controller.
  const json& ctl = section(doc, "controller");
  s.observer_gain = number(ctl, "tau", s.observer_gain);
  s.gains.kp = number(ctl, "kp", s.gains.kp);
  s.gains.kv = number(ctl, "kv", s.gains.kv);
  s.gains.sigma = number(ctl, "sigma", s.gains.sigma);
  s.gains.lag_rate = number(ctl, "a", s.gains.lag_rate);
  if (ctl.contains("mode")) s.control = parse_control_mode(ctl.at("mode").get<std::string>());

  const json& cbf = section(doc, "cbf");
  s.cbf.rho = number(cbf, "rho", s.cbf.rho);
  s.cbf.gamma = number(cbf, "gamma", s.cbf.gamma);
  s.cbf.alpha1_gain = number(cbf, "alpha1", s.cbf.alpha1_gain);
  s.cbf.beta1_gain = number(cbf, "beta1", s.cbf.beta1_gain);
  s.cbf.beta2_gain = number(cbf, "beta2", s.cbf.beta2_gain);
  s.cbf.alpha_gain = number(cbf, "alpha", s.cbf.alpha_gain);
  if (cbf.contains("state_disturbance")) {
    s.cbf.state_mode = parse_disturbance_mode(cbf.at("state_disturbance").get<std::string>());
  }
  if (cbf.contains("filter_disturbance")) {
    s.cbf.filter_mode = parse_disturbance_mode(cbf.at("filter_disturbance").get<std::string>());
  }

  const json& tim = section(doc, "timing");
  s.timing.control_rate = number(tim, "control_rate", s.timing.control_rate);
  s.timing.t_max = number(tim, "t_max", s.timing.t_max);
  if (tim.contains("dt")) {
    const double dt = number(tim, "dt", 0.01);
    const double steps = 1.0 / (s.timing.control_rate * dt);
    if (!(dt > 0.0) || std::abs(steps - std::round(steps)) > 1e-9) {
      throw ScenarioError("timing.dt must divide the control period evenly");
    }
    s.timing.substeps = static_cast<int>(std::lround(steps));
  }

  const json& ref = section(doc, "reference");
  s.reference.allow_infeasible = ref.value("allow_infeasible", false);
  if (ref.contains("file")) {
    std::filesystem::path p = ref.at("file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    s.reference.file = p;
  }
  if (ref.contains("generate")) {
    const json& g = ref.at("generate");
    ReferenceBoundary bc;
    bc.r0 = s.r0;
    bc.v0 = s.v0;
    bc.rf = r_f;
    bc.vf = v_f;
    bc.t_final = required_number(g, "t_f", "reference.generate");
    if (auto v = optional_vec3(g, "a0")) bc.a0 = *v;
    if (auto v = optional_vec3(g, "af")) bc.af = *v;
    bc.j0 = optional_vec3(g, "j0");
    bc.jf = optional_vec3(g, "jf");
    s.reference.generate = bc;
  }

  s.seed = doc.value("seed", std::uint64_t{0});
  try {
    s.validate();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ScenarioError(ex.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& ex) {
    throw ScenarioError(path.string() + ": " + ex.what());
  }
  try {
    return scenario_from_json(doc, path.parent_path());
  } catch (const json::exception& ex) {
    throw ScenarioError(path.string() + ": " + ex.what());
  }
}

}  // namespace scb
