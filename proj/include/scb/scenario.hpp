#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scb/dynamics.hpp"
#include "scb/gravity.hpp"
#include "scb/reference.hpp"
#include "scb/safety.hpp"
#include "scb/tracking.hpp"

namespace scb {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ControlMode { Full, Reference, Desired, DesiredSaturated };

ControlMode parse_control_mode(const std::string& name);
std::string to_string(ControlMode mode);

struct LandingTolerances {
  double radius = 0.6;    // r_l
  double altitude = 0.5;  // delta
  double speed = 0.3;     // epsilon
};

struct TimingParams {
  double control_rate = 25.0;  // Hz
  int substeps = 4;            // RK4 steps per control period
  double t_max = 1200.0;       // s

  double control_period() const { return 1.0 / control_rate; }
  double dt() const { return control_period() / substeps; }
};

struct ReferenceSpec {
  // Exactly one of `generate` / `file` is used.
  std::optional<ReferenceBoundary> generate;
  std::optional<std::filesystem::path> file;
  bool allow_infeasible = false;
};

/// Fully resolved simulation setup.
struct Scenario {
  std::string name = "scenario";
  std::vector<Ellipsoid> ellipsoids;
  BodyEnvironment env;
  VehicleParams vehicle;
  Eigen::Vector3d r0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  LandingTolerances landing;
  ConstraintParams constraints;
  double observer_gain = 10.0;  // tau
  TrackingGains gains;
  CbfParams cbf;
  TimingParams timing;
  ReferenceSpec reference;
  ControlMode control = ControlMode::Full;
  std::uint64_t seed = 0;
  nlohmann::json source;  // document the scenario was built from

  void validate() const;
  ReferenceTrajectory build_reference() const;
};

/// Parses a scenario document; relative reference paths resolve against
/// `base_dir`. Comments (// and /* */) are accepted.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace scb
