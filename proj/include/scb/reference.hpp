#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scb/dynamics.hpp"
#include "scb/safety.hpp"

namespace scb {

struct ReferenceSample {
  double t = 0.0;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double m = 0.0;
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_dot = Eigen::Vector3d::Zero();

  SpacecraftState state() const { return {r, v, m}; }
};

class ReferenceSchemaError : public std::runtime_error {
 public:
  ReferenceSchemaError(const std::string& what, std::size_t row_index)
      : std::runtime_error(what), row(row_index) {}
  std::size_t row;  // 1-based data row, 0 for header problems
};

/// Time-ordered reference samples. Position is a quintic Hermite through the
/// node positions, velocities and model accelerations (nominal drift plus
/// u/m); thrust is a cubic Hermite through (u, u_dot); mass is linear. Past the last node the terminal
/// hold keeps r_f with v_f and the thrust that balances the nominal drift.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  ReferenceTrajectory(std::vector<ReferenceSample> samples, const BodyEnvironment& env);

  const std::vector<ReferenceSample>& samples() const { return samples_; }
  double final_time() const { return samples_.back().t; }
  const ReferenceSample& terminal_hold() const { return hold_; }

  ReferenceSample sample(double t) const;

 private:
  std::vector<ReferenceSample> samples_;
  std::vector<Eigen::Vector3d> accel_;
  ReferenceSample hold_;
};

/// Boundary conditions for the polynomial generator. Accelerations default to
/// zero (quintic); supplying jerks raises the degree to seven.
struct ReferenceBoundary {
  Eigen::Vector3d r0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d a0 = Eigen::Vector3d::Zero();
  std::optional<Eigen::Vector3d> j0;
  Eigen::Vector3d rf = Eigen::Vector3d::Zero();
  Eigen::Vector3d vf = Eigen::Vector3d::Zero();
  Eigen::Vector3d af = Eigen::Vector3d::Zero();
  std::optional<Eigen::Vector3d> jf;
  double t_final = 1.0;
};

inline constexpr double kReferenceSpacing = 0.2;  // s

/// Polynomial position profile with thrust from inverse nominal dynamics and
/// mass from the nominal mass flow.
ReferenceTrajectory generate_reference(const ReferenceBoundary& bc, const BodyEnvironment& env,
                                       const VehicleParams& vehicle,
                                       double spacing = kReferenceSpacing);

struct ConstraintSummary {
  double min_value = 0.0;
  double min_time = 0.0;
  std::optional<double> first_violation;
  std::vector<std::pair<double, double>> violating_intervals;
};

/// Per-sample evaluation of psi1, psi2, phi1, phi2 along the stored nodes,
/// plus the terminal hold state.
struct ReferenceReport {
  std::array<ConstraintSummary, 4> constraints;  // psi1, psi2, phi1, phi2
  RawConstraints hold;

  bool feasible(double tolerance = 0.0) const;
};

inline constexpr std::array<const char*, 4> kConstraintNames = {"psi1", "psi2", "phi1", "phi2"};

ReferenceReport validate_reference(const ReferenceTrajectory& traj, const ConstraintParams& p);

ReferenceTrajectory load_reference(const std::filesystem::path& path, const BodyEnvironment& env);
void save_reference(const ReferenceTrajectory& traj, const std::filesystem::path& path);

}  // namespace scb
