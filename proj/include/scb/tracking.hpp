#pragma once

#include <Eigen/Dense>

#include "scb/dynamics.hpp"
#include "scb/observer.hpp"
#include "scb/reference.hpp"

namespace scb {

struct TrackingGains {
  double kp = 0.002;     // 1/s^2
  double kv = 0.09;      // 1/s
  double sigma = 5.0;    // 1/s
  double lag_rate = 3.0; // a, 1/s

  void validate() const;
};

/// Feedback-linearizing, disturbance-canceling thrust.
Eigen::Vector3d u_desired(const SpacecraftState& x, const ReferenceSample& ref,
                          const ObserverState& obs, const BodyEnvironment& env,
                          const TrackingGains& gains);

struct DesiredRate {
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  // |u| below 1e-9 N: the mass-flow term is at its kink.
  bool thrust_kink = false;
};

/// Total time derivative of u_desired with x' approximated by the nominal
/// model plus the current estimate.
DesiredRate u_desired_dot(const SpacecraftState& x, const Eigen::Vector3d& u,
                          const ReferenceSample& ref, const ObserverState& obs,
                          const BodyEnvironment& env, const TrackingGains& gains,
                          const VehicleParams& vehicle);

struct DesiredControl {
  Eigen::Vector3d u_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_d_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d zeta_d = Eigen::Vector3d::Zero();
  bool thrust_kink = false;
};

/// Surrogate control that drives u to u_desired at rate sigma through the
/// thrust lag.
DesiredControl zeta_desired(const SpacecraftState& x, const Eigen::Vector3d& u,
                            const ReferenceSample& ref, const ObserverState& obs,
                            const BodyEnvironment& env, const TrackingGains& gains,
                            const VehicleParams& vehicle);

}  // namespace scb
