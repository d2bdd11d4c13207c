#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>

#include "scb/dual.hpp"
#include "scb/gravity.hpp"

namespace scb {

inline constexpr double kStandardGravity = 9.807;  // m/s^2

using Vector7d = Eigen::Matrix<double, 7, 1>;
using Vector10d = Eigen::Matrix<double, 10, 1>;

struct VehicleParams {
  double wet_mass = 700.0;
  double dry_mass = 500.0;
  double isp = 225.0;
  double thrust_min = 5.0;
  double thrust_max = 20.0;

  /// Mass-flow coefficient 1/(Isp g_E).
  double alpha() const { return 1.0 / (isp * kStandardGravity); }
  double propellant() const { return wet_mass - dry_mass; }
  void validate() const;
};

struct BodyEnvironment {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  DisturbanceField gravity;

  const GravityModel& truth() const { return gravity.truth; }
  const GravityModel& nominal() const { return gravity.nominal; }
};

/// Position, velocity and mass in the rotating body frame.
struct SpacecraftState {
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double m = 0.0;

  Vector7d packed() const;
  static SpacecraftState unpack(const Eigen::Ref<const Vector7d>& x);
};

/// Spacecraft state with the thrust vector appended.
struct AugmentedState {
  SpacecraftState x;
  Eigen::Vector3d u = Eigen::Vector3d::Zero();

  Vector10d packed() const;
  static AugmentedState unpack(const Eigen::Ref<const Vector10d>& xh);
};

class PropellantExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
  double time;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& omega);

/// Velocity block of the drift: -2 w x v - w x (w x r) + U_m'(r)^T.
Eigen::Vector3d drift_acceleration(const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                                   const BodyEnvironment& env);

/// Unforced drift f(x) under the nominal gravity model.
Vector7d drift(const SpacecraftState& x, const BodyEnvironment& env);

/// f(x) + g(x) u + D w + B |u|. Throws PropellantExhausted when m < m_d.
Vector7d state_derivative(const SpacecraftState& x, const Eigen::Vector3d& u,
                          const BodyEnvironment& env, const Eigen::Vector3d& w,
                          const VehicleParams& vehicle);

/// Cascade of the spacecraft with the first-order thrust lag u' = -a u + a zeta.
Vector10d augmented_derivative(const AugmentedState& xh, const Eigen::Vector3d& zeta,
                               const BodyEnvironment& env, const Eigen::Vector3d& w,
                               const VehicleParams& vehicle, double lag_rate);

/// Classical fourth-order Runge-Kutta step.
template <class State, class Derivative>
State rk4_step(const Derivative& f, const State& y, double dt, double t = 0.0) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4 step size must be positive");
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * dt, State(y + 0.5 * dt * k1));
  const State k3 = f(t + 0.5 * dt, State(y + 0.5 * dt * k2));
  const State k4 = f(t + dt, State(y + dt * k3));
  State next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw IntegrationError("non-finite state in rk4 step", t);
  return next;
}

// Templated velocity-block drift used by the differentiated paths.
template <class T>
V3<T> drift_acceleration_t(const V3<T>& r, const V3<T>& v, const BodyEnvironment& env) {
  const V3<T> w = lift<T>(env.omega);
  return env.nominal().gradient_t(r) - 2.0 * cross(w, v) - cross(w, cross(w, r));
}

}  // namespace scb
