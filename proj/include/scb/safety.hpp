#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

#include "scb/dual.hpp"
#include "scb/dynamics.hpp"

namespace scb {

/// Orientation of the speed constraint. MaxSpeed bounds |v - v_f| from above
/// by v_min sqrt(1 + |r - r_f|^2); MinSpeed is the opposite inequality.
enum class SpeedSense { MaxSpeed, MinSpeed };

struct ConstraintParams {
  double v_min = 0.0;
  double theta_gs = 0.0;
  double beta = 1.0;
  Eigen::Vector3d e_hat_s = Eigen::Vector3d::UnitX();
  Eigen::Vector3d r_f = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_f = Eigen::Vector3d::Zero();
  double k_vel = 1.0;
  double k_gs = 1.0;
  double k_u = 1.0;
  double thrust_min = 0.0;
  double thrust_max = 1.0;
  double landing_radius = 0.0;
  SpeedSense speed_sense = SpeedSense::MaxSpeed;
  // Radius around the cone apex beta r_f inside which the glideslope
  // higher-order terms are not evaluated.
  double apex_guard = 0.05;

  /// Scalings and derived constants used in the flight scenarios:
  /// v_min = sqrt(|v_f|), beta = 1 - r_l/(|r_f| tan theta), e_hat_s = r_f/|r_f|,
  /// k_gs = 1/(0.1 |r_f|), k_vel = 1/(10 v_min |r_f|^2), k_u = 1/(T_max^2 - T_min^2).
  static ConstraintParams standard(const Eigen::Vector3d& r_f, const Eigen::Vector3d& v_f,
                                   double landing_radius, double theta_gs,
                                   const VehicleParams& vehicle);

  void validate() const;
};

enum class DisturbanceMode { Zero, Estimate, Truth };

struct CbfParams {
  double rho = 40.0;
  double gamma = 1e10;
  double alpha1_gain = 1.0;
  double beta1_gain = 10.0;
  double beta2_gain = 10.0;
  double alpha_gain = 10.0;
  DisturbanceMode state_mode = DisturbanceMode::Zero;   // inside h11, h22
  DisturbanceMode filter_mode = DisturbanceMode::Zero;  // inside b

  void validate() const;
};

struct RawConstraints {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
};

struct BaseCbfs {
  double h10 = 0.0;
  double h20 = 0.0;
  double h30 = 0.0;
  double h40 = 0.0;
};

struct Glideslope {
  double h21 = 0.0;
  double h22 = 0.0;
};

struct CompositeCbf {
  double h = 0.0;
  std::array<double, 4> components{};  // h11, h22, h30, h40
  std::array<double, 4> weights{};
  Eigen::Matrix<double, 7, 1> dh_dx = Eigen::Matrix<double, 7, 1>::Zero();
  Eigen::Vector3d dh_du = Eigen::Vector3d::Zero();
};

struct FilterDecision {
  Eigen::Vector3d zeta_star = Eigen::Vector3d::Zero();
  double kappa_star = 0.0;
  double lambda = 0.0;
  double phi = 0.0;
  double h = 0.0;
  bool active = false;
  CompositeCbf cbf;
};

class ApexGuardTripped : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FilterInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RawConstraints raw_constraints(const SpacecraftState& x, const Eigen::Vector3d& u,
                               const ConstraintParams& p);
BaseCbfs base_cbfs(const SpacecraftState& x, const Eigen::Vector3d& u, const ConstraintParams& p);

/// -(1/rho) log sum exp(-rho z_i), evaluated with a shift by min z_i.
double softmin(std::span<const double> values, double rho);

/// Higher-order CBFs, their soft-minimum composite and the closed-form
/// minimum-intervention filter for the thrust-lag cascade.
class SafetyFilter {
 public:
  SafetyFilter(ConstraintParams constraints, CbfParams cbf, BodyEnvironment env,
               VehicleParams vehicle, double lag_rate);

  const ConstraintParams& constraints() const { return p_; }
  const CbfParams& cbf() const { return c_; }
  const BodyEnvironment& environment() const { return env_; }
  double lag_rate() const { return lag_rate_; }

  double hocbf_velocity(const AugmentedState& xh, const Eigen::Vector3d& w_hat) const;
  Glideslope hocbf_glideslope(const AugmentedState& xh, const Eigen::Vector3d& w_hat) const;
  CompositeCbf composite(const AugmentedState& xh, const Eigen::Vector3d& w_hat) const;

  /// L_f h + a dh/du zeta + dh/dx D w + alpha(h) + kappa h.
  double relaxed_constraint_b(const AugmentedState& xh, const Eigen::Vector3d& w_hat,
                              const Eigen::Vector3d& zeta, double kappa) const;
  double relaxed_constraint_b(const AugmentedState& xh, const CompositeCbf& cbf,
                              const Eigen::Vector3d& w_hat, const Eigen::Vector3d& zeta,
                              double kappa) const;

  FilterDecision filter(const AugmentedState& xh, const Eigen::Vector3d& w_hat,
                        const Eigen::Vector3d& zeta_d) const;

  /// Cost 0.5 |zeta - zeta_d|^2 + 0.5 gamma kappa^2.
  double cost(const Eigen::Vector3d& zeta_d, const Eigen::Vector3d& zeta, double kappa) const;

  /// Augmented drift f_hat(x, u) without disturbance.
  Vector10d augmented_drift(const AugmentedState& xh) const;

  template <class T>
  using Aug = std::array<T, 10>;

  template <class T>
  T h10_t(const Aug<T>& x) const;
  template <class T>
  T h20_t(const Aug<T>& x) const;
  template <class T>
  T h30_t(const Aug<T>& x) const;
  template <class T>
  T h40_t(const Aug<T>& x) const;
  template <class T>
  T h11_t(const Aug<T>& x, const Eigen::Vector3d& w_hat) const;
  template <class T>
  T h21_t(const Aug<T>& x) const;
  template <class T>
  T h22_t(const Aug<T>& x, const Eigen::Vector3d& w_hat) const;

 private:
  template <class T>
  Aug<T> field_t(const Aug<T>& x, DisturbanceMode mode, const Eigen::Vector3d& w_hat) const;
  Eigen::Vector3d disturbance_for(DisturbanceMode mode, const Eigen::Vector3d& r,
                                  const Eigen::Vector3d& w_hat) const;

  ConstraintParams p_;
  CbfParams c_;
  BodyEnvironment env_;
  VehicleParams vehicle_;
  double lag_rate_;
};

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
V3<T> segment(const std::array<T, 10>& x, int start) {
  const auto s = static_cast<std::size_t>(start);
  return {{x[s], x[s + 1], x[s + 2]}};
}

// Value and derivative of g along `dir` at x.
template <class T, class G>
Dual<T> directional(const std::array<T, 10>& x, const std::array<T, 10>& dir, const G& g) {
  std::array<Dual<T>, 10> xd;
  for (std::size_t i = 0; i < 10; ++i) xd[i] = Dual<T>(x[i], dir[i]);
  return g(xd);
}

}  // namespace detail

template <class T>
T SafetyFilter::h10_t(const Aug<T>& x) const {
  const V3<T> dr = detail::segment(x, 0) - lift<T>(p_.r_f);
  const V3<T> dv = detail::segment(x, 3) - lift<T>(p_.v_f);
  const double vmin2 = p_.v_min * p_.v_min;
  T margin = vmin2 * (1.0 + squared_norm(dr)) - squared_norm(dv);
  if (p_.speed_sense == SpeedSense::MinSpeed) margin = -margin;
  return p_.k_vel * margin;
}

template <class T>
T SafetyFilter::h20_t(const Aug<T>& x) const {
  const V3<T> d = detail::segment(x, 0) - lift<T>(Eigen::Vector3d(p_.beta * p_.r_f));
  return p_.k_gs * (dot(lift<T>(p_.e_hat_s), d) - std::cos(p_.theta_gs) * norm(d));
}

template <class T>
T SafetyFilter::h30_t(const Aug<T>& x) const {
  return p_.k_u * (p_.thrust_max * p_.thrust_max - squared_norm(detail::segment(x, 7)));
}

template <class T>
T SafetyFilter::h40_t(const Aug<T>& x) const {
  return p_.k_u * (squared_norm(detail::segment(x, 7)) - p_.thrust_min * p_.thrust_min);
}

template <class T>
SafetyFilter::Aug<T> SafetyFilter::field_t(const Aug<T>& x, DisturbanceMode mode,
                                           const Eigen::Vector3d& w_hat) const {
  const V3<T> r = detail::segment(x, 0);
  const V3<T> v = detail::segment(x, 3);
  const T& m = x[6];
  const V3<T> u = detail::segment(x, 7);
  V3<T> accel = drift_acceleration_t(r, v, env_) + (1.0 / m) * u;
  if (mode == DisturbanceMode::Estimate) {
    accel = accel + lift<T>(w_hat);
  } else if (mode == DisturbanceMode::Truth) {
    accel = accel + env_.gravity.disturbance_t(r);
  }
  Aug<T> f;
  for (int i = 0; i < 3; ++i) {
    f[static_cast<std::size_t>(i)] = v[i];
    f[static_cast<std::size_t>(3 + i)] = accel[i];
    f[static_cast<std::size_t>(7 + i)] = -lag_rate_ * u[i];
  }
  f[6] = -vehicle_.alpha() * norm(u);
  return f;
}

template <class T>
T SafetyFilter::h11_t(const Aug<T>& x, const Eigen::Vector3d& w_hat) const {
  const Aug<T> dir = field_t(x, c_.state_mode, w_hat);
  const Dual<T> h = detail::directional(x, dir, [&](const auto& xx) { return h10_t(xx); });
  return h.d + c_.alpha1_gain * h.v;
}

template <class T>
T SafetyFilter::h21_t(const Aug<T>& x) const {
  const V3<T> d = detail::segment(x, 0) - lift<T>(Eigen::Vector3d(p_.beta * p_.r_f));
  if (primal(norm(d)) < p_.apex_guard) {
    throw ApexGuardTripped("glideslope CBF evaluated within the apex guard radius");
  }
  const Aug<T> dir = field_t(x, DisturbanceMode::Zero, Eigen::Vector3d::Zero());
  const Dual<T> h = detail::directional(x, dir, [&](const auto& xx) { return h20_t(xx); });
  return h.d + c_.beta1_gain * h.v;
}

template <class T>
T SafetyFilter::h22_t(const Aug<T>& x, const Eigen::Vector3d& w_hat) const {
  const Aug<T> dir = field_t(x, c_.state_mode, w_hat);
  const Dual<T> h = detail::directional(x, dir, [&](const auto& xx) { return h21_t(xx); });
  return h.d + c_.beta2_gain * h.v;
}

}  // namespace scb
