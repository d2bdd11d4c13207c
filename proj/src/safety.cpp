#include "scb/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace scb {

ConstraintParams ConstraintParams::standard(const Eigen::Vector3d& r_f, const Eigen::Vector3d& v_f,
                                            double landing_radius, double theta_gs,
                                            const VehicleParams& vehicle) {
  ConstraintParams p;
  p.r_f = r_f;
  p.v_f = v_f;
  p.theta_gs = theta_gs;
  p.landing_radius = landing_radius;
  p.v_min = std::sqrt(v_f.norm());
  p.beta = 1.0 - landing_radius / (r_f.norm() * std::tan(theta_gs));
  p.e_hat_s = r_f.normalized();
  p.k_gs = 1.0 / (0.1 * r_f.norm());
  p.k_vel = 1.0 / (10.0 * p.v_min * r_f.squaredNorm());
  p.thrust_min = vehicle.thrust_min;
  p.thrust_max = vehicle.thrust_max;
  p.k_u = 1.0 / (vehicle.thrust_max * vehicle.thrust_max - vehicle.thrust_min * vehicle.thrust_min);
  return p;
}

void ConstraintParams::validate() const {
  if (!(v_min > 0.0)) throw std::invalid_argument("v_min must be positive");
  if (!(theta_gs >= 0.0 && theta_gs <= 0.5 * std::numbers::pi)) {
    throw std::invalid_argument("glideslope angle must lie in [0, pi/2]");
  }
  if (std::abs(e_hat_s.norm() - 1.0) > 1e-9) throw std::invalid_argument("e_hat_s must be a unit vector");
  if (!(k_vel > 0.0 && k_gs > 0.0 && k_u > 0.0)) {
    throw std::invalid_argument("CBF scaling constants must be positive");
  }
  if (!(thrust_min >= 0.0 && thrust_min < thrust_max)) {
    throw std::invalid_argument("thrust bounds must satisfy 0 <= T_min < T_max");
  }
  if (!(apex_guard >= 0.0)) throw std::invalid_argument("apex guard radius must be non-negative");
}

void CbfParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("soft-min sharpness rho must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("slack weight gamma must be positive");
  if (!(alpha1_gain > 0.0 && beta1_gain > 0.0 && beta2_gain > 0.0 && alpha_gain > 0.0)) {
    throw std::invalid_argument("class-K gains must be positive");
  }
}

RawConstraints raw_constraints(const SpacecraftState& x, const Eigen::Vector3d& u,
                               const ConstraintParams& p) {
  RawConstraints out;
  const double speed_bound = p.v_min * std::sqrt(1.0 + (x.r - p.r_f).squaredNorm());
  const double speed = (x.v - p.v_f).norm();
  out.psi1 = p.speed_sense == SpeedSense::MaxSpeed ? speed_bound - speed : speed - speed_bound;
  const Eigen::Vector3d d = x.r - p.beta * p.r_f;
  out.psi2 = p.e_hat_s.dot(d) - d.norm() * std::cos(p.theta_gs);
  const double thrust = u.norm();
  out.phi1 = p.thrust_max - thrust;
  out.phi2 = thrust - p.thrust_min;
  return out;
}

BaseCbfs base_cbfs(const SpacecraftState& x, const Eigen::Vector3d& u, const ConstraintParams& p) {
  const double vmin2 = p.v_min * p.v_min;
  double margin = vmin2 * (1.0 + (x.r - p.r_f).squaredNorm()) - (x.v - p.v_f).squaredNorm();
  if (p.speed_sense == SpeedSense::MinSpeed) margin = -margin;
  const Eigen::Vector3d d = x.r - p.beta * p.r_f;
  BaseCbfs out;
  out.h10 = p.k_vel * margin;
  out.h20 = p.k_gs * (p.e_hat_s.dot(d) - d.norm() * std::cos(p.theta_gs));
  out.h30 = p.k_u * (p.thrust_max * p.thrust_max - u.squaredNorm());
  out.h40 = p.k_u * (u.squaredNorm() - p.thrust_min * p.thrust_min);
  return out;
}

double softmin(std::span<const double> values, double rho) {
  if (values.empty()) throw std::domain_error("softmin of an empty list");
  if (!(rho > 0.0)) throw std::domain_error("softmin sharpness must be positive");
  // The minimal term contributes exactly 1; log1p keeps the remainder when it
  // is below machine epsilon.
  const auto lo_it = std::min_element(values.begin(), values.end());
  const double lo = *lo_it;
  double rest = 0.0;
  for (auto it = values.begin(); it != values.end(); ++it) {
    if (it != lo_it) rest += std::exp(-rho * (*it - lo));
  }
  return lo - std::log1p(rest) / rho;
}

SafetyFilter::SafetyFilter(ConstraintParams constraints, CbfParams cbf, BodyEnvironment env,
                           VehicleParams vehicle, double lag_rate)
    : p_(std::move(constraints)),
      c_(cbf),
      env_(std::move(env)),
      vehicle_(vehicle),
      lag_rate_(lag_rate) {
  p_.validate();
  c_.validate();
  if (!(lag_rate_ > 0.0)) throw std::invalid_argument("control lag rate must be positive");
}

namespace {

template <class T>
std::array<T, 10> to_array(const Vector10d& x) {
  std::array<T, 10> out;
  for (int i = 0; i < 10; ++i) out[static_cast<std::size_t>(i)] = T(x[i]);
  return out;
}

std::array<Dual<double>, 10> seeded(const Vector10d& x, int k) {
  std::array<Dual<double>, 10> out;
  for (int i = 0; i < 10; ++i) out[static_cast<std::size_t>(i)] = Dual<double>(x[i], i == k ? 1.0 : 0.0);
  return out;
}

}  // namespace

double SafetyFilter::hocbf_velocity(const AugmentedState& xh, const Eigen::Vector3d& w_hat) const {
  return h11_t(to_array<double>(xh.packed()), w_hat);
}

Glideslope SafetyFilter::hocbf_glideslope(const AugmentedState& xh,
                                          const Eigen::Vector3d& w_hat) const {
  const auto x = to_array<double>(xh.packed());
  return {h21_t(x), h22_t(x, w_hat)};
}

Vector10d SafetyFilter::augmented_drift(const AugmentedState& xh) const {
  const auto f = field_t(to_array<double>(xh.packed()), DisturbanceMode::Zero, Eigen::Vector3d::Zero());
  Vector10d out;
  for (int i = 0; i < 10; ++i) out[i] = f[static_cast<std::size_t>(i)];
  return out;
}

Eigen::Vector3d SafetyFilter::disturbance_for(DisturbanceMode mode, const Eigen::Vector3d& r,
                                              const Eigen::Vector3d& w_hat) const {
  switch (mode) {
    case DisturbanceMode::Zero:
      return Eigen::Vector3d::Zero();
    case DisturbanceMode::Estimate:
      return w_hat;
    case DisturbanceMode::Truth:
      return env_.gravity.disturbance(r);
  }
  return Eigen::Vector3d::Zero();
}

CompositeCbf SafetyFilter::composite(const AugmentedState& xh, const Eigen::Vector3d& w_hat) const {
  const Vector10d x = xh.packed();
  CompositeCbf out;
  std::array<Eigen::Matrix<double, 10, 1>, 4> grads;
  for (int k = 0; k < 10; ++k) {
    const auto xd = seeded(x, k);
    const std::array<Dual<double>, 4> comp = {h11_t(xd, w_hat), h22_t(xd, w_hat), h30_t(xd), h40_t(xd)};
    for (std::size_t i = 0; i < 4; ++i) {
      out.components[i] = comp[i].v;
      grads[i][k] = comp[i].d;
    }
  }
  out.h = softmin(out.components, c_.rho);
  const double lo = *std::min_element(out.components.begin(), out.components.end());
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    out.weights[i] = std::exp(-c_.rho * (out.components[i] - lo));
    total += out.weights[i];
  }
  Eigen::Matrix<double, 10, 1> grad = Eigen::Matrix<double, 10, 1>::Zero();
  for (std::size_t i = 0; i < 4; ++i) {
    out.weights[i] /= total;
    grad += out.weights[i] * grads[i];
  }
  out.dh_dx = grad.head<7>();
  out.dh_du = grad.tail<3>();
  return out;
}

double SafetyFilter::relaxed_constraint_b(const AugmentedState& xh, const CompositeCbf& cbf,
                                          const Eigen::Vector3d& w_hat,
                                          const Eigen::Vector3d& zeta, double kappa) const {
  const Vector10d f = augmented_drift(xh);
  const double lie = cbf.dh_dx.dot(f.head<7>()) + cbf.dh_du.dot(f.tail<3>());
  const Eigen::Vector3d w = disturbance_for(c_.filter_mode, xh.x.r, w_hat);
  return lie + lag_rate_ * cbf.dh_du.dot(zeta) + cbf.dh_dx.segment<3>(3).dot(w) +
         c_.alpha_gain * cbf.h + kappa * cbf.h;
}

double SafetyFilter::relaxed_constraint_b(const AugmentedState& xh, const Eigen::Vector3d& w_hat,
                                          const Eigen::Vector3d& zeta, double kappa) const {
  return relaxed_constraint_b(xh, composite(xh, w_hat), w_hat, zeta, kappa);
}

FilterDecision SafetyFilter::filter(const AugmentedState& xh, const Eigen::Vector3d& w_hat,
                                    const Eigen::Vector3d& zeta_d) const {
  FilterDecision out;
  out.cbf = composite(xh, w_hat);
  out.h = out.cbf.h;
  out.phi = relaxed_constraint_b(xh, out.cbf, w_hat, zeta_d, 0.0);
  if (out.phi >= 0.0) {
    out.zeta_star = zeta_d;
    return out;
  }
  const double denom =
      lag_rate_ * lag_rate_ * out.cbf.dh_du.squaredNorm() + out.h * out.h / c_.gamma;
  if (!(denom > 1e-12)) {
    throw FilterInfeasible("safety filter denominator vanished with phi < 0");
  }
  out.active = true;
  out.lambda = -out.phi / denom;
  out.zeta_star = zeta_d + out.lambda * lag_rate_ * out.cbf.dh_du;
  out.kappa_star = out.h * out.lambda / c_.gamma;
  return out;
}

double SafetyFilter::cost(const Eigen::Vector3d& zeta_d, const Eigen::Vector3d& zeta,
                          double kappa) const {
  return 0.5 * (zeta - zeta_d).squaredNorm() + 0.5 * c_.gamma * kappa * kappa;
}

}  // namespace scb
