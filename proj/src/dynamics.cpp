#include "scb/dynamics.hpp"

namespace scb {

void VehicleParams::validate() const {
  if (!(dry_mass > 0.0 && dry_mass < wet_mass)) {
    throw std::invalid_argument("vehicle masses must satisfy 0 < m_d < m_w");
  }
  if (!(thrust_min >= 0.0 && thrust_min < thrust_max)) {
    throw std::invalid_argument("thrust bounds must satisfy 0 <= T_min < T_max");
  }
  if (!(isp > 0.0)) throw std::invalid_argument("specific impulse must be positive");
}

Vector7d SpacecraftState::packed() const {
  Vector7d x;
  x << r, v, m;
  return x;
}

SpacecraftState SpacecraftState::unpack(const Eigen::Ref<const Vector7d>& x) {
  return {x.segment<3>(0), x.segment<3>(3), x[6]};
}

Vector10d AugmentedState::packed() const {
  Vector10d xh;
  xh << x.packed(), u;
  return xh;
}

AugmentedState AugmentedState::unpack(const Eigen::Ref<const Vector10d>& xh) {
  return {SpacecraftState::unpack(xh.head<7>()), xh.tail<3>()};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& omega) {
  Eigen::Matrix3d s;
  s << 0.0, -omega.z(), omega.y(),  //
      omega.z(), 0.0, -omega.x(),   //
      -omega.y(), omega.x(), 0.0;
  return s;
}

Eigen::Vector3d drift_acceleration(const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                                   const BodyEnvironment& env) {
  const Eigen::Vector3d& w = env.omega;
  return env.nominal().gradient(r) - 2.0 * w.cross(v) - w.cross(w.cross(r));
}

Vector7d drift(const SpacecraftState& x, const BodyEnvironment& env) {
  Vector7d f;
  f << x.v, drift_acceleration(x.r, x.v, env), 0.0;
  return f;
}

Vector7d state_derivative(const SpacecraftState& x, const Eigen::Vector3d& u,
                          const BodyEnvironment& env, const Eigen::Vector3d& w,
                          const VehicleParams& vehicle) {
  if (x.m < vehicle.dry_mass) {
    throw PropellantExhausted("spacecraft mass fell below dry mass");
  }
  Vector7d xd = drift(x, env);
  xd.segment<3>(3) += u / x.m + w;
  xd[6] = -vehicle.alpha() * u.norm();
  return xd;
}

Vector10d augmented_derivative(const AugmentedState& xh, const Eigen::Vector3d& zeta,
                               const BodyEnvironment& env, const Eigen::Vector3d& w,
                               const VehicleParams& vehicle, double lag_rate) {
  if (!(lag_rate > 0.0)) throw std::invalid_argument("control lag rate must be positive");
  Vector10d out;
  out << state_derivative(xh.x, xh.u, env, w, vehicle), lag_rate * (zeta - xh.u);
  return out;
}

}  // namespace scb
