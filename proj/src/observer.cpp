#include "scb/observer.hpp"

#include <stdexcept>

namespace scb {

ObserverState init_observer(double tau, const Eigen::Vector3d& v0) {
  if (!(tau > 0.0)) throw std::invalid_argument("observer gain must be positive");
  return {tau * v0, tau};
}

Eigen::Vector3d w_hat(const Eigen::Vector3d& v, const ObserverState& obs) {
  return obs.tau * v - obs.nu;
}

Eigen::Vector3d nu_derivative(const SpacecraftState& x, const Eigen::Vector3d& u,
                              const ObserverState& obs, const BodyEnvironment& env) {
  if (!(x.m > 0.0)) throw std::invalid_argument("observer needs positive mass");
  return obs.tau * (drift_acceleration(x.r, x.v, env) + u / x.m + w_hat(x.v, obs));
}

}  // namespace scb
