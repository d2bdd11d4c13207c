#pragma once

#include <Eigen/Dense>

#include "scb/dynamics.hpp"

namespace scb {

/// Extended high-gain observer for the matched gravity-model error.
/// The estimate is w_hat = tau v - nu.
struct ObserverState {
  Eigen::Vector3d nu = Eigen::Vector3d::Zero();
  double tau = 1.0;
};

ObserverState init_observer(double tau, const Eigen::Vector3d& v0);

Eigen::Vector3d w_hat(const Eigen::Vector3d& v, const ObserverState& obs);

/// nu' = tau (f_2(x) + u/m + w_hat).
Eigen::Vector3d nu_derivative(const SpacecraftState& x, const Eigen::Vector3d& u,
                              const ObserverState& obs, const BodyEnvironment& env);

}  // namespace scb
