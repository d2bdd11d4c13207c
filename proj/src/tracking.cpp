#include "scb/tracking.hpp"

#include <stdexcept>

namespace scb {

void TrackingGains::validate() const {
  if (!(kp > 0.0 && kv > 0.0 && sigma > 0.0 && lag_rate > 0.0)) {
    throw std::invalid_argument("tracking gains must be strictly positive");
  }
}

namespace {

// Bracketed term of u_d, so that u_d = m * q.
Eigen::Vector3d tracking_term(const SpacecraftState& x, const ReferenceSample& ref,
                              const Eigen::Vector3d& estimate, const BodyEnvironment& env,
                              const TrackingGains& g) {
  return -drift_acceleration(x.r, x.v, env) - estimate + drift_acceleration(ref.r, ref.v, env) +
         ref.u / ref.m - g.kv * (x.v - ref.v) - g.kp * (x.r - ref.r);
}

// d/dt of the velocity-block drift along (r', v').
Eigen::Vector3d drift_acceleration_rate(const Eigen::Vector3d& r, const Eigen::Vector3d& v,
                                        const Eigen::Vector3d& a, const BodyEnvironment& env) {
  const Eigen::Vector3d& w = env.omega;
  return env.nominal().hessian(r) * v - 2.0 * w.cross(a) - w.cross(w.cross(v));
}

}  // namespace

Eigen::Vector3d u_desired(const SpacecraftState& x, const ReferenceSample& ref,
                          const ObserverState& obs, const BodyEnvironment& env,
                          const TrackingGains& gains) {
  if (!(x.m > 0.0 && ref.m > 0.0)) throw std::invalid_argument("u_desired needs positive masses");
  return x.m * tracking_term(x, ref, w_hat(x.v, obs), env, gains);
}

DesiredRate u_desired_dot(const SpacecraftState& x, const Eigen::Vector3d& u,
                          const ReferenceSample& ref, const ObserverState& obs,
                          const BodyEnvironment& env, const TrackingGains& gains,
                          const VehicleParams& vehicle) {
  if (!(x.m > 0.0 && ref.m > 0.0)) throw std::invalid_argument("u_desired needs positive masses");
  const double alpha = vehicle.alpha();
  const Eigen::Vector3d estimate = w_hat(x.v, obs);

  // Plant rates with the estimate standing in for the true disturbance.
  const Eigen::Vector3d f2 = drift_acceleration(x.r, x.v, env);
  const Eigen::Vector3d v_dot = f2 + u / x.m + estimate;
  const double u_norm = u.norm();
  const double m_dot = -alpha * u_norm;
  const Eigen::Vector3d nu_dot = obs.tau * (f2 + u / x.m + estimate);
  const Eigen::Vector3d estimate_dot = obs.tau * v_dot - nu_dot;

  // Reference rates from the nominal dynamics.
  const Eigen::Vector3d f2_ref = drift_acceleration(ref.r, ref.v, env);
  const Eigen::Vector3d v_ref_dot = f2_ref + ref.u / ref.m;
  const double m_ref_dot = -alpha * ref.u.norm();
  const Eigen::Vector3d thrust_accel_ref_dot =
      ref.u_dot / ref.m - ref.u * m_ref_dot / (ref.m * ref.m);

  const Eigen::Vector3d q_dot = -drift_acceleration_rate(x.r, x.v, v_dot, env) - estimate_dot +
                                drift_acceleration_rate(ref.r, ref.v, v_ref_dot, env) +
                                thrust_accel_ref_dot - gains.kv * (v_dot - v_ref_dot) -
                                gains.kp * (x.v - ref.v);
  const Eigen::Vector3d q = tracking_term(x, ref, estimate, env, gains);

  DesiredRate out;
  out.value = m_dot * q + x.m * q_dot;
  out.thrust_kink = u_norm < 1e-9;
  return out;
}

DesiredControl zeta_desired(const SpacecraftState& x, const Eigen::Vector3d& u,
                            const ReferenceSample& ref, const ObserverState& obs,
                            const BodyEnvironment& env, const TrackingGains& gains,
                            const VehicleParams& vehicle) {
  DesiredControl out;
  out.u_d = u_desired(x, ref, obs, env, gains);
  DesiredRate rate = u_desired_dot(x, u, ref, obs, env, gains, vehicle);
  out.u_d_dot = rate.value;
  out.thrust_kink = rate.thrust_kink;
  const double a = gains.lag_rate;
  out.zeta_d = (a * u + out.u_d_dot - gains.sigma * (u - out.u_d)) / a;
  return out;
}

}  // namespace scb
