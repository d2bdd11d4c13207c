#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <variant>
#include <vector>

#include "scb/dual.hpp"

namespace scb {

inline constexpr double kGravitationalConstant = 6.674e-11;  // m^3/(kg s^2)

class GravityDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Homogeneous triaxial ellipsoid. Semi-axis a lies along the first
/// principal axis; `orientation` maps principal coordinates to body
/// coordinates.
struct Ellipsoid {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double density = 1.0;
  Eigen::Vector3d center_offset = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  double volume() const;
  double mass() const;
  void validate() const;
  bool contains(const Eigen::Vector3d& r) const;
};

struct PointMass {
  double mu = 0.0;
};

/// Degree-2 spherical-harmonic field in the principal frame given by
/// `orientation` (principal -> body).
struct HarmonicEllipsoid {
  double mu = 0.0;
  double reference_radius = 1.0;
  double c20 = 0.0;
  double c22 = 0.0;
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
  // Radius of the circumscribing sphere of the generating body; 0 disables
  // the interior warning.
  double brillouin_radius = 0.0;
};

struct GravityTerm {
  std::variant<PointMass, HarmonicEllipsoid> field;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};

struct HarmonicCoefficients {
  double mu = 0.0;
  double c20 = 0.0;
  double c22 = 0.0;
};

/// Unnormalized degree-2 coefficients of a homogeneous ellipsoid.
HarmonicCoefficients ellipsoid_harmonics(const Ellipsoid& e, double reference_radius);

/// Potential and gradient of a sum of point-mass and degree-2 terms. A single
/// term is the PointMass or HarmonicEllipsoid variant; more than one is a
/// composite body.
class GravityModel {
 public:
  enum class Kind { PointMass, HarmonicEllipsoid, Composite };

  GravityModel() = default;
  explicit GravityModel(std::vector<GravityTerm> terms, double mass_scale = 1.0);

  static GravityModel point_mass(double mu, const Eigen::Vector3d& offset = Eigen::Vector3d::Zero());
  static GravityModel harmonic(const Ellipsoid& e, double reference_radius);
  static GravityModel harmonic(const std::vector<Ellipsoid>& bodies);

  Kind kind() const;
  const std::vector<GravityTerm>& terms() const { return terms_; }
  double mass_scale() const { return mass_scale_; }
  double total_mu() const;

  /// Returns a copy whose mu is multiplied by `scale`.
  GravityModel scaled(double scale) const;

  /// Specific potential (m^2/s^2), positive convention: mu/|r| for a point mass.
  double potential(const Eigen::Vector3d& r) const;
  /// Acceleration U'(r)^T (m/s^2).
  Eigen::Vector3d gradient(const Eigen::Vector3d& r) const;
  /// Jacobian of `gradient` (the potential Hessian).
  Eigen::Matrix3d hessian(const Eigen::Vector3d& r) const;

  /// True when r lies inside some term's circumscribing sphere.
  bool inside_brillouin(const Eigen::Vector3d& r) const;

  template <class T>
  V3<T> gradient_t(const V3<T>& r) const;

 private:
  std::vector<GravityTerm> terms_;
  double mass_scale_ = 1.0;
};

/// Truth and nominal models; evaluates the model-error acceleration w(r).
struct DisturbanceField {
  GravityModel truth;
  GravityModel nominal;

  Eigen::Vector3d disturbance(const Eigen::Vector3d& r) const;

  template <class T>
  V3<T> disturbance_t(const V3<T>& r) const {
    return truth.gradient_t(r) - nominal.gradient_t(r);
  }
};

/// Newtonian volume integral G*rho/|r - s| over the ellipsoid using a
/// Gauss-Legendre rule in radius and polar cosine and a uniform rule in
/// azimuth, `resolution` nodes along each coordinate.
double quadrature_oracle(const Ellipsoid& e, const Eigen::Vector3d& r, int resolution);

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
V3<T> rotate(const Eigen::Matrix3d& m, const V3<T>& p) {
  V3<T> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = m(i, 0) * p[0] + m(i, 1) * p[1] + m(i, 2) * p[2];
  }
  return out;
}

template <class T>
V3<T> rotate_transpose(const Eigen::Matrix3d& m, const V3<T>& p) {
  V3<T> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = m(0, i) * p[0] + m(1, i) * p[1] + m(2, i) * p[2];
  }
  return out;
}

template <class T>
void check_radius(const T& r2) {
  if (!(primal(r2) > 0.0)) {
    throw GravityDomainError("gravity evaluated at zero radius");
  }
}

// Degree-2 term written as mu r0^2 p^T Q p / |p|^5 with trace(Q) = 0.
inline Eigen::Vector3d quadrupole_diagonal(const HarmonicEllipsoid& h) {
  return {-0.5 * h.c20 + 3.0 * h.c22, -0.5 * h.c20 - 3.0 * h.c22, h.c20};
}

template <class T>
V3<T> point_mass_gradient(double mu, const V3<T>& p) {
  T r2 = squared_norm(p);
  check_radius(r2);
  T r = sqrt(r2);
  T inv3 = 1.0 / (r2 * r);
  return (-mu * inv3) * p;
}

template <class T>
V3<T> harmonic_gradient(const HarmonicEllipsoid& h, const V3<T>& body_p) {
  V3<T> p = rotate_transpose(h.orientation, body_p);
  T r2 = squared_norm(p);
  check_radius(r2);
  T r = sqrt(r2);
  T inv_r = 1.0 / r;
  T inv_r2 = inv_r * inv_r;
  T inv_r3 = inv_r2 * inv_r;
  T inv_r5 = inv_r3 * inv_r2;
  T inv_r7 = inv_r5 * inv_r2;
  Eigen::Vector3d q = quadrupole_diagonal(h);
  V3<T> qp{{q[0] * p[0], q[1] * p[1], q[2] * p[2]}};
  T pqp = dot(p, qp);
  double k = h.mu * h.reference_radius * h.reference_radius;
  V3<T> g;
  for (int i = 0; i < 3; ++i) {
    g[i] = -h.mu * p[i] * inv_r3 + k * (2.0 * qp[i] * inv_r5 - 5.0 * pqp * p[i] * inv_r7);
  }
  return rotate(h.orientation, g);
}

}  // namespace detail

template <class T>
V3<T> GravityModel::gradient_t(const V3<T>& r) const {
  V3<T> total{{T(0.0), T(0.0), T(0.0)}};
  for (const auto& term : terms_) {
    V3<T> p = r - lift<T>(term.offset);
    V3<T> g = std::visit(
        [&](const auto& f) -> V3<T> {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, PointMass>) {
            return detail::point_mass_gradient(f.mu, p);
          } else {
            return detail::harmonic_gradient(f, p);
          }
        },
        term.field);
    total = total + g;
  }
  return mass_scale_ * total;
}

}  // namespace scb
