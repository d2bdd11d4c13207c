#include "scb/gravity.hpp"

#include <cmath>
#include <numbers>

namespace scb {

double Ellipsoid::volume() const { return 4.0 / 3.0 * std::numbers::pi * a * b * c; }

double Ellipsoid::mass() const { return density * volume(); }

void Ellipsoid::validate() const {
  if (!(a >= b && b >= c && c > 0.0)) {
    throw std::invalid_argument("ellipsoid semi-axes must satisfy a >= b >= c > 0");
  }
  if (!(density > 0.0)) {
    throw std::invalid_argument("ellipsoid density must be positive");
  }
}

bool Ellipsoid::contains(const Eigen::Vector3d& r) const {
  Eigen::Vector3d p = orientation.transpose() * (r - center_offset);
  double s = (p.x() / a) * (p.x() / a) + (p.y() / b) * (p.y() / b) + (p.z() / c) * (p.z() / c);
  return s < 1.0;
}

HarmonicCoefficients ellipsoid_harmonics(const Ellipsoid& e, double reference_radius) {
  e.validate();
  if (!(reference_radius > 0.0)) {
    throw std::invalid_argument("reference radius must be positive");
  }
  const double r02 = reference_radius * reference_radius;
  HarmonicCoefficients out;
  out.mu = kGravitationalConstant * e.mass();
  out.c20 = (2.0 * e.c * e.c - e.a * e.a - e.b * e.b) / (10.0 * r02);
  out.c22 = (e.a * e.a - e.b * e.b) / (20.0 * r02);
  return out;
}

GravityModel::GravityModel(std::vector<GravityTerm> terms, double mass_scale)
    : terms_(std::move(terms)), mass_scale_(mass_scale) {
  if (terms_.empty()) {
    throw std::invalid_argument("gravity model needs at least one term");
  }
  if (!(mass_scale_ > 0.0)) {
    throw std::invalid_argument("mass_scale must be positive");
  }
  for (const auto& t : terms_) {
    std::visit(
        [](const auto& f) {
          if (!(f.mu > 0.0)) throw std::invalid_argument("gravity term mu must be positive");
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, HarmonicEllipsoid>) {
            if (!(f.reference_radius > 0.0)) {
              throw std::invalid_argument("reference radius must be positive");
            }
          }
        },
        t.field);
  }
}

GravityModel GravityModel::point_mass(double mu, const Eigen::Vector3d& offset) {
  return GravityModel({GravityTerm{PointMass{mu}, offset}});
}

namespace {

GravityTerm harmonic_term(const Ellipsoid& e, double reference_radius) {
  HarmonicCoefficients hc = ellipsoid_harmonics(e, reference_radius);
  HarmonicEllipsoid h;
  h.mu = hc.mu;
  h.reference_radius = reference_radius;
  h.c20 = hc.c20;
  h.c22 = hc.c22;
  h.orientation = e.orientation;
  h.brillouin_radius = e.a;
  return GravityTerm{h, e.center_offset};
}

}  // namespace

GravityModel GravityModel::harmonic(const Ellipsoid& e, double reference_radius) {
  return GravityModel({harmonic_term(e, reference_radius)});
}

GravityModel GravityModel::harmonic(const std::vector<Ellipsoid>& bodies) {
  std::vector<GravityTerm> terms;
  terms.reserve(bodies.size());
  for (const auto& e : bodies) terms.push_back(harmonic_term(e, e.a));
  return GravityModel(std::move(terms));
}

GravityModel::Kind GravityModel::kind() const {
  if (terms_.size() > 1) return Kind::Composite;
  return std::holds_alternative<PointMass>(terms_.front().field) ? Kind::PointMass
                                                                   : Kind::HarmonicEllipsoid;
}

double GravityModel::total_mu() const {
  double mu = 0.0;
  for (const auto& t : terms_) {
    mu += std::visit([](const auto& f) { return f.mu; }, t.field);
  }
  return mass_scale_ * mu;
}

GravityModel GravityModel::scaled(double scale) const {
  GravityModel out = *this;
  out.mass_scale_ *= scale;
  return out;
}

double GravityModel::potential(const Eigen::Vector3d& r) const {
  double total = 0.0;
  for (const auto& term : terms_) {
    Eigen::Vector3d body_p = r - term.offset;
    total += std::visit(
        [&](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, PointMass>) {
            double rn = body_p.norm();
            detail::check_radius(rn * rn);
            return f.mu / rn;
          } else {
            Eigen::Vector3d p = f.orientation.transpose() * body_p;
            double r2 = p.squaredNorm();
            detail::check_radius(r2);
            double rn = std::sqrt(r2);
            Eigen::Vector3d q = detail::quadrupole_diagonal(f);
            double pqp = q.x() * p.x() * p.x() + q.y() * p.y() * p.y() + q.z() * p.z() * p.z();
            double r5 = r2 * r2 * rn;
            return f.mu / rn + f.mu * f.reference_radius * f.reference_radius * pqp / r5;
          }
        },
        term.field);
  }
  return mass_scale_ * total;
}

Eigen::Vector3d GravityModel::gradient(const Eigen::Vector3d& r) const {
  V3<double> g = gradient_t(lift<double>(r));
  return {g[0], g[1], g[2]};
}

Eigen::Matrix3d GravityModel::hessian(const Eigen::Vector3d& r) const {
  using D = Dual<double>;
  Eigen::Matrix3d out;
  for (int j = 0; j < 3; ++j) {
    V3<D> p;
    for (int i = 0; i < 3; ++i) p[i] = D(r[i], i == j ? 1.0 : 0.0);
    V3<D> g = gradient_t(p);
    for (int i = 0; i < 3; ++i) out(i, j) = g[i].d;
  }
  return out;
}

bool GravityModel::inside_brillouin(const Eigen::Vector3d& r) const {
  for (const auto& t : terms_) {
    if (const auto* h = std::get_if<HarmonicEllipsoid>(&t.field)) {
      if ((r - t.offset).norm() < h->brillouin_radius) return true;
    }
  }
  return false;
}

Eigen::Vector3d DisturbanceField::disturbance(const Eigen::Vector3d& r) const {
  return truth.gradient(r) - nominal.gradient(r);
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    nodes[lo] = -x;
    nodes[hi] = x;
    weights[lo] = weights[hi] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

double quadrature_oracle(const Ellipsoid& e, const Eigen::Vector3d& r, int resolution) {
  e.validate();
  if (resolution < 2) throw std::invalid_argument("quadrature resolution must be >= 2");
  if (e.contains(r)) throw GravityDomainError("quadrature oracle evaluated inside the ellipsoid");

  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(resolution, x, w);
  const Eigen::Vector3d p = e.orientation.transpose() * (r - e.center_offset);
  const double dphi = 2.0 * std::numbers::pi / resolution;

  double sum = 0.0;
  for (int ir = 0; ir < resolution; ++ir) {
    const double rho = 0.5 * (x[static_cast<std::size_t>(ir)] + 1.0);
    const double wr = 0.5 * w[static_cast<std::size_t>(ir)] * rho * rho;
    for (int it = 0; it < resolution; ++it) {
      const double mu = x[static_cast<std::size_t>(it)];
      const double st = std::sqrt(1.0 - mu * mu);
      const double wt = wr * w[static_cast<std::size_t>(it)];
      for (int ip = 0; ip < resolution; ++ip) {
        const double phi = (ip + 0.5) * dphi;
        Eigen::Vector3d s(e.a * rho * st * std::cos(phi), e.b * rho * st * std::sin(phi),
                          e.c * rho * mu);
        sum += wt / (p - s).norm();
      }
    }
  }
  return kGravitationalConstant * e.density * e.a * e.b * e.c * dphi * sum;
}

}  // namespace scb
