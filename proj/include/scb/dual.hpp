#pragma once

#include <array>
#include <cmath>
#include <type_traits>

namespace scb {

// Forward-mode dual number. Nesting (Dual<Dual<double>>) yields higher
// directional derivatives; the Lie-derivative chains in the safety module
// rely on that.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double c) : v(c), d(0.0) {}  // NOLINT: implicit constants
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T inv = T(1.0) / b.v;
  T q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double c) {
  return {a.v + c, a.d};
}
template <class T>
Dual<T> operator+(double c, const Dual<T>& a) {
  return {c + a.v, a.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double c) {
  return {a.v - c, a.d};
}
template <class T>
Dual<T> operator-(double c, const Dual<T>& a) {
  return {c - a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double c) {
  return {a.v * c, a.d * c};
}
template <class T>
Dual<T> operator*(double c, const Dual<T>& a) {
  return {c * a.v, c * a.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double c) {
  return {a.v / c, a.d / c};
}
template <class T>
Dual<T> operator/(double c, const Dual<T>& a) {
  return Dual<T>(c) / a;
}

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  a = a + b;
  return a;
}
template <class T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) {
  a = a - b;
  return a;
}
template <class T>
Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) {
  a = a * b;
  return a;
}

using std::exp;
using std::log;
using std::sqrt;

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, e * a.d};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}

// Seeds a variable with unit derivative.
template <class T>
Dual<T> seed(const T& value, const T& direction) {
  return {value, direction};
}

// Small fixed-size vector used by the templated evaluation paths. Eigen is
// used at the public API boundary; this keeps the AD code free of NumTraits
// specializations.
template <class T>
struct V3 {
  std::array<T, 3> c{};

  T& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  const T& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

template <class T>
V3<T> operator+(const V3<T>& a, const V3<T>& b) {
  return {{a[0] + b[0], a[1] + b[1], a[2] + b[2]}};
}
template <class T>
V3<T> operator-(const V3<T>& a, const V3<T>& b) {
  return {{a[0] - b[0], a[1] - b[1], a[2] - b[2]}};
}
template <class T, class S>
V3<T> operator*(const S& s, const V3<T>& a) {
  return {{s * a[0], s * a[1], s * a[2]}};
}
template <class T>
T dot(const V3<T>& a, const V3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
template <class T>
T squared_norm(const V3<T>& a) {
  return dot(a, a);
}
template <class T>
T norm(const V3<T>& a) {
  return sqrt(dot(a, a));
}
template <class T>
V3<T> cross(const V3<T>& a, const V3<T>& b) {
  return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}
// Lifts a constant double vector into scalar type T.
template <class T, class Vec>
V3<T> lift(const Vec& v) {
  return {{T(v[0]), T(v[1]), T(v[2])}};
}

}  // namespace scb
