#pragma once

// Multi-directional forward-mode dual number. An empty derivative vector stands
// for the zero vector, so constants carry no allocation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace seqwarp {

class Dual {
 public:
  Dual() = default;
  Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
  Dual(double v, std::vector<double> d) : val(v), der(std::move(d)) {}

  static Dual variable(double v, std::size_t index, std::size_t n) {
    std::vector<double> d(n, 0.0);
    d[index] = 1.0;
    return {v, std::move(d)};
  }

  double d(std::size_t i) const { return i < der.size() ? der[i] : 0.0; }

  double val = 0.0;
  std::vector<double> der;
};

inline double value_of(const Dual& x) { return x.val; }
inline bool is_zero(const Dual& x) {
  return x.val == 0.0 && std::all_of(x.der.begin(), x.der.end(), [](double v) { return v == 0.0; });
}

namespace detail {

// a * da + b * db, treating empty as zero.
inline std::vector<double> combine(double a, const std::vector<double>& da, double b,
                                   const std::vector<double>& db) {
  const std::size_t n = std::max(da.size(), db.size());
  if (n == 0) return {};
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < da.size(); ++i) out[i] += a * da[i];
  for (std::size_t i = 0; i < db.size(); ++i) out[i] += b * db[i];
  return out;
}

inline std::vector<double> scaled(double a, const std::vector<double>& d) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = a * d[i];
  return out;
}

// Chain rule for a unary function with value fx and derivative dfx at x.
inline Dual chain(const Dual& x, double fx, double dfx) { return {fx, scaled(dfx, x.der)}; }

}  // namespace detail

inline Dual operator-(const Dual& a) { return {-a.val, detail::scaled(-1.0, a.der)}; }
inline Dual operator+(const Dual& a, const Dual& b) {
  return {a.val + b.val, detail::combine(1.0, a.der, 1.0, b.der)};
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return {a.val - b.val, detail::combine(1.0, a.der, -1.0, b.der)};
}
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.val * b.val, detail::combine(b.val, a.der, a.val, b.der)};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double q = a.val / b.val;
  return {q, detail::combine(1.0 / b.val, a.der, -q / b.val, b.der)};
}
inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }

inline Dual sin(const Dual& x) { return detail::chain(x, std::sin(x.val), std::cos(x.val)); }
inline Dual cos(const Dual& x) { return detail::chain(x, std::cos(x.val), -std::sin(x.val)); }
inline Dual tan(const Dual& x) {
  const double t = std::tan(x.val);
  return detail::chain(x, t, 1.0 + t * t);
}
inline Dual sinh(const Dual& x) { return detail::chain(x, std::sinh(x.val), std::cosh(x.val)); }
inline Dual cosh(const Dual& x) { return detail::chain(x, std::cosh(x.val), std::sinh(x.val)); }
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.val);
  return detail::chain(x, t, 1.0 - t * t);
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.val);
  return detail::chain(x, e, e);
}
inline Dual log(const Dual& x) { return detail::chain(x, std::log(x.val), 1.0 / x.val); }
inline Dual sqrt(const Dual& x) {
  const double s = std::sqrt(x.val);
  return detail::chain(x, s, 0.5 / s);
}
inline Dual pow(const Dual& x, double c) {
  return detail::chain(x, std::pow(x.val, c), c * std::pow(x.val, c - 1.0));
}

}  // namespace seqwarp
