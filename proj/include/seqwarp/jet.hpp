#pragma once

// Second-order forward-mode jets over an Expr. The scalar type S is double for
// ordinary evaluation or Dual when a further directional derivative is needed
// (that nesting is how third derivatives of metric entries are obtained).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqwarp/dual.hpp"
#include "seqwarp/expr.hpp"
#include "seqwarp/tensor.hpp"

namespace seqwarp {

// Value, gradient and (for order 2) the Hessian of a scalar in n variables.
// The Hessian is stored as its upper triangle, so it is symmetric by construction.
template <class S>
class Jet {
 public:
  Jet() = default;
  Jet(std::size_t n, int order) : n_(n), order_(order), grad_(n, S(0)) {
    if (order >= 2) hess_.assign(n * (n + 1) / 2, S(0));
  }

  static Jet constant(const S& v, std::size_t n, int order) {
    Jet j(n, order);
    j.value_ = v;
    return j;
  }
  static Jet variable(const S& v, std::size_t index, std::size_t n, int order) {
    Jet j(n, order);
    j.value_ = v;
    j.grad_[index] = S(1);
    return j;
  }

  std::size_t size() const { return n_; }
  int order() const { return order_; }

  const S& value() const { return value_; }
  S& value() { return value_; }
  const std::vector<S>& gradient() const { return grad_; }
  std::vector<S>& gradient() { return grad_; }
  const S& hessian(std::size_t i, std::size_t j) const { return hess_[slot(i, j)]; }
  S& hessian(std::size_t i, std::size_t j) { return hess_[slot(i, j)]; }

  Matrix<S> hessian_matrix() const {
    Matrix<S> h(n_, n_);
    if (order_ < 2) return h;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) h(i, j) = hessian(i, j);
    return h;
  }

 private:
  std::size_t slot(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t n_ = 0;
  int order_ = 1;
  S value_ = S(0);
  std::vector<S> grad_;
  std::vector<S> hess_;
};

namespace detail {

template <class S>
Jet<S> jet_add(const Jet<S>& a, const Jet<S>& b, double sign) {
  Jet<S> r(a.size(), a.order());
  r.value() = sign > 0 ? a.value() + b.value() : a.value() - b.value();
  for (std::size_t i = 0; i < a.size(); ++i)
    r.gradient()[i] = sign > 0 ? a.gradient()[i] + b.gradient()[i] : a.gradient()[i] - b.gradient()[i];
  if (a.order() >= 2)
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i; j < a.size(); ++j)
        r.hessian(i, j) = sign > 0 ? a.hessian(i, j) + b.hessian(i, j) : a.hessian(i, j) - b.hessian(i, j);
  return r;
}

template <class S>
Jet<S> jet_neg(const Jet<S>& a) {
  Jet<S> r(a.size(), a.order());
  r.value() = -a.value();
  for (std::size_t i = 0; i < a.size(); ++i) r.gradient()[i] = -a.gradient()[i];
  if (a.order() >= 2)
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i; j < a.size(); ++j) r.hessian(i, j) = -a.hessian(i, j);
  return r;
}

template <class S>
Jet<S> jet_mul(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r(a.size(), a.order());
  r.value() = a.value() * b.value();
  for (std::size_t i = 0; i < a.size(); ++i)
    r.gradient()[i] = a.gradient()[i] * b.value() + a.value() * b.gradient()[i];
  if (a.order() >= 2)
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i; j < a.size(); ++j)
        r.hessian(i, j) = a.hessian(i, j) * b.value() + a.value() * b.hessian(i, j) +
                          a.gradient()[i] * b.gradient()[j] + a.gradient()[j] * b.gradient()[i];
  return r;
}

// g(a) given g, g', g'' evaluated at a.value().
template <class S>
Jet<S> jet_compose(const Jet<S>& a, const S& g0, const S& g1, const S& g2) {
  Jet<S> r(a.size(), a.order());
  r.value() = g0;
  for (std::size_t i = 0; i < a.size(); ++i) r.gradient()[i] = g1 * a.gradient()[i];
  if (a.order() >= 2)
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i; j < a.size(); ++j)
        r.hessian(i, j) = g1 * a.hessian(i, j) + g2 * a.gradient()[i] * a.gradient()[j];
  return r;
}

template <class S>
Jet<S> jet_reciprocal(const Jet<S>& a) {
  const S inv = S(1) / a.value();
  return jet_compose(a, inv, -(inv * inv), S(2) * inv * inv * inv);
}

template <class S>
Jet<S> jet_pow_const(const Jet<S>& a, double c) {
  using std::pow;
  const S x = a.value();
  return jet_compose(a, pow(x, c), S(c) * pow(x, c - 1.0), S(c * (c - 1.0)) * pow(x, c - 2.0));
}

template <class S>
class JetEvaluator {
 public:
  JetEvaluator(const std::vector<std::string>& coords, std::span<const S> values, int order,
               const EvalPoint* params)
      : coords_(coords), values_(values), order_(order), params_(params) {}

  Jet<S> eval(const Expr& e) const {
    using std::cos;
    using std::cosh;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sinh;
    using std::sqrt;
    using std::tan;
    using std::tanh;
    const std::size_t n = coords_.size();
    switch (e.op()) {
      case Op::constant:
        return Jet<S>::constant(S(e.value()), n, order_);
      case Op::variable: {
        for (std::size_t i = 0; i < n; ++i)
          if (coords_[i] == e.name()) return Jet<S>::variable(values_[i], i, n, order_);
        if (params_) {
          const auto it = params_->find(e.name());
          if (it != params_->end()) return Jet<S>::constant(S(it->second), n, order_);
        }
        throw std::out_of_range("evaluation point does not bind '" + e.name() + "'");
      }
      case Op::negate:
        return jet_neg(eval(e.lhs()));
      case Op::add:
        return jet_add(eval(e.lhs()), eval(e.rhs()), 1.0);
      case Op::sub:
        return jet_add(eval(e.lhs()), eval(e.rhs()), -1.0);
      case Op::mul:
        return jet_mul(eval(e.lhs()), eval(e.rhs()));
      case Op::div: {
        const Jet<S> den = eval(e.rhs());
        if (value_of(den.value()) == 0.0) throw DomainError("division by zero", e.to_string());
        return jet_mul(eval(e.lhs()), jet_reciprocal(den));
      }
      case Op::pow:
        return eval_pow(e);
      case Op::call: {
        const Jet<S> a = eval(e.lhs());
        const S& x = a.value();
        switch (e.fn()) {
          case Fn::sin: {
            const S s = sin(x);
            return jet_compose(a, s, cos(x), -s);
          }
          case Fn::cos: {
            const S c = cos(x);
            return jet_compose(a, c, -sin(x), -c);
          }
          case Fn::tan: {
            const S t = tan(x);
            const S sec2 = S(1) + t * t;
            return jet_compose(a, t, sec2, S(2) * t * sec2);
          }
          case Fn::sinh: {
            const S s = sinh(x);
            return jet_compose(a, s, cosh(x), s);
          }
          case Fn::cosh: {
            const S c = cosh(x);
            return jet_compose(a, c, sinh(x), c);
          }
          case Fn::tanh: {
            const S t = tanh(x);
            const S sech2 = S(1) - t * t;
            return jet_compose(a, t, sech2, S(-2) * t * sech2);
          }
          case Fn::exp: {
            const S v = exp(x);
            return jet_compose(a, v, v, v);
          }
          case Fn::log: {
            if (value_of(x) <= 0.0) throw DomainError("log of a non-positive value", e.to_string());
            const S inv = S(1) / x;
            return jet_compose(a, log(x), inv, -(inv * inv));
          }
          case Fn::sqrt: {
            if (value_of(x) <= 0.0) throw DomainError("sqrt of a non-positive value", e.to_string());
            const S s = sqrt(x);
            const S d1 = S(0.5) / s;
            return jet_compose(a, s, d1, -(d1 / (S(2) * x)));
          }
        }
      }
    }
    throw std::logic_error("unhandled expression node");
  }

 private:
  Jet<S> eval_pow(const Expr& e) const {
    const Jet<S> base = eval(e.lhs());
    const double b = value_of(base.value());
    if (const auto c = constant_exponent(e)) {
      if (is_small_integer(*c)) {
        const int n = static_cast<int>(std::abs(*c));
        if (n == 0) return Jet<S>::constant(S(1), coords_.size(), order_);
        Jet<S> acc = base;
        for (int i = 1; i < n; ++i) acc = jet_mul(acc, base);
        if (*c < 0) {
          if (value_of(acc.value()) == 0.0) throw DomainError("division by zero", e.to_string());
          acc = jet_reciprocal(acc);
        }
        return acc;
      }
      if (*c != std::round(*c) && b <= 0.0)
        throw DomainError("non-integer power of a non-positive base", e.to_string());
      if (b == 0.0) throw DomainError("power of zero is not differentiable", e.to_string());
      return jet_pow_const(base, *c);
    }
    if (b <= 0.0) throw DomainError("variable power of a non-positive base", e.to_string());
    using std::exp;
    using std::log;
    const Jet<S> lg = jet_compose(base, log(base.value()), S(1) / base.value(),
                                  -(S(1) / (base.value() * base.value())));
    const Jet<S> prod = jet_mul(eval(e.rhs()), lg);
    const S v = exp(prod.value());
    return jet_compose(prod, v, v, v);
  }

  const std::vector<std::string>& coords_;
  std::span<const S> values_;
  int order_;
  const EvalPoint* params_;
};

}  // namespace detail

// Value and partial derivatives (up to `order`, 1 or 2) of e with respect to
// `coords`, at the point whose coordinates are `values`. Variables outside
// `coords` are read from `params` and held constant.
template <class S>
Jet<S> eval_jet(const Expr& e, const std::vector<std::string>& coords, std::span<const S> values, int order,
                const EvalPoint* params = nullptr) {
  if (order != 1 && order != 2) throw std::invalid_argument("jet order must be 1 or 2");
  if (values.size() != coords.size()) throw std::invalid_argument("point dimension mismatch");
  return detail::JetEvaluator<S>(coords, values, order, params).eval(e);
}

inline Jet<double> eval_jet(const Expr& e, const std::vector<std::string>& coords,
                            const std::vector<double>& values, int order) {
  return eval_jet<double>(e, coords, std::span<const double>(values), order);
}

// EvalPoint flavour: derivatives are taken in the map's key order.
inline Jet<double> eval_jet(const Expr& e, const EvalPoint& p, int order) {
  std::vector<std::string> coords;
  std::vector<double> values;
  for (const auto& [k, v] : p) {
    coords.push_back(k);
    values.push_back(v);
  }
  return eval_jet(e, coords, values, order);
}

}  // namespace seqwarp
