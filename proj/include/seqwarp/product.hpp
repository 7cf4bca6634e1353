#pragma once

// Sequential warped products (M1 x_f M2) x_h M3 with metric g1 + f^2 g2 + h^2 g3,
// their closed-form connection, curvature and Ricci tensors, and the flattening
// into a single chart for the brute-force oracle.
//
// h lives on the inner product B = M1 x_f M2, so grad h, Hess h and Laplacian h
// are taken with respect to g1 + f^2 g2.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqwarp/chart.hpp"
#include "seqwarp/expr.hpp"
#include "seqwarp/tensor.hpp"

namespace seqwarp {

class ProductError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SequentialWarpedProduct {
 public:
  SequentialWarpedProduct(FactorManifold m1, FactorManifold m2, FactorManifold m3, Expr f, Expr h)
      : m_{std::move(m1), std::move(m2), std::move(m3)}, f_(std::move(f)), h_(std::move(h)) {
    std::set<std::string> seen;
    for (const auto& m : m_) {
      if (m.dim() == 0) throw ProductError("factor " + m.name + " has dimension 0");
      if (m.metric.size() != m.dim() * m.dim()) throw ProductError("factor " + m.name + " has a malformed metric");
      for (const auto& c : m.coords)
        if (!seen.insert(c).second) throw ProductError("coordinate collision: '" + c + "'");
    }
    for (std::size_t k = 0; k < 3; ++k) {
      std::set<std::string> own(m_[k].coords.begin(), m_[k].coords.end());
      for (const auto& e : m_[k].metric)
        for (const auto& v : e.free_variables())
          if (!own.count(v))
            throw ProductError("metric of " + m_[k].name + " depends on foreign coordinate '" + v + "'");
    }
    const std::set<std::string> c1(m_[0].coords.begin(), m_[0].coords.end());
    std::set<std::string> c12 = c1;
    c12.insert(m_[1].coords.begin(), m_[1].coords.end());
    for (const auto& v : f_.free_variables())
      if (!c1.count(v)) throw ProductError("f depends on '" + v + "', which is not a coordinate of " + m_[0].name);
    for (const auto& v : h_.free_variables())
      if (!c12.count(v))
        throw ProductError("h depends on '" + v + "', which is not a coordinate of " + m_[0].name + " or " +
                           m_[1].name);
  }

  const FactorManifold& m1() const { return m_[0]; }
  const FactorManifold& m2() const { return m_[1]; }
  const FactorManifold& m3() const { return m_[2]; }
  const FactorManifold& factor(std::size_t k) const { return m_.at(k); }
  const Expr& f() const { return f_; }
  const Expr& h() const { return h_; }

  std::size_t dim(std::size_t k) const { return m_.at(k).dim(); }
  std::size_t dim() const { return dim(0) + dim(1) + dim(2); }
  std::size_t offset(std::size_t k) const { return k == 0 ? 0 : k == 1 ? dim(0) : dim(0) + dim(1); }
  std::size_t block_of(std::size_t index) const { return index < dim(0) ? 0 : index < dim(0) + dim(1) ? 1 : 2; }

  std::vector<std::string> coords() const {
    std::vector<std::string> out;
    for (const auto& m : m_) out.insert(out.end(), m.coords.begin(), m.coords.end());
    return out;
  }

 private:
  std::array<FactorManifold, 3> m_;
  Expr f_;
  Expr h_;
};

struct ProductPoint {
  Point p1, p2, p3;

  Point flat() const {
    Point out = p1;
    out.insert(out.end(), p2.begin(), p2.end());
    out.insert(out.end(), p3.begin(), p3.end());
    return out;
  }
  Point base() const {
    Point out = p1;
    out.insert(out.end(), p2.begin(), p2.end());
    return out;
  }
};

inline ProductPoint split_point(const SequentialWarpedProduct& w, const Point& flat) {
  if (flat.size() != w.dim()) throw std::invalid_argument("point dimension mismatch for the ambient chart");
  const auto a = flat.begin();
  return {Point(a, a + w.dim(0)), Point(a + w.dim(0), a + w.dim(0) + w.dim(1)),
          Point(a + w.dim(0) + w.dim(1), flat.end())};
}

struct BlockVector {
  std::vector<double> x1, x2, x3;

  std::vector<double> flat() const {
    std::vector<double> out = x1;
    out.insert(out.end(), x2.begin(), x2.end());
    out.insert(out.end(), x3.begin(), x3.end());
    return out;
  }
};

inline BlockVector split_vector(const SequentialWarpedProduct& w, const std::vector<double>& flat) {
  if (flat.size() != w.dim()) throw std::invalid_argument("vector dimension mismatch for the ambient chart");
  const auto a = flat.begin();
  return {std::vector<double>(a, a + w.dim(0)), std::vector<double>(a + w.dim(0), a + w.dim(0) + w.dim(1)),
          std::vector<double>(a + w.dim(0) + w.dim(1), flat.end())};
}

inline BlockVector basis_vector(const SequentialWarpedProduct& w, std::size_t index) {
  std::vector<double> v(w.dim(), 0.0);
  v.at(index) = 1.0;
  return split_vector(w, v);
}

namespace detail {

inline Expr squared(const Expr& e) { return build::mul(e, e); }

inline void check_dims(const SequentialWarpedProduct& w, const ProductPoint& p) {
  if (p.p1.size() != w.dim(0) || p.p2.size() != w.dim(1) || p.p3.size() != w.dim(2))
    throw std::invalid_argument("product point block sizes do not match the factors");
}

}  // namespace detail

inline double warping_f(const SequentialWarpedProduct& w, const ProductPoint& p) {
  return evaluate(w.f(), bind_coords(w.m1().coords, p.p1));
}

inline double warping_h(const SequentialWarpedProduct& w, const ProductPoint& p) {
  EvalPoint at = bind_coords(w.m1().coords, p.p1);
  at = bind_coords(w.m2().coords, p.p2, at);
  return evaluate(w.h(), at);
}

inline void check_warpings(const SequentialWarpedProduct& w, const ProductPoint& p) {
  const std::string where = format_point(w.coords(), p.flat());
  double f = 0.0, h = 0.0;
  try {
    f = warping_f(w, p);
    h = warping_h(w, p);
  } catch (const DomainError& e) {
    throw GeometryError(std::string("warping function not defined (") + e.what() + ")", where);
  }
  if (!(f > 0.0)) throw GeometryError("warping function f is not positive", where);
  if (!(h > 0.0)) throw GeometryError("warping function h is not positive", where);
}

inline Matrix<double> ambient_metric_at(const SequentialWarpedProduct& w, const ProductPoint& p) {
  detail::check_dims(w, p);
  check_warpings(w, p);
  const double f = warping_f(w, p);
  const double h = warping_h(w, p);
  const double scale[3] = {1.0, f * f, h * h};
  const Point* pts[3] = {&p.p1, &p.p2, &p.p3};
  Matrix<double> g(w.dim(), w.dim());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto gk = metric_at(w.factor(k), *pts[k]);
    for (std::size_t i = 0; i < w.dim(k); ++i)
      for (std::size_t j = 0; j < w.dim(k); ++j) g(w.offset(k) + i, w.offset(k) + j) = scale[k] * gk(i, j);
  }
  return g;
}

// The inner warped product M1 x_f M2 as a chart.
inline FactorManifold base_chart(const SequentialWarpedProduct& w) {
  FactorManifold b;
  b.name = w.m1().name + "x" + w.m2().name;
  b.coords = w.m1().coords;
  b.coords.insert(b.coords.end(), w.m2().coords.begin(), w.m2().coords.end());
  const std::size_t n1 = w.dim(0), n = n1 + w.dim(1);
  b.metric.assign(n * n, Expr::constant(0.0));
  const Expr f2 = detail::squared(w.f());
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n1; ++j) b.metric[i * n + j] = w.m1().entry(i, j);
  for (std::size_t i = 0; i < w.dim(1); ++i)
    for (std::size_t j = 0; j < w.dim(1); ++j) b.metric[(n1 + i) * n + n1 + j] = build::mul(f2, w.m2().entry(i, j));
  b.signature = (w.m1().signature == Signature::lorentzian || w.m2().signature == Signature::lorentzian)
                    ? Signature::lorentzian
                    : Signature::riemannian;
  b.periods = w.m1().periods;
  b.periods.resize(n1);
  auto p2 = w.m2().periods;
  p2.resize(w.dim(1));
  b.periods.insert(b.periods.end(), p2.begin(), p2.end());
  return b;
}

inline FactorManifold flatten_to_chart(const SequentialWarpedProduct& w) {
  const FactorManifold b = base_chart(w);
  FactorManifold out;
  out.name = b.name + "x" + w.m3().name;
  out.coords = w.coords();
  const std::size_t nb = b.dim(), n = w.dim();
  out.metric.assign(n * n, Expr::constant(0.0));
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) out.metric[i * n + j] = b.entry(i, j);
  const Expr h2 = detail::squared(w.h());
  for (std::size_t i = 0; i < w.dim(2); ++i)
    for (std::size_t j = 0; j < w.dim(2); ++j) out.metric[(nb + i) * n + nb + j] = build::mul(h2, w.m3().entry(i, j));
  int lorentzian = 0;
  for (std::size_t k = 0; k < 3; ++k) lorentzian += w.factor(k).signature == Signature::lorentzian;
  if (lorentzian > 1) throw ProductError("more than one Lorentzian factor");
  out.signature = lorentzian ? Signature::lorentzian : Signature::riemannian;
  out.periods = b.periods;
  auto p3 = w.m3().periods;
  p3.resize(w.dim(2));
  out.periods.insert(out.periods.end(), p3.begin(), p3.end());
  return out;
}

// Everything the closed forms need at one point: factor curvature, f on M1 and
// h on the inner product B.
struct ProductGeometry {
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  double f = 0.0, h = 0.0;
  CurvatureBundle c1, c2, c3, base;
  ScalarField f1;  // f on (M1, g1)
  ScalarField hb;  // h on (B, g1 + f^2 g2)
  Matrix<double> gbar;

  std::size_t dim() const { return n1 + n2 + n3; }
  std::size_t block(std::size_t i) const { return i < n1 ? 0 : i < n1 + n2 ? 1 : 2; }
  std::size_t local(std::size_t i) const { return i < n1 ? i : i < n1 + n2 ? i - n1 : i - n1 - n2; }

  // Trace of the M1 resp. M2 block of Hess_B h against g1 resp. g2.
  double hessian_h_trace1() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n1; ++j) s += c1.ginv(i, j) * hb.hess(i, j);
    return s;
  }
  double hessian_h_trace2() const {
    double s = 0.0;
    for (std::size_t a = 0; a < n2; ++a)
      for (std::size_t b = 0; b < n2; ++b) s += c2.ginv(a, b) * hb.hess(n1 + a, n1 + b);
    return s;
  }
};

inline ProductGeometry product_geometry_at(const SequentialWarpedProduct& w, const ProductPoint& p) {
  detail::check_dims(w, p);
  check_warpings(w, p);
  ProductGeometry g;
  g.n1 = w.dim(0);
  g.n2 = w.dim(1);
  g.n3 = w.dim(2);
  g.c1 = curvature_at(w.m1(), p.p1);
  g.c2 = curvature_at(w.m2(), p.p2);
  g.c3 = curvature_at(w.m3(), p.p3);
  const FactorManifold b = base_chart(w);
  const Point pb = p.base();
  g.base = curvature_at(b, pb);
  g.f1 = scalar_field(g.c1, eval_jet(w.f(), w.m1().coords, p.p1, 2));
  g.hb = scalar_field(g.base, eval_jet(w.h(), b.coords, pb, 2));
  g.f = g.f1.value;
  g.h = g.hb.value;
  g.gbar = ambient_metric_at(w, p);
  return g;
}

// Levi-Civita symbols Gamma^k_ij of the ambient metric assembled block by block
// from the factor connections and the warping functions.
inline Tensor3<double> christoffel_closed(const ProductGeometry& g) {
  const std::size_t n = g.dim(), n1 = g.n1, n2 = g.n2, o2 = n1, o3 = n1 + n2, nb = n1 + n2;
  Tensor3<double> G(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t bi = g.block(i), bj = g.block(j), li = g.local(i), lj = g.local(j);
      if (bi == 0 && bj == 0) {
        for (std::size_t k = 0; k < n1; ++k) G(k, i, j) = g.c1.gamma(k, li, lj);
      } else if (bi == 1 && bj == 1) {
        for (std::size_t k = 0; k < n2; ++k) G(o2 + k, i, j) = g.c2.gamma(k, li, lj);
        for (std::size_t k = 0; k < n1; ++k) G(k, i, j) = -g.f * g.c2.g(li, lj) * g.f1.grad[k];
      } else if (bi == 2 && bj == 2) {
        for (std::size_t k = 0; k < g.n3; ++k) G(o3 + k, i, j) = g.c3.gamma(k, li, lj);
        for (std::size_t k = 0; k < nb; ++k) G(k, i, j) = -g.h * g.c3.g(li, lj) * g.hb.grad[k];
      } else if ((bi == 0 && bj == 1) || (bi == 1 && bj == 0)) {
        const std::size_t x = bi == 0 ? li : lj;
        const std::size_t v = bi == 1 ? i : j;
        G(v, i, j) = g.f1.d[x] / g.f;
      } else {
        // one index in M3, the other in B
        const std::size_t x = bi == 2 ? j : i;
        const std::size_t v = bi == 2 ? i : j;
        G(v, i, j) = g.hb.d[x] / g.h;
      }
    }
  return G;
}

inline BlockVector connection_closed(const SequentialWarpedProduct& w, const ProductPoint& p, const BlockVector& X,
                                     const BlockVector& Y) {
  const auto g = product_geometry_at(w, p);
  const auto G = christoffel_closed(g);
  const auto x = X.flat(), y = Y.flat();
  const std::size_t n = g.dim();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[k] += x[i] * y[j] * G(k, i, j);
  return split_vector(w, out);
}

// Curvature operator in the sign convention of the closed-form block formulas,
// which is the negative of R(X,Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y]Z used by the
// chart oracle. Entry (a, b, c, d) is the d-component of R(d_a, d_b) d_c. The
// factor operators R^i are taken in the same sign.
inline Tensor4<double> curvature_operator_closed(const ProductGeometry& g) {
  const std::size_t n = g.dim(), n1 = g.n1, n2 = g.n2, n3 = g.n3, nb = n1 + n2, o3 = nb;
  const double gradf2 = g.f1.grad_norm2, gradh2 = g.hb.grad_norm2;

  // R(d_a, d_b) d_c for block(a) <= block(b); the reversed order follows from
  // antisymmetry in the first two slots.
  auto value = [&](std::size_t a, std::size_t b, std::size_t c) {
    std::vector<double> out(n, 0.0);
    const std::size_t ba = g.block(a), bb = g.block(b), bc = g.block(c);
    const std::size_t la = g.local(a), lb = g.local(b), lc = g.local(c);
    if (ba == 0 && bb == 0 && bc == 0) {
      for (std::size_t d = 0; d < n1; ++d) out[d] = -g.c1.riemann_up(d, la, lb, lc);
    } else if (ba == 1 && bb == 1 && bc == 1) {
      for (std::size_t d = 0; d < n2; ++d)
        out[n1 + d] = -g.c2.riemann_up(d, la, lb, lc) -
                      gradf2 * (g.c2.g(la, lc) * (d == lb) - g.c2.g(lb, lc) * (d == la));
    } else if (ba == 2 && bb == 2 && bc == 2) {
      for (std::size_t d = 0; d < n3; ++d)
        out[o3 + d] = -g.c3.riemann_up(d, la, lb, lc) -
                      gradh2 * (g.c3.g(la, lc) * (d == lb) - g.c3.g(lb, lc) * (d == la));
    } else if (ba == 0 && bb == 1 && bc == 0) {
      out[b] = -g.f1.hess(la, lc) / g.f;
    } else if (ba == 0 && bb == 1 && bc == 1) {
      for (std::size_t d = 0; d < n1; ++d) {
        double nabla_grad = 0.0;
        for (std::size_t e = 0; e < n1; ++e) nabla_grad += g.c1.ginv(d, e) * g.f1.hess(la, e);
        out[d] = g.f * g.c2.g(lb, lc) * nabla_grad;
      }
    } else if (ba != 2 && bb == 2 && bc != 2) {
      out[b] = -g.hb.hess(a, c) / g.h;
    } else if (ba != 2 && bb == 2 && bc == 2) {
      for (std::size_t d = 0; d < nb; ++d) {
        double nabla_grad = 0.0;
        for (std::size_t e = 0; e < nb; ++e) nabla_grad += g.base.ginv(d, e) * g.hb.hess(a, e);
        out[d] = g.h * g.c3.g(lb, lc) * nabla_grad;
      }
    }
    return out;
  };

  Tensor4<double> R(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        const bool reversed = g.block(a) > g.block(b);
        const auto v = reversed ? value(b, a, c) : value(a, b, c);
        for (std::size_t d = 0; d < n; ++d) R(a, b, c, d) = reversed ? -v[d] : v[d];
      }
  return R;
}

inline BlockVector curvature_closed(const SequentialWarpedProduct& w, const ProductPoint& p, const BlockVector& X,
                                    const BlockVector& Y, const BlockVector& Z) {
  const auto g = product_geometry_at(w, p);
  const auto R = curvature_operator_closed(g);
  const auto x = X.flat(), y = Y.flat(), z = Z.flat();
  const std::size_t n = g.dim();
  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (x[a] == 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (y[b] == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (z[c] == 0.0) continue;
        for (std::size_t d = 0; d < n; ++d) out[d] += x[a] * y[b] * z[c] * R(a, b, c, d);
      }
    }
  }
  return split_vector(w, out);
}

// Lowered Riemann tensor in the chart oracle's convention, R_abcd = g_de R^e_abc.
inline Tensor4<double> riemann_closed(const ProductGeometry& g) {
  const auto R = curvature_operator_closed(g);
  const std::size_t n = g.dim();
  Tensor4<double> out(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          double s = 0.0;
          for (std::size_t e = 0; e < n; ++e) s += g.gbar(d, e) * R(a, b, c, e);
          out(a, b, c, d) = -s;
        }
  return out;
}

// Block-diagonal Ricci tensor; the mixed blocks are set to zero.
inline Matrix<double> ricci_closed(const ProductGeometry& g, std::size_t m2, std::size_t m3) {
  const std::size_t n = g.dim(), n1 = g.n1, n2 = g.n2, n3 = g.n3, o2 = n1, o3 = n1 + n2;
  const double dm2 = static_cast<double>(m2), dm3 = static_cast<double>(m3);
  Matrix<double> ric(n, n);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      ric(i, j) = g.c1.ricci(i, j) - dm2 / g.f * g.f1.hess(i, j) - dm3 / g.h * g.hb.hess(i, j);
  const double lam = g.f * g.f1.laplacian + (dm2 - 1.0) * g.f1.grad_norm2;
  for (std::size_t a = 0; a < n2; ++a)
    for (std::size_t b = 0; b < n2; ++b)
      ric(o2 + a, o2 + b) =
          g.c2.ricci(a, b) - lam * g.c2.g(a, b) - dm3 / g.h * g.hb.hess(o2 + a, o2 + b);
  const double nu = g.h * g.hb.laplacian + (dm3 - 1.0) * g.hb.grad_norm2;
  for (std::size_t p = 0; p < n3; ++p)
    for (std::size_t q = 0; q < n3; ++q) ric(o3 + p, o3 + q) = g.c3.ricci(p, q) - nu * g.c3.g(p, q);
  return ric;
}

inline Matrix<double> ricci_closed(const SequentialWarpedProduct& w, const ProductGeometry& g) {
  return ricci_closed(g, w.dim(1), w.dim(2));
}

inline Matrix<double> ricci_closed(const SequentialWarpedProduct& w, const ProductPoint& p) {
  return ricci_closed(w, product_geometry_at(w, p));
}

inline double scalar_closed(const SequentialWarpedProduct& w, const ProductGeometry& g) {
  const auto ric = ricci_closed(w, g);
  const auto ginv = inverse_and_det(g.gbar).first;
  double s = 0.0;
  for (std::size_t i = 0; i < g.dim(); ++i)
    for (std::size_t j = 0; j < g.dim(); ++j) s += ginv(i, j) * ric(i, j);
  return s;
}

// The mixed M1/M2 Ricci entries that the block formulas drop:
// -(m3/h) Hess_B h(X1, Y2). Zero when Hess_B h has no mixed block.
inline Matrix<double> ricci_mixed_hessian_term(const ProductGeometry& g, std::size_t m3) {
  Matrix<double> out(g.n1, g.n2);
  for (std::size_t i = 0; i < g.n1; ++i)
    for (std::size_t a = 0; a < g.n2; ++a) out(i, a) = -static_cast<double>(m3) / g.h * g.hb.hess(i, g.n1 + a);
  return out;
}

struct QEParameters {
  double alpha = 0.0;
  double beta = 0.0;
  BlockVector U;
};

struct FactorScalars {
  double scal1 = 0.0, scal2 = 0.0, scal3 = 0.0;
};

namespace detail {

inline double quad(const Matrix<double>& g, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) s += g(i, j) * u[i] * u[j];
  return s;
}

}  // namespace detail

inline double lambda_value(const ProductGeometry& g, double alpha, std::size_t m2) {
  return alpha * g.f * g.f + g.f * g.f1.laplacian + (static_cast<double>(m2) - 1.0) * g.f1.grad_norm2;
}

inline double nu_value(const ProductGeometry& g, double alpha, std::size_t m3) {
  return alpha * g.h * g.h + g.h * g.hb.laplacian + (static_cast<double>(m3) - 1.0) * g.hb.grad_norm2;
}

// Without QE data: the scalar curvature of each factor chart. With QE data: the
// values predicted by tracing the factor Ricci identities, where the h-Hessian
// terms are traced over the M1 resp. M2 block of Hess_B h.
inline FactorScalars factor_scalars_closed(const SequentialWarpedProduct& w, const ProductGeometry& g,
                                           const std::optional<QEParameters>& qe = std::nullopt) {
  if (!qe) return {g.c1.scalar, g.c2.scalar, g.c3.scalar};
  const double m1 = static_cast<double>(w.dim(0)), m2 = static_cast<double>(w.dim(1)),
               m3 = static_cast<double>(w.dim(2));
  const double f4 = std::pow(g.f, 4), h4 = std::pow(g.h, 4);
  FactorScalars s;
  s.scal1 = qe->alpha * m1 + qe->beta * detail::quad(g.c1.g, qe->U.x1) + m2 / g.f * g.f1.laplacian +
            m3 / g.h * g.hessian_h_trace1();
  s.scal2 = lambda_value(g, qe->alpha, w.dim(1)) * m2 + qe->beta * f4 * detail::quad(g.c2.g, qe->U.x2) +
            m3 / g.h * g.hessian_h_trace2();
  s.scal3 = nu_value(g, qe->alpha, w.dim(2)) * m3 + qe->beta * h4 * detail::quad(g.c3.g, qe->U.x3);
  return s;
}

inline FactorScalars factor_scalars_closed(const SequentialWarpedProduct& w, const ProductPoint& p,
                                           const std::optional<QEParameters>& qe = std::nullopt) {
  return factor_scalars_closed(w, product_geometry_at(w, p), qe);
}

}  // namespace seqwarp
