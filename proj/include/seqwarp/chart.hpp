#pragma once

// Coordinate-chart semi-Riemannian calculus from metric entries alone. This is
// the brute-force reference every closed-form warped-product formula is checked
// against.
//
// Conventions:
//   Gamma^k_ij   = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
//   R^l_ijk      = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik
//                  i.e. R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
//   R_ijkl       = g_lm R^m_ijk
//   Ric_jk       = R^i_ijk, scal = g^jk Ric_jk
//   Hess(phi)_ij = d_i d_j phi - Gamma^k_ij d_k phi, Laplacian = trace of the Hessian.
// With these choices the unit sphere has Ric = g and R_ijkl = g_jk g_il - g_ik g_jl.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqwarp/dual.hpp"
#include "seqwarp/expr.hpp"
#include "seqwarp/jet.hpp"
#include "seqwarp/tensor.hpp"

namespace seqwarp {

enum class Signature { riemannian, lorentzian };

inline constexpr double kDegeneracyThreshold = 1e-12;

using Point = std::vector<double>;

inline std::string format_point(const std::vector<std::string>& coords, const Point& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    if (i < coords.size()) os << coords[i] << '=';
    os << p[i];
  }
  os << ')';
  return os.str();
}

// Raised when a chart cannot be used at a point: degenerate or asymmetric
// metric, wrong signature, or a non-positive warping function.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(const std::string& what, std::string where)
      : std::runtime_error(what + " at " + where), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct FactorManifold {
  std::string name;
  std::vector<std::string> coords;
  std::vector<Expr> metric;  // row-major dim x dim
  Signature signature = Signature::riemannian;
  std::vector<std::optional<double>> periods;  // empty, or one entry per coordinate

  std::size_t dim() const { return coords.size(); }
  const Expr& entry(std::size_t i, std::size_t j) const { return metric[i * dim() + j]; }

  bool fully_periodic() const {
    if (periods.size() != dim()) return false;
    for (const auto& p : periods)
      if (!p || *p <= 0.0) return false;
    return true;
  }
};

inline FactorManifold make_factor(std::string name, std::vector<std::string> coords,
                                  const std::vector<std::vector<std::string>>& metric,
                                  Signature sig = Signature::riemannian) {
  FactorManifold m;
  m.name = std::move(name);
  m.coords = std::move(coords);
  m.signature = sig;
  const std::size_t n = m.coords.size();
  if (metric.size() != n) throw std::invalid_argument("metric row count does not match dimension");
  for (const auto& row : metric) {
    if (row.size() != n) throw std::invalid_argument("metric column count does not match dimension");
    for (const auto& s : row) m.metric.push_back(parse(s, m.coords));
  }
  return m;
}

inline FactorManifold diagonal_factor(std::string name, std::vector<std::string> coords,
                                      const std::vector<std::string>& diag,
                                      Signature sig = Signature::riemannian) {
  std::vector<std::vector<std::string>> rows(diag.size(), std::vector<std::string>(diag.size(), "0"));
  for (std::size_t i = 0; i < diag.size(); ++i) rows[i][i] = diag[i];
  return make_factor(std::move(name), std::move(coords), rows, sig);
}

inline FactorManifold euclidean_factor(std::string name, std::vector<std::string> coords) {
  return diagonal_factor(std::move(name), coords, std::vector<std::string>(coords.size(), "1"));
}

inline EvalPoint bind_coords(const std::vector<std::string>& coords, const Point& p, const EvalPoint& params = {}) {
  EvalPoint out = params;
  for (std::size_t i = 0; i < coords.size(); ++i) out[coords[i]] = p.at(i);
  return out;
}

inline Matrix<double> metric_at(const FactorManifold& m, const Point& p, const EvalPoint& params = {}) {
  const EvalPoint at = bind_coords(m.coords, p, params);
  Matrix<double> g(m.dim(), m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) g(i, j) = evaluate(m.entry(i, j), at);
  return g;
}

inline Eigen::MatrixXd to_eigen(const Matrix<double>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline Matrix<double> from_eigen(const Eigen::MatrixXd& m) {
  Matrix<double> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline int negative_eigenvalues(const Matrix<double>& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g), Eigen::EigenvaluesOnly);
  int neg = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 0.0) ++neg;
  return neg;
}

// Symmetry, nondegeneracy, finiteness and signature of the metric at p.
inline void validate_at(const FactorManifold& m, const Point& p, const EvalPoint& params = {}) {
  const std::string where = m.name + " " + format_point(m.coords, p);
  if (p.size() != m.dim()) throw std::invalid_argument("point dimension mismatch for " + m.name);
  for (double x : p)
    if (!std::isfinite(x)) throw GeometryError("non-finite coordinate", where);
  Matrix<double> g;
  try {
    g = metric_at(m, p, params);
  } catch (const DomainError& e) {
    throw GeometryError(std::string("metric not defined (") + e.what() + ")", where);
  }
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) {
      if (!std::isfinite(g(i, j))) throw GeometryError("non-finite metric entry", where);
      if (std::abs(g(i, j) - g(j, i)) > 1e-14 * (1.0 + std::abs(g(i, j))))
        throw GeometryError("asymmetric metric", where);
    }
  const double det = inverse_and_det(g).second;
  if (!(std::abs(det) > kDegeneracyThreshold)) throw GeometryError("degenerate metric", where);
  const int neg = negative_eigenvalues(g);
  const int expected = m.signature == Signature::riemannian ? 0 : 1;
  if (neg != expected)
    throw GeometryError("metric signature has " + std::to_string(neg) + " negative eigenvalue(s), expected " +
                            std::to_string(expected),
                        where);
}

// g, d_k g_ij and d_k d_l g_ij at a point, in scalar type S.
template <class S>
struct MetricJet {
  Matrix<S> g;
  Tensor3<S> dg;   // (k, i, j)
  Tensor4<S> ddg;  // (k, l, i, j)
};

template <class S>
MetricJet<S> metric_jet(const FactorManifold& m, std::span<const S> x, const EvalPoint* params = nullptr) {
  const std::size_t n = m.dim();
  MetricJet<S> out{Matrix<S>(n, n), Tensor3<S>(n), Tensor4<S>(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const Jet<S> jet = eval_jet<S>(m.entry(i, j), m.coords, x, 2, params);
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        out.g(a, b) = jet.value();
        for (std::size_t k = 0; k < n; ++k) {
          out.dg(k, a, b) = jet.gradient()[k];
          for (std::size_t l = 0; l < n; ++l) out.ddg(k, l, a, b) = jet.hessian(k, l);
        }
      }
    }
  return out;
}

template <class S>
struct CurvatureBundleT {
  Matrix<S> g;
  Matrix<S> ginv;
  S det = S(0);
  Tensor3<S> gamma;       // Gamma^k_ij at (k, i, j)
  Tensor4<S> dgamma;      // d_m Gamma^k_ij at (m, k, i, j)
  Tensor4<S> riemann_up;  // R^l_ijk at (l, i, j, k)
  Tensor4<S> riemann;     // R_ijkl
  Matrix<S> ricci;
  S scalar = S(0);

  std::size_t dim() const { return g.rows(); }
};

using CurvatureBundle = CurvatureBundleT<double>;

template <class S>
CurvatureBundleT<S> curvature_from_jet(const MetricJet<S>& mj) {
  const std::size_t n = mj.g.rows();
  CurvatureBundleT<S> b;
  b.g = mj.g;
  auto [ginv, det] = inverse_and_det(mj.g);
  b.ginv = std::move(ginv);
  b.det = det;

  // First-kind symbols and their derivatives.
  Tensor3<S> low(n);   // Gamma_lij at (l, i, j)
  Tensor4<S> dlow(n);  // d_m Gamma_lij at (m, l, i, j)
  const S half(0.5);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        low(l, i, j) = half * (mj.dg(i, j, l) + mj.dg(j, i, l) - mj.dg(l, i, j));
        for (std::size_t m = 0; m < n; ++m)
          dlow(m, l, i, j) = half * (mj.ddg(m, i, j, l) + mj.ddg(m, j, i, l) - mj.ddg(m, l, i, j));
      }

  // d_m g^kl = -g^ka d_m g_ab g^bl
  Tensor3<S> dginv(n);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        S acc(0);
        for (std::size_t a = 0; a < n; ++a) {
          if (is_zero(b.ginv(k, a))) continue;
          for (std::size_t c = 0; c < n; ++c) acc = acc + b.ginv(k, a) * mj.dg(m, a, c) * b.ginv(c, l);
        }
        dginv(m, k, l) = -acc;
      }

  b.gamma = Tensor3<S>(n);
  b.dgamma = Tensor4<S>(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        S acc(0);
        for (std::size_t l = 0; l < n; ++l) acc = acc + b.ginv(k, l) * low(l, i, j);
        b.gamma(k, i, j) = acc;
        for (std::size_t m = 0; m < n; ++m) {
          S d(0);
          for (std::size_t l = 0; l < n; ++l) d = d + dginv(m, k, l) * low(l, i, j) + b.ginv(k, l) * dlow(m, l, i, j);
          b.dgamma(m, k, i, j) = d;
        }
      }

  b.riemann_up = Tensor4<S>(n);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          S acc = b.dgamma(i, l, j, k) - b.dgamma(j, l, i, k);
          for (std::size_t m = 0; m < n; ++m)
            acc = acc + b.gamma(l, i, m) * b.gamma(m, j, k) - b.gamma(l, j, m) * b.gamma(m, i, k);
          b.riemann_up(l, i, j, k) = acc;
        }

  b.riemann = Tensor4<S>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          S acc(0);
          for (std::size_t m = 0; m < n; ++m) acc = acc + b.g(l, m) * b.riemann_up(m, i, j, k);
          b.riemann(i, j, k, l) = acc;
        }

  b.ricci = Matrix<S>(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      S acc(0);
      for (std::size_t i = 0; i < n; ++i) acc = acc + b.riemann_up(i, i, j, k);
      b.ricci(j, k) = acc;
    }
  S sc(0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) sc = sc + b.ginv(j, k) * b.ricci(j, k);
  b.scalar = sc;
  return b;
}

namespace detail {

inline void require_nondegenerate(const FactorManifold& m, const Point& p, double det) {
  if (!(std::abs(det) > kDegeneracyThreshold))
    throw GeometryError("degenerate metric", m.name + " " + format_point(m.coords, p));
}

inline std::vector<Dual> seeded(const Point& p) {
  std::vector<Dual> x;
  x.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) x.push_back(Dual::variable(p[i], i, p.size()));
  return x;
}

}  // namespace detail

inline CurvatureBundle curvature_at(const FactorManifold& m, const Point& p, const EvalPoint& params = {}) {
  if (p.size() != m.dim()) throw std::invalid_argument("point dimension mismatch for " + m.name);
  auto b = curvature_from_jet(metric_jet<double>(m, std::span<const double>(p), &params));
  detail::require_nondegenerate(m, p, b.det);
  return b;
}

inline Tensor3<double> christoffel_at(const FactorManifold& m, const Point& p) { return curvature_at(m, p).gamma; }
inline Tensor4<double> riemann_at(const FactorManifold& m, const Point& p) { return curvature_at(m, p).riemann; }
inline Matrix<double> ricci_at(const FactorManifold& m, const Point& p) { return curvature_at(m, p).ricci; }
inline double scalar_at(const FactorManifold& m, const Point& p) { return curvature_at(m, p).scalar; }

// Gradient, Hessian and Laplacian of a scalar field in a given chart.
template <class S>
struct ScalarFieldT {
  S value = S(0);
  std::vector<S> d;  // partials
  Matrix<S> dd;      // second partials
  std::vector<S> grad;
  Matrix<S> hess;
  S laplacian = S(0);
  S grad_norm2 = S(0);
};

using ScalarField = ScalarFieldT<double>;

template <class S>
ScalarFieldT<S> scalar_field(const CurvatureBundleT<S>& b, const Jet<S>& phi) {
  const std::size_t n = b.dim();
  ScalarFieldT<S> out;
  out.value = phi.value();
  out.d = phi.gradient();
  out.dd = phi.hessian_matrix();
  out.grad.assign(n, S(0));
  out.hess = Matrix<S>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    S acc(0);
    for (std::size_t j = 0; j < n; ++j) acc = acc + b.ginv(i, j) * out.d[j];
    out.grad[i] = acc;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      S acc = out.dd(i, j);
      for (std::size_t k = 0; k < n; ++k) acc = acc - b.gamma(k, i, j) * out.d[k];
      out.hess(i, j) = acc;
      out.hess(j, i) = acc;
    }
  S lap(0);
  S norm(0);
  for (std::size_t i = 0; i < n; ++i) {
    norm = norm + out.grad[i] * out.d[i];
    for (std::size_t j = 0; j < n; ++j) lap = lap + b.ginv(i, j) * out.hess(i, j);
  }
  out.laplacian = lap;
  out.grad_norm2 = norm;
  return out;
}

inline ScalarField scalar_field_at(const FactorManifold& m, const Point& p, const Expr& phi,
                                   const EvalPoint& params = {}) {
  const auto b = curvature_at(m, p, params);
  return scalar_field(b, eval_jet<double>(phi, m.coords, std::span<const double>(p), 2, &params));
}

inline std::vector<double> gradient_at(const FactorManifold& m, const Point& p, const Expr& phi) {
  return scalar_field_at(m, p, phi).grad;
}
inline Matrix<double> hessian_at(const FactorManifold& m, const Point& p, const Expr& phi) {
  return scalar_field_at(m, p, phi).hess;
}
inline double laplacian_at(const FactorManifold& m, const Point& p, const Expr& phi) {
  return scalar_field_at(m, p, phi).laplacian;
}

// (div T)_j = g^ik (d_i T_kj - Gamma^m_ik T_mj - Gamma^m_ij T_km) for a symmetric
// 2-tensor with values T and partials dT(i, k, j) = d_i T_kj.
inline std::vector<double> covariant_divergence(const CurvatureBundle& b, const Matrix<double>& t,
                                                const Tensor3<double>& dt) {
  const std::size_t n = b.dim();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (b.ginv(i, k) == 0.0) continue;
        double term = dt(i, k, j);
        for (std::size_t m = 0; m < n; ++m) term -= b.gamma(m, i, k) * t(m, j) + b.gamma(m, i, j) * t(k, m);
        acc += b.ginv(i, k) * term;
      }
    out[j] = acc;
  }
  return out;
}

inline std::vector<double> div_sym2_at(const FactorManifold& m, const Point& p, const std::vector<Expr>& t_entries) {
  const std::size_t n = m.dim();
  if (t_entries.size() != n * n) throw std::invalid_argument("tensor entry count does not match dimension");
  const auto b = curvature_at(m, p);
  Matrix<double> t(n, n);
  Tensor3<double> dt(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      const auto jet = eval_jet(t_entries[k * n + j], m.coords, p, 1);
      t(k, j) = jet.value();
      for (std::size_t i = 0; i < n; ++i) dt(i, k, j) = jet.gradient()[i];
    }
  return covariant_divergence(b, t, dt);
}

// Curvature and a scalar field evaluated once in doubles and once in duals, so
// first partials of Ric, scal, Hess(phi) and Laplacian(phi) are available exactly.
struct DifferentiatedGeometry {
  CurvatureBundle bundle;
  Tensor3<double> dricci;  // (m, j, k) = d_m Ric_jk
  std::vector<double> dscalar;
  std::optional<ScalarField> field;
  Tensor3<double> dhess;  // (m, i, j) = d_m Hess_ij
  std::vector<double> dlaplacian;
};

inline DifferentiatedGeometry differentiated_geometry_at(const FactorManifold& m, const Point& p,
                                                         const std::optional<Expr>& phi = std::nullopt,
                                                         const EvalPoint& params = {}) {
  const std::size_t n = m.dim();
  DifferentiatedGeometry out;
  out.bundle = curvature_at(m, p, params);
  const std::vector<Dual> x = detail::seeded(p);
  const auto bd = curvature_from_jet(metric_jet<Dual>(m, std::span<const Dual>(x), &params));
  out.dricci = Tensor3<double>(n);
  out.dscalar.assign(n, 0.0);
  for (std::size_t mm = 0; mm < n; ++mm) {
    out.dscalar[mm] = bd.scalar.d(mm);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out.dricci(mm, j, k) = bd.ricci(j, k).d(mm);
  }
  if (phi) {
    out.field = scalar_field(out.bundle, eval_jet<double>(*phi, m.coords, std::span<const double>(p), 2, &params));
    const auto fd = scalar_field(bd, eval_jet<Dual>(*phi, m.coords, std::span<const Dual>(x), 2, &params));
    out.dhess = Tensor3<double>(n);
    out.dlaplacian.assign(n, 0.0);
    for (std::size_t mm = 0; mm < n; ++mm) {
      out.dlaplacian[mm] = fd.laplacian.d(mm);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.dhess(mm, i, j) = fd.hess(i, j).d(mm);
    }
  }
  return out;
}

inline std::vector<double> ricci_divergence_at(const FactorManifold& m, const Point& p) {
  const auto dg = differentiated_geometry_at(m, p);
  return covariant_divergence(dg.bundle, dg.bundle.ricci, dg.dricci);
}

inline std::vector<double> scalar_differential_at(const FactorManifold& m, const Point& p) {
  return differentiated_geometry_at(m, p).dscalar;
}

inline std::vector<double> hessian_divergence_at(const FactorManifold& m, const Point& p, const Expr& phi,
                                                 const EvalPoint& params = {}) {
  const auto dg = differentiated_geometry_at(m, p, phi, params);
  return covariant_divergence(dg.bundle, dg.field->hess, dg.dhess);
}

inline std::vector<double> laplacian_differential_at(const FactorManifold& m, const Point& p, const Expr& phi,
                                                     const EvalPoint& params = {}) {
  return differentiated_geometry_at(m, p, phi, params).dlaplacian;
}

}  // namespace seqwarp
