#pragma once

// Small dense containers used by the curvature pipeline. They are templated on
// the scalar so the same code runs on plain doubles and on forward-mode duals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace seqwarp {

inline double value_of(double x) { return x; }
inline bool is_zero(double x) { return x == 0.0; }

template <class S>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const S& fill = S(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = S(1);
    return m;
  }

  S& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const S& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<S>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<S> data_;
};

// T(a, b, c) over an n^3 cube.
template <class S>
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(std::size_t n, const S& fill = S(0)) : n_(n), data_(n * n * n, fill) {}

  S& operator()(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * n_ + b) * n_ + c]; }
  const S& operator()(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * n_ + b) * n_ + c];
  }
  std::size_t dim() const { return n_; }
  const std::vector<S>& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<S> data_;
};

template <class S>
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(std::size_t n, const S& fill = S(0)) : n_(n), data_(n * n * n * n, fill) {}

  S& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * n_ + b) * n_ + c) * n_ + d];
  }
  const S& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * n_ + b) * n_ + c) * n_ + d];
  }
  std::size_t dim() const { return n_; }
  const std::vector<S>& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<S> data_;
};

// Determinant and inverse by Gauss-Jordan with partial pivoting on the value part.
template <class S>
std::pair<Matrix<S>, S> inverse_and_det(const Matrix<S>& m) {
  const std::size_t n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("inverse of a non-square matrix");
  Matrix<S> a = m;
  Matrix<S> inv = Matrix<S>::identity(n);
  S det(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(value_of(a(col, col)));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(value_of(a(r, col)));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) return {Matrix<S>(n, n), S(0)};
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a(col, c), a(piv, c));
        std::swap(inv(col, c), inv(piv, c));
      }
      det = -det;
    }
    const S p = a(col, col);
    det = det * p;
    for (std::size_t c = 0; c < n; ++c) {
      a(col, c) = a(col, c) / p;
      inv(col, c) = inv(col, c) / p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const S factor = a(r, col);
      if (is_zero(factor)) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) = a(r, c) - factor * a(col, c);
        inv(r, c) = inv(r, c) - factor * inv(col, c);
      }
    }
  }
  return {inv, det};
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

template <class Container>
double max_abs_diff(const Container& a, const Container& b) {
  const auto& da = a.data();
  const auto& db = b.data();
  if (da.size() != db.size()) throw std::invalid_argument("shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

}  // namespace seqwarp
