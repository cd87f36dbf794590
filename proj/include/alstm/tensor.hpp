#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alstm/error.hpp"
#include "alstm/random.hpp"

namespace alstm {

/// Row-major dense matrix. Element storage is owned; copies are deep.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{0}) {
    if (rows == 0 || cols == 0) throw ShapeError("matrix dimensions must be positive");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) throw ShapeError("matrix dimensions must be positive");
    if (data_.size() != rows * cols) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    if (rows_ == 0 || cols_ == 0) throw ShapeError("matrix dimensions must be positive");
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  static Matrix diagonal(std::initializer_list<T> diag) {
    Matrix m(diag.size(), diag.size());
    std::size_t i = 0;
    for (T d : diag) {
      m(i, i) = d;
      ++i;
    }
    return m;
  }

  /// Entries drawn uniformly from [-scale, scale).
  static Matrix random(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (auto& x : m.data_) x = static_cast<T>(rng.uniform(-scale, scale));
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T x) { return std::isfinite(x); });
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    auto dst = out.values();
    for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Dense vector. Unlike Matrix, a zero-length vector may exist; operations
/// that need a non-empty operand check for it.
template <typename T>
class Vector {
 public:
  using value_type = T;

  Vector() = default;
  explicit Vector(std::size_t n) : data_(n, T{0}) {}
  Vector(std::size_t n, T fill) : data_(n, fill) {}
  explicit Vector(std::vector<T> data) : data_(std::move(data)) {}
  Vector(std::initializer_list<T> init) : data_(init) {}

  static Vector random(std::size_t n, Rng& rng, double scale = 1.0) {
    Vector v(n);
    for (auto& x : v.data_) x = static_cast<T>(rng.uniform(-scale, scale));
    return v;
  }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T x) { return std::isfinite(x); });
  }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<T> data_;
};

using DenseMatrix = Matrix<float>;
using DenseVector = Vector<float>;

/// Dot product accumulated in double, left to right.
template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename T>
double norm2(std::span<const T> v) {
  return std::sqrt(dot(v, v));
}

template <typename T>
double norm2(const Vector<T>& v) {
  return norm2(v.values());
}

/// y = M x. Every row is accumulated in double in column order and rounded
/// once, so the result does not depend on threading or call site.
template <typename T, typename U>
Vector<T> matvec(const Matrix<T>& m, const Vector<U>& x) {
  if (m.cols() != x.size()) {
    throw ShapeError("matvec: matrix has " + std::to_string(m.cols()) + " columns, vector has " +
                     std::to_string(x.size()) + " entries");
  }
  Vector<T> y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = static_cast<T>(dot(m.row(r), x.values()));
  return y;
}

template <typename T>
double frobenius_norm(const Matrix<T>& m) {
  double acc = 0.0;
  for (T x : m.values()) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

/// Frobenius norm of (a - b), evaluated in double.
template <typename A, typename B>
double frobenius_distance(const Matrix<A>& a, const Matrix<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("frobenius_distance: shape mismatch");
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace alstm
