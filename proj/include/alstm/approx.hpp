#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "alstm/error.hpp"
#include "alstm/svd.hpp"
#include "alstm/tensor.hpp"

namespace alstm {

/// Parameters of the iterative low-rank + pruning approximation.
///
/// n_steps is the total number of refinement terms, the initial pruned
/// rank-1 term included: n_steps = 1 yields a single pruned rank-1 matrix.
struct ApproxConfig {
  std::size_t nz = 1;
  std::size_t n_steps = 1;
  double svd_tol = 1e-10;
  std::size_t svd_max_iters = 10'000;
  std::uint64_t seed = 0;

  void validate(std::size_t cols) const {
    if (nz < 1 || nz > cols) {
      throw ConfigError("nz must be in [1, " + std::to_string(cols) + "], got " + std::to_string(nz));
    }
    if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (!(svd_tol > 0.0)) throw ConfigError("svd_tol must be positive");
    if (svd_max_iters < 1) throw ConfigError("svd_max_iters must be >= 1");
  }
};

/// f ⊙ v stored as its non-zero support: strictly increasing indices < full_len.
struct SparseMaskedVector {
  struct Entry {
    std::uint32_t index;
    float value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::size_t full_len = 0;
  std::vector<Entry> entries;

  /// Dot product with a dense vector of length full_len, accumulated in double.
  template <typename T>
  double dot(std::span<const T> x) const {
    double acc = 0.0;
    for (const auto& e : entries) acc += static_cast<double>(e.value) * static_cast<double>(x[e.index]);
    return acc;
  }

  DenseVector to_dense() const {
    DenseVector d(full_len);
    for (const auto& e : entries) d[e.index] = e.value;
    return d;
  }

  bool indices_valid() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].index >= full_len) return false;
      if (i > 0 && entries[i].index <= entries[i - 1].index) return false;
    }
    return true;
  }

  friend bool operator==(const SparseMaskedVector&, const SparseMaskedVector&) = default;
};

/// One refinement term sigma * u * (f ⊙ v)^T.
struct RefinementTerm {
  float sigma = 0.0f;
  DenseVector u;
  SparseMaskedVector v_masked;

  friend bool operator==(const RefinementTerm&, const RefinementTerm&) = default;
};

/// Refinement terms of one gate matrix, in the order they were produced.
/// Any prefix of `terms` is itself a valid approximation.
struct GateFactors {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t nz = 0;
  std::vector<RefinementTerm> terms;
  /// Set when the residual vanished before the requested term count was reached.
  bool exactly_converged = false;

  std::size_t term_count() const noexcept { return terms.size(); }

  friend bool operator==(const GateFactors&, const GateFactors&) = default;
};

/// Residual ratio ||E||_F / ||W||_F at which decompose stops early.
inline constexpr double kExactConvergenceRatio = 1e-12;

/// [Wx Wh]: columns [0, Wx.cols) from Wx, the rest from Wh.
template <typename T>
Matrix<T> build_augmented(const Matrix<T>& wx, const Matrix<T>& wh) {
  if (wh.rows() != wh.cols()) throw ShapeError("build_augmented: recurrent matrix must be square");
  if (wx.rows() != wh.rows()) {
    throw ShapeError("build_augmented: row mismatch " + std::to_string(wx.rows()) + " vs " + std::to_string(wh.rows()));
  }
  Matrix<T> out(wx.rows(), wx.cols() + wh.cols());
  for (std::size_t r = 0; r < wx.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(wx.row(r).begin(), wx.row(r).end(), dst.begin());
    std::copy(wh.row(r).begin(), wh.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(wx.cols()));
  }
  return out;
}

/// [x; h_prev]. Both parts must be non-empty.
template <typename T>
Vector<T> build_augmented_input(const Vector<T>& x, const Vector<T>& h_prev) {
  if (x.empty() || h_prev.empty()) throw ShapeError("build_augmented_input: empty input or state");
  Vector<T> out(x.size() + h_prev.size());
  std::copy(x.begin(), x.end(), out.begin());
  std::copy(h_prev.begin(), h_prev.end(), out.begin() + static_cast<std::ptrdiff_t>(x.size()));
  return out;
}

/// As above, also checking the declared model sizes.
template <typename T>
Vector<T> build_augmented_input(const Vector<T>& x, const Vector<T>& h_prev, std::size_t input_size,
                                std::size_t hidden_size) {
  if (x.size() != input_size || h_prev.size() != hidden_size) {
    throw ShapeError("build_augmented_input: expected sizes (" + std::to_string(input_size) + ", " +
                     std::to_string(hidden_size) + "), got (" + std::to_string(x.size()) + ", " +
                     std::to_string(h_prev.size()) + ")");
  }
  return build_augmented_input(x, h_prev);
}

/// Indices of the nz largest-magnitude entries, returned in ascending order.
/// Ties on |v| go to the lower index.
template <typename T>
std::vector<std::size_t> prune_topk(std::span<const T> v, std::size_t nz) {
  if (nz < 1 || nz > v.size()) {
    throw ConfigError("prune_topk: nz must be in [1, " + std::to_string(v.size()) + "], got " + std::to_string(nz));
  }
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nz), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const auto ma = std::abs(static_cast<double>(v[a]));
                      const auto mb = std::abs(static_cast<double>(v[b]));
                      return ma != mb ? ma > mb : a < b;
                    });
  idx.resize(nz);
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename T>
std::vector<std::size_t> prune_topk(const Vector<T>& v, std::size_t nz) {
  return prune_topk(v.values(), nz);
}

namespace detail {

/// Adds scale * sigma * u (f ⊙ v)^T into a double accumulator.
inline void accumulate_term(Matrix<double>& acc, const RefinementTerm& t, double scale = 1.0) {
  const double s = scale * static_cast<double>(t.sigma);
  for (std::size_t r = 0; r < acc.rows(); ++r) {
    const double su = s * static_cast<double>(t.u[r]);
    if (su == 0.0) continue;
    auto row = acc.row(r);
    for (const auto& e : t.v_masked.entries) row[e.index] += su * static_cast<double>(e.value);
  }
}

inline void check_upto(const GateFactors& f, std::size_t upto) {
  if (upto < 1 || upto > f.terms.size()) {
    throw RangeError("upto must be in [1, " + std::to_string(f.terms.size()) + "], got " + std::to_string(upto));
  }
}

/// Sum of the first `upto` terms without intermediate rounding.
inline Matrix<double> reconstruct_f64(const GateFactors& f, std::size_t upto) {
  check_upto(f, upto);
  Matrix<double> acc(f.rows, f.cols);
  for (std::size_t k = 0; k < upto; ++k) accumulate_term(acc, f.terms[k]);
  return acc;
}

}  // namespace detail

/// Iterative pruned rank-1 refinement of one gate matrix.
///
/// Term 0 approximates W; every later term approximates the running error
/// E = W - (sum of earlier terms). Each term keeps the dominant singular
/// triple of its target and prunes v to its nz largest-magnitude entries, so
/// every row of the term shares one sparsity pattern. The residual is tracked
/// in double against the float32 terms actually stored. If ||E||_F drops to
/// kExactConvergenceRatio * ||W||_F the loop stops early and the result is
/// flagged exactly_converged.
template <typename T>
GateFactors decompose(const Matrix<T>& w, const ApproxConfig& cfg) {
  cfg.validate(w.cols());
  const double w_norm = frobenius_norm(w);
  if (w_norm == 0.0) throw ZeroMatrixError("decompose: weight matrix is all zeros");

  GateFactors out;
  out.rows = w.rows();
  out.cols = w.cols();
  out.nz = cfg.nz;
  out.terms.reserve(cfg.n_steps);

  Matrix<double> residual = w.template cast<double>();
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    if (k > 0 && frobenius_norm(residual) <= kExactConvergenceRatio * w_norm) {
      out.exactly_converged = true;
      break;
    }
    const SvdOptions opt{cfg.svd_tol, cfg.svd_max_iters, cfg.seed + k};
    const auto triple = detail::dominant_triple(residual, opt);
    if (!triple.converged && triple.residual > std::max(opt.tol * triple.sigma, 1e-6)) {
      throw ConvergeError("decompose: term " + std::to_string(k) + " did not converge",
                          detail::round_triple(triple));
    }

    RefinementTerm term;
    term.sigma = static_cast<float>(triple.sigma);
    term.u = DenseVector(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r) term.u[r] = static_cast<float>(triple.u[r]);
    term.v_masked.full_len = out.cols;
    for (std::size_t j : prune_topk(std::span<const double>(triple.v), cfg.nz)) {
      term.v_masked.entries.push_back({static_cast<std::uint32_t>(j), static_cast<float>(triple.v[j])});
    }
    detail::accumulate_term(residual, term, -1.0);
    out.terms.push_back(std::move(term));
  }
  return out;
}

/// Dense sum of the first `upto` terms, rounded once to float32.
inline DenseMatrix reconstruct(const GateFactors& f, std::size_t upto) {
  return detail::reconstruct_f64(f, upto).cast<float>();
}

/// ||W - reconstruct(f, upto)||_F, evaluated in double.
template <typename T>
double approximation_error(const Matrix<T>& w, const GateFactors& f, std::size_t upto) {
  if (w.rows() != f.rows || w.cols() != f.cols) throw ShapeError("approximation_error: shape mismatch");
  return frobenius_distance(w, detail::reconstruct_f64(f, upto));
}

}  // namespace alstm
