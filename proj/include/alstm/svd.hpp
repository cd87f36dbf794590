#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "alstm/error.hpp"
#include "alstm/random.hpp"
#include "alstm/tensor.hpp"

namespace alstm {

/// Dominant singular triple (sigma, u, v) of a matrix, rounded to float32.
struct Rank1Triple {
  float sigma = 0.0f;
  DenseVector u;  // length rows, unit norm
  DenseVector v;  // length cols, unit norm
  /// ||M v - sigma u||_2 of the double-precision solution, before rounding.
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Power iteration hit max_iters without meeting the residual contract.
class ConvergeError : public Error {
 public:
  ConvergeError(const std::string& what, Rank1Triple last) : Error(what), last_(std::move(last)) {}
  const Rank1Triple& last_iterate() const noexcept { return last_; }

 private:
  Rank1Triple last_;
};

struct SvdOptions {
  double tol = 1e-10;
  std::size_t max_iters = 10'000;
  std::uint64_t seed = 0;
};

namespace detail {

/// Dot product with four interleaved double accumulators. The summation
/// order is fixed, so results are reproducible, but differ in the last bits
/// from the sequential dot used by matvec.
inline double dot4(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

/// Flips (u, v) jointly so the largest-magnitude entry of u is non-negative.
/// The first index wins among entries of equal magnitude.
template <typename T>
void canonicalize_signs(std::span<T> u, std::span<T> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs(u[i]) > std::abs(u[best])) best = i;
  }
  if (u.empty() || u[best] >= T{0}) return;
  for (auto& x : u) x = -x;
  for (auto& x : v) x = -x;
}

/// Double-precision dominant triple used by both rank1_svd and the
/// approximation engine, which needs v to be derived from u exactly.
struct DominantTriple {
  double sigma = 0.0;
  std::vector<double> u;
  std::vector<double> v;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Power iteration on the row Gram matrix G = M M^T.
///
/// The iterate is u; on exit v = M^T u / ||M^T u|| and sigma = ||M^T u||, so
/// u^T M = sigma v^T holds to rounding for whatever u the iteration reached.
/// Converged when ||M v - sigma u|| <= tol * sigma, or when it falls below the
/// double-precision noise floor of G.
inline DominantTriple dominant_triple(const Matrix<double>& m, const SvdOptions& opt) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (frobenius_norm(m) == 0.0) throw ZeroMatrixError("rank1_svd: matrix is all zeros");
  if (!(opt.tol > 0.0)) throw ConfigError("rank1_svd: tol must be positive");
  if (opt.max_iters < 1) throw ConfigError("rank1_svd: max_iters must be >= 1");

  // G is symmetric; fill the upper triangle and mirror.
  std::vector<double> g(rows * rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i; j < rows; ++j) {
      const double s = dot4(m.row(i).data(), m.row(j).data(), cols);
      g[i * rows + j] = s;
      g[j * rows + i] = s;
    }
  }
  double g_norm = 0.0;
  for (double x : g) g_norm += x * x;
  g_norm = std::sqrt(g_norm);
  const double noise_floor = 64.0 * DBL_EPSILON * g_norm;

  std::vector<double> x(rows);
  Rng rng(opt.seed);
  for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
  auto normalize = [](std::vector<double>& vec) {
    const double n = norm2(std::span<const double>(vec));
    if (n > 0.0)
      for (auto& e : vec) e /= n;
    return n;
  };
  normalize(x);

  auto gram_times = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t i = 0; i < rows; ++i) {
      out[i] = dot4(g.data() + i * rows, in.data(), rows);
    }
  };

  DominantTriple out;
  std::vector<double> y(rows);
  gram_times(x, y);
  if (norm2(std::span<const double>(y)) == 0.0) {
    // Start vector orthogonal to range(M); restart from the row with largest G diagonal.
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows; ++i)
      if (g[i * rows + i] > g[best * rows + best]) best = i;
    std::fill(x.begin(), x.end(), 0.0);
    x[best] = 1.0;
    gram_times(x, y);
  }

  // Slow convergence (close top singular values) switches the iteration to
  // H = G^(2^s), s growing every kSquarePeriod iterations. The residual is
  // always measured against G itself.
  constexpr std::size_t kSquarePeriod = 128;
  constexpr int kMaxSquarings = 8;
  const bool may_square = rows <= 256;
  std::vector<double> h;
  int squarings = 0;
  auto square_power = [&] {
    const std::vector<double>& base = h.empty() ? g : h;
    std::vector<double> next(rows * rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t k = 0; k < rows; ++k) {
        const double a = base[i * rows + k];
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < rows; ++j) next[i * rows + j] += a * base[k * rows + j];
      }
    }
    double n = 0.0;
    for (double e : next) n += e * e;
    n = std::sqrt(n);
    if (n > 0.0)
      for (auto& e : next) e /= n;
    h = std::move(next);
    ++squarings;
  };
  std::vector<double> z(rows);

  double resid_eig = 0.0;
  double lambda = 0.0;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    lambda = dot(std::span<const double>(x), std::span<const double>(y));
    resid_eig = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = y[i] - lambda * x[i];
      resid_eig += d * d;
    }
    resid_eig = std::sqrt(resid_eig);
    out.iterations = it;
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    // ||M v - sigma u|| = ||G u - lambda u|| / sigma for v = M^T u / sigma.
    const double resid = sigma > 0.0 ? resid_eig / sigma : resid_eig;
    if (resid <= opt.tol * sigma || resid_eig <= noise_floor) {
      out.converged = true;
      break;
    }
    if (it == opt.max_iters) break;
    if (may_square && squarings < kMaxSquarings && it % kSquarePeriod == 0) square_power();
    if (h.empty()) {
      x = y;
    } else {
      for (std::size_t i = 0; i < rows; ++i) {
        z[i] = dot4(h.data() + i * rows, x.data(), rows);
      }
      if (norm2(std::span<const double>(z)) > 0.0) x = z;
    }
    normalize(x);
    gram_times(x, y);
  }

  // v and sigma from u.
  out.u = x;
  out.v.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double ur = out.u[r];
    if (ur == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < cols; ++c) out.v[c] += ur * row[c];
  }
  out.sigma = normalize(out.v);
  out.residual = out.sigma > 0.0 ? resid_eig / out.sigma : resid_eig;
  canonicalize_signs(std::span<double>(out.u), std::span<double>(out.v));
  return out;
}

inline Rank1Triple round_triple(const DominantTriple& t) {
  Rank1Triple r;
  r.sigma = static_cast<float>(t.sigma);
  r.u = DenseVector(t.u.size());
  r.v = DenseVector(t.v.size());
  for (std::size_t i = 0; i < t.u.size(); ++i) r.u[i] = static_cast<float>(t.u[i]);
  for (std::size_t i = 0; i < t.v.size(); ++i) r.v[i] = static_cast<float>(t.v[i]);
  r.residual = t.residual;
  r.iterations = t.iterations;
  return r;
}

}  // namespace detail

/// Dominant singular triple of m by power iteration (see detail::dominant_triple).
///
/// Throws ZeroMatrixError for an all-zero matrix and ConvergeError, carrying
/// the last iterate, when the residual ||M v - sigma u|| is still above
/// max(tol * sigma, 1e-6) after max_iters iterations.
template <typename T>
Rank1Triple rank1_svd(const Matrix<T>& m, const SvdOptions& opt = {}) {
  const auto t = detail::dominant_triple(m.template cast<double>(), opt);
  auto rounded = detail::round_triple(t);
  if (!t.converged && t.residual > std::max(opt.tol * t.sigma, 1e-6)) {
    throw ConvergeError("rank1_svd: no convergence after " + std::to_string(t.iterations) +
                            " iterations (residual " + std::to_string(t.residual) + ")",
                        std::move(rounded));
  }
  return rounded;
}

template <typename T>
Rank1Triple rank1_svd(const Matrix<T>& m, double tol, std::size_t max_iters, std::uint64_t seed) {
  return rank1_svd(m, SvdOptions{tol, max_iters, seed});
}

/// Largest dimension accepted by full_svd_oracle.
inline constexpr std::size_t kOracleMaxDim = 64;

/// All singular triples by one-sided (Hestenes) Jacobi, sigma descending.
///
/// Test-scale reference for rank1_svd and the approximation engine. Singular
/// values at or below max(rows, cols) * eps * sigma_max are dropped, so a
/// zero matrix yields an empty list.
template <typename T>
std::vector<Rank1Triple> full_svd_oracle(const Matrix<T>& m) {
  if (m.rows() > kOracleMaxDim || m.cols() > kOracleMaxDim) {
    throw ScaleError("full_svd_oracle: input is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", limit is " + std::to_string(kOracleMaxDim));
  }
  // Work on a tall matrix A (n_rows >= n_cols); transpose wide inputs.
  const bool transposed = m.rows() < m.cols();
  const std::size_t ar = transposed ? m.cols() : m.rows();
  const std::size_t ac = transposed ? m.rows() : m.cols();
  std::vector<double> a(ar * ac);  // column-major: column j at a[j*ar]
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double x = static_cast<double>(m(i, j));
      if (transposed)
        a[i * ar + j] = x;
      else
        a[j * ar + i] = x;
    }
  }
  std::vector<double> v(ac * ac, 0.0);  // column-major right vectors
  for (std::size_t j = 0; j < ac; ++j) v[j * ac + j] = 1.0;

  auto col = [&](std::vector<double>& buf, std::size_t n, std::size_t j) { return std::span<double>(buf.data() + j * n, n); };

  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < ac; ++p) {
      for (std::size_t q = p + 1; q < ac; ++q) {
        auto ap = col(a, ar, p);
        auto aq = col(a, ar, q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < ar; ++i) {
          alpha += ap[i] * ap[i];
          beta += aq[i] * aq[i];
          gamma += ap[i] * aq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= DBL_EPSILON * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < ar; ++i) {
          const double xp = ap[i], xq = aq[i];
          ap[i] = c * xp - s * xq;
          aq[i] = s * xp + c * xq;
        }
        auto vp = col(v, ac, p);
        auto vq = col(v, ac, q);
        for (std::size_t i = 0; i < ac; ++i) {
          const double xp = vp[i], xq = vq[i];
          vp[i] = c * xp - s * xq;
          vq[i] = s * xp + c * xq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sig(ac);
  for (std::size_t j = 0; j < ac; ++j) sig[j] = norm2(std::span<const double>(col(a, ar, j)));
  std::vector<std::size_t> order(ac);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });
  const double sigma_max = ac ? sig[order[0]] : 0.0;
  const double cutoff = static_cast<double>(std::max(ar, ac)) * DBL_EPSILON * sigma_max;

  std::vector<Rank1Triple> out;
  for (std::size_t j : order) {
    if (sig[j] <= cutoff || sig[j] == 0.0) break;
    std::vector<double> left(ar), right(ac);
    auto aj = col(a, ar, j);
    for (std::size_t i = 0; i < ar; ++i) left[i] = aj[i] / sig[j];
    auto vj = col(v, ac, j);
    std::copy(vj.begin(), vj.end(), right.begin());
    detail::DominantTriple t;
    t.sigma = sig[j];
    t.u = transposed ? right : left;
    t.v = transposed ? left : right;
    detail::canonicalize_signs(std::span<double>(t.u), std::span<double>(t.v));
    out.push_back(detail::round_triple(t));
  }
  return out;
}

}  // namespace alstm
