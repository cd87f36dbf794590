#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "alstm/error.hpp"

namespace alstm {

inline constexpr std::size_t kMaxBleuOrder = 4;

struct BleuScore {
  double score = 0.0;
  /// Modified precision for n = 1..4; orders above the effective order are 0.
  std::array<double, kMaxBleuOrder> ngram_precisions{};
  double brevity_penalty = 0.0;
  std::size_t orders = 0;  // effective max n
};

struct BleuOptions {
  std::size_t max_n = kMaxBleuOrder;
  /// Add-one smoothing of the n >= 2 precisions. Off: any zero precision gives 0.
  bool smoothing = false;
};

/// Clipped n-gram statistics of one (reference, candidate) pair.
struct BleuStats {
  std::array<std::size_t, kMaxBleuOrder> matches{};
  std::array<std::size_t, kMaxBleuOrder> totals{};
  std::size_t ref_len = 0;
  std::size_t cand_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < kMaxBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    ref_len += o.ref_len;
    cand_len += o.cand_len;
    return *this;
  }
};

namespace detail {

template <typename T>
std::map<std::vector<T>, std::size_t> ngram_counts(std::span<const T> seq, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[std::vector<T>(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

inline BleuScore score_from_stats(const BleuStats& st, const BleuOptions& opt) {
  if (st.ref_len == 0) throw InputError("bleu: empty reference");
  if (opt.max_n < 1) throw InputError("bleu: max_n must be >= 1");
  BleuScore out;
  out.orders = std::min({opt.max_n, kMaxBleuOrder, st.ref_len});
  if (st.cand_len == 0) return out;

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < out.orders; ++n) {
    double p = st.totals[n] ? static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]) : 0.0;
    if (opt.smoothing && n > 0) p = static_cast<double>(st.matches[n] + 1) / static_cast<double>(st.totals[n] + 1);
    out.ngram_precisions[n] = p;
    if (p <= 0.0)
      zero = true;
    else
      log_sum += std::log(p);
  }
  const double r = static_cast<double>(st.ref_len), c = static_cast<double>(st.cand_len);
  out.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  out.score = zero ? 0.0 : out.brevity_penalty * std::exp(log_sum / static_cast<double>(out.orders));
  out.score = std::clamp(out.score, 0.0, 1.0);
  return out;
}

}  // namespace detail

template <typename T>
BleuStats bleu_stats(std::span<const T> reference, std::span<const T> candidate) {
  BleuStats st;
  st.ref_len = reference.size();
  st.cand_len = candidate.size();
  for (std::size_t n = 1; n <= kMaxBleuOrder; ++n) {
    const auto ref = detail::ngram_counts(reference, n);
    const auto cand = detail::ngram_counts(candidate, n);
    std::size_t match = 0;
    for (const auto& [gram, count] : cand) {
      auto it = ref.find(gram);
      if (it != ref.end()) match += std::min(count, it->second);
    }
    st.matches[n - 1] = match;
    st.totals[n - 1] = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  }
  return st;
}

/// Sentence BLEU with clipped n-gram precision and brevity penalty.
///
/// The order is lowered to the reference length when the reference is
/// shorter than max_n. An empty candidate scores 0; an empty reference is an
/// InputError.
template <typename T>
BleuScore bleu(std::span<const T> reference, std::span<const T> candidate, const BleuOptions& opt = {}) {
  if (reference.empty()) throw InputError("bleu: empty reference");
  return detail::score_from_stats(bleu_stats(reference, candidate), opt);
}

template <typename T>
BleuScore bleu(const std::vector<T>& reference, const std::vector<T>& candidate, const BleuOptions& opt = {}) {
  return bleu(std::span<const T>(reference), std::span<const T>(candidate), opt);
}

/// Corpus BLEU: statistics summed over all pairs before scoring.
inline BleuScore corpus_bleu(const std::vector<BleuStats>& items, const BleuOptions& opt = {}) {
  BleuStats total;
  for (const auto& s : items) total += s;
  return detail::score_from_stats(total, opt);
}

}  // namespace alstm
