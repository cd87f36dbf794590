#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alstm/bleu.hpp"
#include "alstm/error.hpp"
#include "alstm/lstm.hpp"
#include "alstm/perf_model.hpp"
#include "alstm/random.hpp"

namespace alstm {

/// Synthetic decoding task: a reference model plus the vocabulary matrices
/// and token prefixes it is evaluated on.
struct EvalSet {
  DenseMatrix embed;  // V x input_size
  DenseMatrix proj;   // V x R
  std::vector<std::vector<Token>> prefixes;
  std::size_t max_len = 0;
};

/// Generator parameters, kept so reports can state how the set was built.
struct EvalSetParams {
  std::size_t vocab = 32;
  std::size_t items = 8;
  std::size_t min_prefix = 1;
  std::size_t max_prefix = 3;
  std::size_t max_len = 12;
  double embed_scale = 1.0;
  double proj_scale = 4.0;
  std::uint64_t seed = 0;
};

/// Prefix tokens are drawn from [1, vocab) so no prefix contains the end token.
inline EvalSet make_eval_set(std::size_t input_size, std::size_t hidden, const EvalSetParams& p) {
  if (p.vocab < 2) throw InputError("eval set: vocabulary must have at least 2 tokens");
  if (p.items == 0) throw InputError("eval set: item count must be positive");
  if (p.min_prefix < 1 || p.max_prefix < p.min_prefix) throw InputError("eval set: bad prefix length range");
  Rng rng(p.seed);
  EvalSet set;
  set.embed = DenseMatrix::random(p.vocab, input_size, rng, p.embed_scale);
  set.proj = DenseMatrix::random(p.vocab, hidden, rng, p.proj_scale);
  set.max_len = p.max_len;
  for (std::size_t i = 0; i < p.items; ++i) {
    const std::size_t len = p.min_prefix + rng.below(p.max_prefix - p.min_prefix + 1);
    std::vector<Token> prefix(len);
    for (auto& t : prefix) t = static_cast<Token>(1 + rng.below(p.vocab - 1));
    set.prefixes.push_back(std::move(prefix));
  }
  return set;
}

/// Score of one decode against its reference decode. A reference may be
/// empty when the model ends immediately; the candidate then scores 1 if it
/// is empty too and 0 otherwise.
inline double item_bleu(const std::vector<Token>& ref, const std::vector<Token>& cand, const BleuOptions& opt) {
  if (ref.empty()) return cand.empty() ? 1.0 : 0.0;
  return bleu(ref, cand, opt).score;
}

struct AccuracyCell {
  std::size_t nz = 0;
  std::size_t n_steps = 0;  // terms evaluated (prefix length)
  double bleu_mean = 0.0;
  double bleu_corpus = 0.0;
  std::vector<double> item_scores;
};

struct AccuracyTable {
  std::size_t n_steps_max = 0;
  std::vector<std::vector<Token>> references;
  std::vector<AccuracyCell> cells;  // ordered by (nz as given, n_steps ascending)

  const AccuracyCell* find(std::size_t nz, std::size_t n_steps) const {
    for (const auto& c : cells)
      if (c.nz == nz && c.n_steps == n_steps) return &c;
    return nullptr;
  }
};

/// Reference decodes of every prefix with the dense model.
inline std::vector<std::vector<Token>> reference_decodes(const LstmModel& m, const EvalSet& set) {
  std::vector<std::vector<Token>> out;
  out.reserve(set.prefixes.size());
  for (const auto& p : set.prefixes) out.push_back(greedy_decode(m, set.embed, set.proj, std::span<const Token>(p), set.max_len));
  return out;
}

/// Scores a list of candidate decodes against the references.
inline AccuracyCell score_decodes(const std::vector<std::vector<Token>>& refs,
                                  const std::vector<std::vector<Token>>& cands, const BleuOptions& opt) {
  AccuracyCell cell;
  std::vector<BleuStats> stats;
  double sum = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double s = item_bleu(refs[i], cands[i], opt);
    cell.item_scores.push_back(s);
    sum += s;
    stats.push_back(bleu_stats(std::span<const Token>(refs[i]), std::span<const Token>(cands[i])));
  }
  cell.bleu_mean = refs.empty() ? 0.0 : sum / static_cast<double>(refs.size());
  BleuStats total;
  for (const auto& s : stats) total += s;
  cell.bleu_corpus = total.ref_len == 0 ? (total.cand_len == 0 ? 1.0 : 0.0) : corpus_bleu(stats, opt).score;
  return cell;
}

/// Mean and corpus BLEU of the factored model for every (nz, upto) with
/// upto in 1..n_steps_max, against the dense model's own decodes.
///
/// Each nz is decomposed once with n_steps_max terms; every upto evaluates a
/// prefix of those terms.
inline AccuracyTable evaluate_grid(const LstmModel& ref_model, const EvalSet& set, const std::vector<std::size_t>& nz_list,
                                   std::size_t n_steps_max, const ApproxConfig& base_cfg = {},
                                   const BleuOptions& bleu_opt = {}) {
  if (set.prefixes.empty()) throw InputError("evaluate_grid: empty evaluation set");
  if (nz_list.empty()) throw InputError("evaluate_grid: empty nz list");
  if (n_steps_max < 1) throw ConfigError("evaluate_grid: n_steps_max must be >= 1");
  AccuracyTable table;
  table.n_steps_max = n_steps_max;
  table.references = reference_decodes(ref_model, set);
  for (std::size_t nz : nz_list) {
    ApproxConfig cfg = base_cfg;
    cfg.nz = nz;
    cfg.n_steps = n_steps_max;
    const auto approx = make_approx_model(ref_model, cfg);
    for (std::size_t upto = 1; upto <= n_steps_max; ++upto) {
      const std::size_t terms = std::min(upto, approx.term_count());
      std::vector<std::vector<Token>> cands;
      for (const auto& p : set.prefixes) {
        cands.push_back(greedy_decode(approx, set.embed, set.proj, std::span<const Token>(p), set.max_len, terms));
      }
      auto cell = score_decodes(table.references, cands, bleu_opt);
      cell.nz = nz;
      cell.n_steps = upto;
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

/// BLEU of the row-tiled baseline's intermediate output after k = 1..ceil(R/tr)
/// row tiles. Cell nz is C and n_steps holds k.
inline std::vector<AccuracyCell> evaluate_baseline_tiles(const LstmModel& m, const EvalSet& set, std::size_t tr,
                                                         const BleuOptions& bleu_opt = {}) {
  if (set.prefixes.empty()) throw InputError("evaluate_baseline_tiles: empty evaluation set");
  if (tr < 1 || tr > m.hidden_size) throw ConfigError("evaluate_baseline_tiles: tr outside [1, R]");
  const auto refs = reference_decodes(m, set);
  const std::size_t tiles = ceil_div(m.hidden_size, tr);
  std::vector<AccuracyCell> out;
  for (std::size_t k = 1; k <= tiles; ++k) {
    const std::size_t rows = std::min(k * tr, m.hidden_size);
    auto step = [&m, rows](const DenseVector& x, const LstmState& s) { return lstm_step_dense_partial(m, x, s, rows); };
    std::vector<std::vector<Token>> cands;
    for (const auto& p : set.prefixes) {
      cands.push_back(greedy_decode(step, m.hidden_size, set.embed, set.proj, std::span<const Token>(p), set.max_len));
    }
    auto cell = score_decodes(refs, cands, bleu_opt);
    cell.nz = m.cols();
    cell.n_steps = k;
    out.push_back(std::move(cell));
  }
  return out;
}

struct TradeoffPoint {
  double latency_s = 0.0;
  double accuracy = 0.0;
  std::size_t index = 0;  // refinement terms, or row tiles for the baseline
};

/// Accuracy against modelled latency; latencies strictly increase.
struct TradeoffCurve {
  std::string label;
  std::vector<TradeoffPoint> points;
};

namespace detail {
/// Keeps only the last point of each run of equal latency: with the same
/// time budget the design can always afford the larger index.
inline void collapse_equal_latency(std::vector<TradeoffPoint>& pts) {
  std::vector<TradeoffPoint> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back().latency_s == p.latency_s)
      out.back() = p;
    else
      out.push_back(p);
  }
  pts = std::move(out);
}
}  // namespace detail

/// Latency of seq_len time steps at `ii_cycles` per step.
inline double sequence_latency(std::size_t seq_len, double ii_cycles, const PlatformSpec& p) {
  return static_cast<double>(seq_len) * latency_seconds(ii_cycles, p);
}

/// Curve of the factored design: point k = (seq_len * II(n_steps = k) / clock,
/// mean BLEU at (nz, k)).
inline TradeoffCurve tradeoff_curve(const AccuracyTable& table, const DesignPoint& design, std::size_t hidden,
                                    const PlatformSpec& p, std::size_t seq_len, bool use_corpus = false) {
  if (seq_len == 0) throw InputError("tradeoff_curve: seq_len must be positive");
  TradeoffCurve curve;
  curve.label = "approx_nz" + std::to_string(design.nz);
  for (std::size_t k = 1; k <= table.n_steps_max; ++k) {
    const auto* cell = table.find(design.nz, k);
    if (!cell) {
      throw InputError("tradeoff_curve: table has no entry for nz=" + std::to_string(design.nz) +
                       ", n_steps=" + std::to_string(k));
    }
    const double ii = initiation_interval(hidden, design.nz, k, design.tr, design.tc, p.rest_ops_per_row);
    curve.points.push_back({sequence_latency(seq_len, ii, p), use_corpus ? cell->bleu_corpus : cell->bleu_mean, k});
  }
  detail::collapse_equal_latency(curve.points);
  return curve;
}

/// Curve of the baseline design from its per-tile partial outputs.
inline TradeoffCurve baseline_curve(const std::vector<AccuracyCell>& tiles, const DesignPoint& design,
                                    std::size_t hidden, std::size_t cols, const PlatformSpec& p, std::size_t seq_len,
                                    bool use_corpus = false) {
  if (seq_len == 0) throw InputError("baseline_curve: seq_len must be positive");
  if (tiles.empty()) throw InputError("baseline_curve: no tile accuracies");
  TradeoffCurve curve;
  curve.label = "baseline";
  for (const auto& cell : tiles) {
    const auto e = baseline_estimate(hidden, cols, design.tr, design.tc, cell.n_steps, p.rest_ops_per_row);
    curve.points.push_back(
        {sequence_latency(seq_len, e.ii_cycles, p), use_corpus ? cell.bleu_corpus : cell.bleu_mean, cell.n_steps});
  }
  detail::collapse_equal_latency(curve.points);
  return curve;
}

/// Runtime rule choosing between the approximate and the baseline design.
struct SwitchingPolicy {
  double bleu_threshold = 0.0;
  double time_threshold_s = std::numeric_limits<double>::infinity();
  std::string below_design;  // used for budgets under time_threshold_s
  std::string above_design;
  bool no_crossover = true;

  const std::string& choose(double time_budget_s) const {
    return time_budget_s < time_threshold_s ? below_design : above_design;
  }
};

/// Accuracy available by time t: the last point with latency <= t, or 0.
inline double accuracy_at(const TradeoffCurve& c, double t) {
  double acc = 0.0;
  for (const auto& p : c.points) {
    if (p.latency_s > t) break;
    acc = p.accuracy;
  }
  return acc;
}

/// Earliest time at which the baseline has produced an output whose accuracy
/// is non-zero and at least the approximate design's accuracy at that time.
/// Below it the approximate design is chosen, from it onwards the baseline.
/// When the baseline never catches up the threshold is infinite and
/// no_crossover is set.
inline SwitchingPolicy select_switching_policy(const TradeoffCurve& approx, const TradeoffCurve& baseline) {
  if (approx.points.empty() || baseline.points.empty()) throw InputError("select_switching_policy: empty curve");
  SwitchingPolicy policy;
  policy.below_design = approx.label;
  policy.above_design = baseline.label;
  std::vector<double> times;
  for (const auto& p : approx.points) times.push_back(p.latency_s);
  for (const auto& p : baseline.points) times.push_back(p.latency_s);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (double t : times) {
    const double a = accuracy_at(approx, t);
    const double b = accuracy_at(baseline, t);
    if (b > 0.0 && b >= a) {
      policy.time_threshold_s = t;
      policy.bleu_threshold = b;
      policy.no_crossover = false;
      return policy;
    }
  }
  double plateau = 0.0;
  for (const auto& p : approx.points) plateau = std::max(plateau, p.accuracy);
  policy.bleu_threshold = plateau;
  return policy;
}

}  // namespace alstm
