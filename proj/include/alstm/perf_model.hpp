#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "alstm/error.hpp"

namespace alstm {

/// Operations outside the gates per output row (activations, cell and
/// output updates).
inline constexpr double kRestOpsPerRow = 37.0;

/// Bytes per transferred scalar (float32).
inline constexpr double kBytesPerWord = 4.0;

/// Abstract multiplier count of a (tr, tc) design:
/// gate_units * (tc + per_gate_row_arrays * tr) + shared_row_arrays * tr.
struct ResourceModel {
  std::uint64_t gate_units = 4;
  std::uint64_t per_gate_row_arrays = 3;
  std::uint64_t shared_row_arrays = 1;
};

struct PlatformSpec {
  double peak_gops = 0.0;                  // compute roof, 1e9 ops/s
  double mem_bandwidth_bytes_per_s = 0.0;  // memory roof slope
  double clock_hz = 0.0;
  std::uint64_t onchip_bytes = 0;
  std::uint64_t multiplier_budget = 0;
  double rest_ops_per_row = kRestOpsPerRow;
  ResourceModel resources{};

  void validate() const {
    if (!(peak_gops > 0.0) || !(mem_bandwidth_bytes_per_s > 0.0) || !(clock_hz > 0.0) || onchip_bytes == 0 ||
        multiplier_budget == 0) {
      throw ConfigError("PlatformSpec: all fields must be positive");
    }
  }
};

struct PerfEstimate {
  double workload_ops = 0.0;
  double ii_cycles = 0.0;
  double perf_ops_per_cycle = 0.0;
  double bytes_per_timestep = 0.0;
};

struct DesignPoint {
  std::size_t nz = 0;
  std::size_t tr = 0;
  std::size_t tc = 0;
  std::size_t n_steps = 0;
  double ii_cycles = 0.0;
  double perf_ops_per_s = 0.0;
  double ctc_ops_per_byte = 0.0;
  double attainable_ops_per_s = 0.0;
  bool feasible = false;
};

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

namespace detail {
inline void require_positive(std::size_t v, const char* name) {
  if (v == 0) throw ConfigError(std::string(name) + " must be positive");
}
}  // namespace detail

/// Operations per time step: 4 * n_steps * (2nz + 2R + 1) + rest * R.
inline double workload_ops(std::size_t r, std::size_t nz, std::size_t n_steps, double rest = kRestOpsPerRow) {
  detail::require_positive(r, "R");
  detail::require_positive(nz, "nz");
  detail::require_positive(n_steps, "n_steps");
  const double rd = static_cast<double>(r), nzd = static_cast<double>(nz), nd = static_cast<double>(n_steps);
  return 4.0 * nd * (2.0 * nzd + 2.0 * rd + 1.0) + rest * rd;
}

/// Cycles between successive time steps: the slower of the gate stage
/// (n_steps * max(ceil(R/tr), ceil(nz/tc))) and the rest (rest * ceil(R/tr)).
inline double initiation_interval(std::size_t r, std::size_t nz, std::size_t n_steps, std::size_t tr, std::size_t tc,
                                  double rest = kRestOpsPerRow) {
  detail::require_positive(r, "R");
  detail::require_positive(nz, "nz");
  detail::require_positive(n_steps, "n_steps");
  if (tr == 0 || tc == 0) throw ConfigError("tile sizes must be positive");
  if (tr > r) throw ConfigError("tr must not exceed R");
  if (tc > nz) throw ConfigError("tc must not exceed nz");
  const auto row_tiles = static_cast<double>(ceil_div(r, tr));
  const auto col_tiles = static_cast<double>(ceil_div(nz, tc));
  return std::max(static_cast<double>(n_steps) * std::max(row_tiles, col_tiles), rest * row_tiles);
}

/// Off-chip bytes per time step: every term's sigma, u and sparse v of each
/// gate, plus write-back of h and c. x̃ stays on chip.
inline double memory_bytes(std::size_t r, std::size_t nz, std::size_t n_steps) {
  const double rd = static_cast<double>(r), nzd = static_cast<double>(nz), nd = static_cast<double>(n_steps);
  return kBytesPerWord * (4.0 * nd * (nzd + rd + 1.0) + 2.0 * rd);
}

/// Computation-to-communication ratio (operational intensity), ops/byte.
inline double ctc(std::size_t r, std::size_t nz, std::size_t n_steps, double rest = kRestOpsPerRow) {
  return workload_ops(r, nz, n_steps, rest) / memory_bytes(r, nz, n_steps);
}

inline PerfEstimate estimate(std::size_t r, std::size_t nz, std::size_t n_steps, std::size_t tr, std::size_t tc,
                             double rest = kRestOpsPerRow) {
  PerfEstimate e;
  e.workload_ops = workload_ops(r, nz, n_steps, rest);
  e.ii_cycles = initiation_interval(r, nz, n_steps, tr, tc, rest);
  e.perf_ops_per_cycle = e.workload_ops / e.ii_cycles;
  e.bytes_per_timestep = memory_bytes(r, nz, n_steps);
  return e;
}

/// Roofline: min(modelled throughput, compute roof, CTC x bandwidth).
inline double attainable(double perf_ops_per_s, double ctc_ops_per_byte, const PlatformSpec& p) {
  return std::min({perf_ops_per_s, p.peak_gops * 1e9, ctc_ops_per_byte * p.mem_bandwidth_bytes_per_s});
}

inline std::uint64_t multiplier_usage(std::size_t tr, std::size_t tc, const ResourceModel& rm = {}) {
  return rm.gate_units * (tc + rm.per_gate_row_arrays * tr) + rm.shared_row_arrays * tr;
}

/// Multipliers fit the budget and x̃ (C floats) fits on chip.
inline bool feasible(const DesignPoint& d, std::size_t /*r*/, std::size_t c, const PlatformSpec& p) {
  return multiplier_usage(d.tr, d.tc, p.resources) <= p.multiplier_budget &&
         static_cast<std::uint64_t>(kBytesPerWord) * c <= p.onchip_bytes;
}

inline double latency_seconds(double ii_cycles, const PlatformSpec& p) {
  if (!(ii_cycles > 0.0)) throw ConfigError("latency_seconds: cycle count must be positive");
  if (!(p.clock_hz > 0.0)) throw ConfigError("latency_seconds: clock must be positive");
  return ii_cycles / p.clock_hz;
}

/// Evaluates one (nz, tr, tc) design of the factored architecture on p.
inline DesignPoint evaluate_design(const PlatformSpec& p, std::size_t r, std::size_t c, std::size_t nz,
                                   std::size_t n_steps, std::size_t tr, std::size_t tc) {
  const auto e = estimate(r, nz, n_steps, tr, tc, p.rest_ops_per_row);
  DesignPoint d;
  d.nz = nz;
  d.tr = tr;
  d.tc = tc;
  d.n_steps = n_steps;
  d.ii_cycles = e.ii_cycles;
  d.perf_ops_per_s = e.perf_ops_per_cycle * p.clock_hz;
  d.ctc_ops_per_byte = e.workload_ops / e.bytes_per_timestep;
  d.attainable_ops_per_s = attainable(d.perf_ops_per_s, d.ctc_ops_per_byte, p);
  d.feasible = feasible(d, r, c, p);
  return d;
}

// ---------------------------------------------------------------------------
// Baseline: four dense gate units doing tiled matrix-vector products.
//   workload = 4 * 2RC + rest * R
//   bytes    = 4 * (4RC + C + 2R)
//   II       = max(ceil(R/tr) * ceil(C/tc), rest * ceil(R/tr))
// With n_tiles_done = k < ceil(R/tr), only the first min(k*tr, R) output rows
// are produced: II = max(k * ceil(C/tc), rest * k) and the workload and
// traffic shrink to those rows.
// ---------------------------------------------------------------------------

inline PerfEstimate baseline_estimate(std::size_t r, std::size_t c, std::size_t tr, std::size_t tc,
                                      std::optional<std::size_t> n_tiles_done = std::nullopt,
                                      double rest = kRestOpsPerRow) {
  detail::require_positive(r, "R");
  detail::require_positive(c, "C");
  if (tr == 0 || tc == 0) throw ConfigError("tile sizes must be positive");
  if (tr > r || tc > c) throw ConfigError("baseline tiles must not exceed the matrix dimensions");
  const std::uint64_t row_tiles = ceil_div(r, tr);
  const std::uint64_t col_tiles = ceil_div(c, tc);
  const std::uint64_t k = n_tiles_done.value_or(row_tiles);
  if (k < 1 || k > row_tiles) {
    throw ConfigError("n_tiles_done must be in [1, " + std::to_string(row_tiles) + "]");
  }
  const double rows = static_cast<double>(std::min<std::uint64_t>(k * tr, r));
  const double cd = static_cast<double>(c);
  PerfEstimate e;
  e.workload_ops = 4.0 * 2.0 * rows * cd + rest * rows;
  e.bytes_per_timestep = kBytesPerWord * (4.0 * rows * cd + cd + 2.0 * rows);
  e.ii_cycles = std::max(static_cast<double>(k * col_tiles), rest * static_cast<double>(k));
  e.perf_ops_per_cycle = e.workload_ops / e.ii_cycles;
  return e;
}

/// Baseline multipliers: a tr x tc dot array per gate plus the shared row arrays.
inline std::uint64_t baseline_multiplier_usage(std::size_t tr, std::size_t tc, const ResourceModel& rm = {}) {
  return rm.gate_units * tr * tc + (rm.per_gate_row_arrays + rm.shared_row_arrays) * tr;
}

inline DesignPoint evaluate_baseline(const PlatformSpec& p, std::size_t r, std::size_t c, std::size_t tr,
                                     std::size_t tc) {
  const auto e = baseline_estimate(r, c, tr, tc, std::nullopt, p.rest_ops_per_row);
  DesignPoint d;
  d.nz = c;
  d.tr = tr;
  d.tc = tc;
  d.n_steps = 1;
  d.ii_cycles = e.ii_cycles;
  d.perf_ops_per_s = e.perf_ops_per_cycle * p.clock_hz;
  d.ctc_ops_per_byte = e.workload_ops / e.bytes_per_timestep;
  d.attainable_ops_per_s = attainable(d.perf_ops_per_s, d.ctc_ops_per_byte, p);
  d.feasible = baseline_multiplier_usage(tr, tc, p.resources) <= p.multiplier_budget &&
               static_cast<std::uint64_t>(kBytesPerWord) * c <= p.onchip_bytes;
  return d;
}

// ---------------------------------------------------------------------------
// Design-space exploration
// ---------------------------------------------------------------------------

/// Per-dimension tile values enumerated when thinning is active.
inline constexpr std::size_t kMaxTileValuesPerDim = 64;

/// Tile sizes tried along one dimension of extent `limit`.
///
/// Every value 1..limit when exhaustive or limit <= 64. Otherwise at most 64
/// values: all powers of two up to limit, limit itself, and a geometric
/// sequence filling the rest.
inline std::vector<std::size_t> tile_candidates(std::size_t limit, bool exhaustive = false) {
  std::vector<std::size_t> out;
  if (exhaustive || limit <= kMaxTileValuesPerDim) {
    for (std::size_t t = 1; t <= limit; ++t) out.push_back(t);
    return out;
  }
  std::set<std::size_t> base;
  for (std::size_t t = 1; t <= limit; t *= 2) base.insert(t);
  base.insert(limit);
  std::set<std::size_t> best = base;
  for (std::size_t k = kMaxTileValuesPerDim; k >= 2; --k) {
    std::set<std::size_t> s = base;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = static_cast<double>(i) / static_cast<double>(k - 1);
      s.insert(static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(limit), e))));
    }
    if (s.size() <= kMaxTileValuesPerDim) {
      best = std::move(s);
      break;
    }
  }
  return {best.begin(), best.end()};
}

/// True when a should be preferred over b: higher attainable performance,
/// then fewer tile lanes (tr * tc), then smaller tr.
inline bool better_design(const DesignPoint& a, const DesignPoint& b) {
  if (a.attainable_ops_per_s != b.attainable_ops_per_s) return a.attainable_ops_per_s > b.attainable_ops_per_s;
  const auto area_a = a.tr * a.tc, area_b = b.tr * b.tc;
  if (area_a != area_b) return area_a < area_b;
  return a.tr < b.tr;
}

struct DseOptions {
  bool exhaustive = false;
  bool keep_space = false;  // record every evaluated point
};

struct NzChoice {
  std::size_t nz = 0;
  std::optional<DesignPoint> best;  // empty: no feasible design for this nz
};

struct DseResult {
  std::vector<NzChoice> choices;
  std::vector<DesignPoint> space;
};

/// Best feasible (tr, tc) per nz for the factored architecture.
inline DseResult dse(const PlatformSpec& p, std::size_t r, std::size_t c, const std::vector<std::size_t>& nz_list,
                     std::size_t n_steps = 1, const DseOptions& opt = {}) {
  p.validate();
  if (nz_list.empty()) throw ConfigError("dse: nz list is empty");
  DseResult out;
  const auto trs = tile_candidates(r, opt.exhaustive);
  for (std::size_t nz : nz_list) {
    if (nz < 1 || nz > c) throw ConfigError("dse: nz " + std::to_string(nz) + " outside [1, C]");
    NzChoice choice{nz, std::nullopt};
    for (std::size_t tc : tile_candidates(nz, opt.exhaustive)) {
      for (std::size_t tr : trs) {
        const auto d = evaluate_design(p, r, c, nz, n_steps, tr, tc);
        if (opt.keep_space) out.space.push_back(d);
        if (!d.feasible) continue;
        if (!choice.best || better_design(d, *choice.best)) choice.best = d;
      }
    }
    out.choices.push_back(choice);
  }
  return out;
}

/// Best feasible (tr, tc) for the dense baseline architecture.
inline std::optional<DesignPoint> baseline_dse(const PlatformSpec& p, std::size_t r, std::size_t c,
                                               const DseOptions& opt = {}) {
  p.validate();
  std::optional<DesignPoint> best;
  const auto trs = tile_candidates(r, opt.exhaustive);
  for (std::size_t tc : tile_candidates(c, opt.exhaustive)) {
    for (std::size_t tr : trs) {
      const auto d = evaluate_baseline(p, r, c, tr, tc);
      if (!d.feasible) continue;
      if (!best || better_design(d, *best)) best = d;
    }
  }
  return best;
}

}  // namespace alstm
