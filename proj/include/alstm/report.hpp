#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "alstm/eval.hpp"
#include "alstm/perf_model.hpp"
#include "json.hpp"

namespace alstm {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kToolName = "alstm";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Decimal string with 9 significant digits; "inf"/"nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

/// RFC-4180 field quoting.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

/// Accumulates RFC-4180 rows terminated by CRLF.
class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += ',';
      out_ += csv_field(fields[i]);
    }
    out_ += "\r\n";
  }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Everything that determines a run's output. Its hash tags every artifact.
struct RunManifest {
  ordered_json data;

  RunManifest(std::string_view command, ordered_json inputs) {
    data["tool"] = kToolName;
    data["version"] = kToolVersion;
    data["command"] = command;
    data["inputs"] = std::move(inputs);
  }

  std::string hash() const { return fnv1a_hex(data.dump()); }

  ordered_json to_json() const {
    ordered_json j = data;
    j["manifest_hash"] = hash();
    return j;
  }
};

/// JSON artifact. `body` must be reproducible from the manifest; the
/// wall-clock timestamp lives outside it.
inline std::string json_artifact(const RunManifest& m, ordered_json body, std::string_view generated_at) {
  ordered_json j;
  j["manifest_hash"] = m.hash();
  j["manifest"] = m.data;
  j["body"] = std::move(body);
  j["generated_at"] = generated_at;
  return j.dump(2) + "\n";
}

/// CSV artifact: a `#manifest_hash=` comment line followed by the table.
inline std::string csv_artifact(const RunManifest& m, const CsvWriter& table) {
  return "#manifest_hash=" + m.hash() + "\r\n" + table.str();
}

// ---------------------------------------------------------------------------
// Tables shared by the CLI
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& tradeoff_csv_header() {
  static const std::vector<std::string> h = {"nz", "n_steps", "latency_s", "bleu_mean", "bleu_corpus"};
  return h;
}

/// One CSV row per (nz, n_steps) cell. latency_s is empty when no design is
/// known for that nz.
inline CsvWriter accuracy_csv(const AccuracyTable& table, const std::vector<std::optional<DesignPoint>>& designs,
                              const std::vector<std::size_t>& nz_list, std::size_t hidden, const PlatformSpec* p,
                              std::size_t seq_len) {
  CsvWriter w;
  w.row(tradeoff_csv_header());
  for (std::size_t i = 0; i < nz_list.size(); ++i) {
    for (std::size_t k = 1; k <= table.n_steps_max; ++k) {
      const auto* cell = table.find(nz_list[i], k);
      if (!cell) continue;
      std::string latency;
      if (p && i < designs.size() && designs[i]) {
        const auto& d = *designs[i];
        latency = format_number(
            sequence_latency(seq_len, initiation_interval(hidden, d.nz, k, d.tr, d.tc, p->rest_ops_per_row), *p));
      }
      w.row({format_number(cell->nz), format_number(k), latency, format_number(cell->bleu_mean),
             format_number(cell->bleu_corpus)});
    }
  }
  return w;
}

inline ordered_json to_json(const DesignPoint& d) {
  ordered_json j;
  j["nz"] = d.nz;
  j["tr"] = d.tr;
  j["tc"] = d.tc;
  j["n_steps"] = d.n_steps;
  j["ii_cycles"] = format_number(d.ii_cycles);
  j["perf_ops_per_s"] = format_number(d.perf_ops_per_s);
  j["ctc_ops_per_byte"] = format_number(d.ctc_ops_per_byte);
  j["attainable_ops_per_s"] = format_number(d.attainable_ops_per_s);
  j["feasible"] = d.feasible;
  return j;
}

inline ordered_json to_json(const TradeoffCurve& c) {
  ordered_json j;
  j["label"] = c.label;
  j["points"] = ordered_json::array();
  for (const auto& p : c.points) {
    ordered_json pj;
    pj["index"] = p.index;
    pj["latency_s"] = format_number(p.latency_s);
    pj["accuracy"] = format_number(p.accuracy);
    j["points"].push_back(pj);
  }
  return j;
}

inline ordered_json to_json(const SwitchingPolicy& s) {
  ordered_json j;
  j["bleu_threshold"] = format_number(s.bleu_threshold);
  j["time_threshold_s"] = format_number(s.time_threshold_s);
  j["below_design"] = s.below_design;
  j["above_design"] = s.above_design;
  j["no_crossover"] = s.no_crossover;
  return j;
}

inline ordered_json to_json(const AccuracyCell& c) {
  ordered_json j;
  j["nz"] = c.nz;
  j["n_steps"] = c.n_steps;
  j["bleu_mean"] = format_number(c.bleu_mean);
  j["bleu_corpus"] = format_number(c.bleu_corpus);
  j["item_scores"] = ordered_json::array();
  for (double s : c.item_scores) j["item_scores"].push_back(format_number(s));
  return j;
}

inline ordered_json to_json(const EvalSetParams& p) {
  ordered_json j;
  j["vocab"] = p.vocab;
  j["items"] = p.items;
  j["min_prefix"] = p.min_prefix;
  j["max_prefix"] = p.max_prefix;
  j["max_len"] = p.max_len;
  j["embed_scale"] = format_number(p.embed_scale);
  j["proj_scale"] = format_number(p.proj_scale);
  j["seed"] = p.seed;
  return j;
}

}  // namespace alstm
