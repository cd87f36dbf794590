// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "alstm/alstm.hpp"
#include "oracles.hpp"

using namespace alstm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

DenseMatrix random_shape(Rng& rng, std::size_t max_dim) {
  const std::size_t r = 1 + rng.below(max_dim);
  const std::size_t c = 1 + rng.below(max_dim);
  return DenseMatrix::random(r, c, rng);
}

double rank1_residual_sq(const DenseMatrix& m, double sigma, const DenseVector& u, const DenseVector& v) {
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double d = m(r, c) - sigma * u[r] * v[c];
      acc += d * d;
    }
  return acc;
}

// 1. Dominant triple agrees with the Jacobi oracle.
Outcome criterion1() {
  Outcome o;
  Rng rng(101);
  const auto t0 = Clock::now();
  double worst_sigma = 0.0, worst_resid = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto m = i == 0 ? DenseMatrix::random(64, 64, rng) : random_shape(rng, 64);
    const auto t = rank1_svd(m, 1e-10, 10'000, static_cast<std::uint64_t>(i));
    const auto s = full_svd_oracle(m);
    const double s1 = s.at(0).sigma;
    const double rel_sigma = std::abs(t.sigma - s1) / s1;
    const double fro2 = std::pow(frobenius_norm(m), 2);
    const double expect = fro2 - static_cast<double>(t.sigma) * t.sigma;
    const double rel_resid = std::abs(rank1_residual_sq(m, t.sigma, t.u, t.v) - expect) / fro2;
    worst_sigma = std::max(worst_sigma, rel_sigma);
    worst_resid = std::max(worst_resid, rel_resid);
  }
  const double secs = seconds_since(t0);
  if (worst_sigma > 1e-6) o.fail("sigma mismatch " + fmt("%.3g", worst_sigma));
  if (worst_resid > 1e-5) o.fail("residual identity off by " + fmt("%.3g", worst_resid));
  if (secs >= 10.0) o.fail("took " + fmt("%.2f", secs) + " s");
  if (o.pass) {
    o.detail = "200 matrices, max rel sigma err " + fmt("%.2e", worst_sigma) + ", max rel residual err " +
               fmt("%.2e", worst_resid) + ", " + fmt("%.2f", secs) + " s";
  }
  return o;
}

// 2. Error never increases with the term count.
Outcome criterion2() {
  Outcome o;
  Rng rng(202);
  const auto t0 = Clock::now();
  std::size_t checks = 0;
  double worst = -1.0;
  for (int i = 0; i < 100 && o.pass; ++i) {
    const auto w = DenseMatrix::random(64, 128, rng);
    const double wn = frobenius_norm(w);
    for (std::size_t nz : {8, 32, 64, 128}) {
      // A run with n_steps = k is the first k terms of a 32-term run, so one
      // decomposition covers n_steps = 1..32.
      const auto f = decompose(w, ApproxConfig{nz, 32, 1e-10, 10'000, static_cast<std::uint64_t>(i)});
      double prev = wn;
      for (std::size_t k = 1; k <= f.term_count(); ++k) {
        const double e = approximation_error(w, f, k);
        worst = std::max(worst, (e - prev) / wn);
        if (e > prev + 1e-7 * wn) {
          o.fail("matrix " + std::to_string(i) + " nz " + std::to_string(nz) + " error rose at k=" + std::to_string(k));
        }
        prev = e;
        ++checks;
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) o.fail("took " + fmt("%.2f", secs) + " s");
  if (o.pass) {
    o.detail = std::to_string(checks) + " steps non-increasing, max rel rise " + fmt("%.2e", std::max(worst, 0.0)) +
               ", " + fmt("%.2f", secs) + " s";
  }
  return o;
}

// 3. Without pruning the full run recovers W, and each prefix leaves the
// Eckart-Young tail.
Outcome criterion3() {
  Outcome o;
  Rng rng(303);
  double worst_rec = 0.0, worst_tail = 0.0;
  const int cases = 40;
  for (int i = 0; i < cases; ++i) {
    const auto w = i == 0 ? DenseMatrix::random(64, 64, rng) : random_shape(rng, 64);
    const std::size_t n = std::min(w.rows(), w.cols());
    const auto f = decompose(w, ApproxConfig{w.cols(), n, 1e-10, 10'000, static_cast<std::uint64_t>(i)});
    const auto s = full_svd_oracle(w);
    const double wn = frobenius_norm(w), wn2 = wn * wn;
    worst_rec = std::max(worst_rec, approximation_error(w, f, f.term_count()) / wn);
    for (std::size_t r = 1; r <= f.term_count(); ++r) {
      double tail = 0.0;
      for (std::size_t k = r; k < s.size(); ++k) tail += static_cast<double>(s[k].sigma) * s[k].sigma;
      const double e = approximation_error(w, f, r);
      worst_tail = std::max(worst_tail, std::abs(e * e - tail) / wn2);
    }
  }
  if (worst_rec > 1e-4) o.fail("reconstruction error " + fmt("%.3g", worst_rec));
  if (worst_tail > 1e-4) o.fail("Eckart-Young tail mismatch " + fmt("%.3g", worst_tail));
  if (o.pass) {
    o.detail = std::to_string(cases) + " matrices, max rel recon err " + fmt("%.2e", worst_rec) +
               ", max tail err " + fmt("%.2e", worst_tail) + " (relative to ||W||^2)";
  }
  return o;
}

// 4. Magnitude pruning is optimal.
Outcome criterion4() {
  Outcome o;
  Rng rng(404);
  int ok = 0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t nz = 1 + rng.below(n);
    std::vector<float> v(n);
    if (i % 2) {
      for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    } else {
      for (auto& x : v) x = static_cast<float>(static_cast<int>(rng.below(5)) - 2) * 0.5f;  // many ties
    }
    const auto kept = prune_topk(std::span<const float>(v), nz);
    if (kept.size() == nz && oracle::prune_objective(v, kept) == oracle::best_prune_objective(v, nz)) ++ok;
  }
  if (ok != 500) o.fail(std::to_string(ok) + "/500 optimal");
  if (o.pass) o.detail = "500/500 optimal against exhaustive search";
  return o;
}

// 5. Closed-form goldens and exact-arithmetic agreement.
Outcome criterion5() {
  Outcome o;
  if (workload_ops(512, 512, 1) != 27140.0) o.fail("workload golden");
  if (initiation_interval(512, 512, 1, 32, 1) != 592.0) o.fail("II golden");
  if (ctc(512, 512, 1) != 27140.0 / 20496.0) o.fail("CTC golden");
  Rng rng(505);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = static_cast<std::int64_t>(1 + rng.below(8192));
    const auto nz = static_cast<std::int64_t>(1 + rng.below(8192));
    const auto n = static_cast<std::int64_t>(1 + rng.below(128));
    const auto tr = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(r)));
    const auto tc = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(nz)));
    const auto m = oracle::approx_model(r, nz, n, tr, tc);
    const auto ur = static_cast<std::size_t>(r), unz = static_cast<std::size_t>(nz), un = static_cast<std::size_t>(n);
    const bool match = workload_ops(ur, unz, un) == static_cast<double>(m.workload) &&
                       initiation_interval(ur, unz, un, static_cast<std::size_t>(tr), static_cast<std::size_t>(tc)) ==
                           static_cast<double>(m.ii) &&
                       ctc(ur, unz, un) == oracle::ratio(m.workload, m.bytes);
    ok += match;
  }
  if (ok != 1000) o.fail(std::to_string(ok) + "/1000 tuples exact");
  if (o.pass) o.detail = "goldens 27140 / 592 / 27140:20496 exact; 1000/1000 random tuples exact";
  return o;
}

// 6. Roofline dominance, brute-force DSE agreement, calibration direction.
Outcome criterion6() {
  Outcome o;
  Rng rng(606);
  int agree = 0;
  std::size_t emitted = 0;
  for (int i = 0; i < 50; ++i) {
    PlatformSpec p;
    p.peak_gops = rng.uniform(0.5, 300.0);
    p.mem_bandwidth_bytes_per_s = rng.uniform(2e8, 2e10);
    p.clock_hz = rng.uniform(5e7, 4e8);
    p.onchip_bytes = 1 << 16;
    p.multiplier_budget = 17 + rng.below(1500);
    const std::size_t r = 1 + rng.below(100);
    const std::size_t c = r + 1 + rng.below(100);
    const std::size_t nz = 1 + rng.below(std::min<std::size_t>(c, 100));  // grid r * nz <= 10^4
    const std::size_t n = 1 + rng.below(8);
    const auto res = dse(p, r, c, {nz}, n, DseOptions{true, true});
    for (const auto& d : res.space) {
      ++emitted;
      if (d.attainable_ops_per_s > p.peak_gops * 1e9 ||
          d.attainable_ops_per_s > d.ctc_ops_per_byte * p.mem_bandwidth_bytes_per_s) {
        o.fail("roofline violated on platform " + std::to_string(i));
      }
    }
    const auto expect = oracle::brute_force_dse(p, static_cast<std::int64_t>(r), static_cast<std::int64_t>(c),
                                                static_cast<std::int64_t>(nz), static_cast<std::int64_t>(n));
    const auto& got = res.choices[0].best;
    const bool same = got.has_value() == expect.has_value() &&
                      (!got || (got->tr == expect->tr && got->tc == expect->tc &&
                                got->attainable_ops_per_s == expect->attainable));
    agree += same;
  }
  if (agree != 50) o.fail(std::to_string(agree) + "/50 platforms match brute force");

  const auto cal = load_platform(std::string(ALSTM_SOURCE_DIR) + "/config/zc706_calibration.platform");
  const auto res = dse(cal, 512, 1024, {1, 64, 128, 256, 512});
  const auto base = baseline_dse(cal, 512, 1024);
  if (!base) o.fail("no feasible baseline on the calibration platform");
  std::string chosen;
  double min_ratio = 1e300;
  for (const auto& ch : res.choices) {
    if (!ch.best) {
      o.fail("no feasible design for nz=" + std::to_string(ch.nz));
      continue;
    }
    if (ch.nz == 512) {
      chosen = "(" + std::to_string(ch.best->tr) + "," + std::to_string(ch.best->tc) + ")";
      if (ch.best->tc != 1) o.fail("NZ=512 best tile is " + chosen + ", expected tc=1");
    }
    if (base) {
      const double ratio = ch.best->attainable_ops_per_s / base->attainable_ops_per_s;
      min_ratio = std::min(min_ratio, ratio);
      if (ratio <= 1.0) o.fail("approx not faster than baseline at nz=" + std::to_string(ch.nz));
    }
  }
  if (o.pass) {
    o.detail = std::to_string(emitted) + " designs under the roofline; 50/50 brute-force matches; calibration NZ=512 -> " +
               chosen + ", min approx/baseline throughput " + fmt("%.2fx", min_ratio);
  }
  return o;
}

struct DeskModel {
  LstmModel model;
  EvalSet set;
};

std::vector<DeskModel> desk_models() {
  std::vector<DeskModel> out;
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng(7000 + i);
    EvalSetParams ep;
    ep.vocab = 32;
    ep.seed = 9000 + i;
    auto m = LstmModel::random(16, 16, rng);
    out.push_back({m, make_eval_set(16, 16, ep)});
  }
  return out;
}

// 7. Full-fidelity factors decode exactly like the dense model.
Outcome criterion7(const std::vector<DeskModel>& models) {
  Outcome o;
  std::size_t items = 0, tokens = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& [m, set] = models[i];
    const std::size_t c = m.cols(), n = std::min(m.hidden_size, c);
    const auto a = make_approx_model(m, ApproxConfig{c, n});
    for (const auto& p : set.prefixes) {
      const auto dense = greedy_decode(m, set.embed, set.proj, std::span<const Token>(p), set.max_len);
      const auto approx = greedy_decode(a, set.embed, set.proj, std::span<const Token>(p), set.max_len, n);
      if (dense != approx) o.fail("model " + std::to_string(i) + " decode differs");
      ++items;
      tokens += dense.size();
    }
    const auto table = evaluate_grid(m, set, {c}, n);
    if (table.find(c, n)->bleu_mean != 1.0) o.fail("model " + std::to_string(i) + " mean BLEU below 1");
  }
  if (o.pass) {
    o.detail = "20 models, " + std::to_string(items) + " decodes (" + std::to_string(tokens) +
               " tokens) identical; mean BLEU 1.0 on all";
  }
  return o;
}

// 8. Anytime improvement in aggregate and exact curve latencies.
Outcome criterion8(const std::vector<DeskModel>& models) {
  Outcome o;
  const auto cal = load_platform(std::string(ALSTM_SOURCE_DIR) + "/config/zc706_calibration.platform");
  std::vector<double> at1, at16;
  std::size_t points = 0;
  for (const auto& [m, set] : models) {
    const std::size_t nz = m.cols() / 2;
    const auto table = evaluate_grid(m, set, {nz}, 16);
    at1.push_back(table.find(nz, 1)->bleu_mean);
    at16.push_back(table.find(nz, 16)->bleu_mean);

    const auto design = dse(cal, m.hidden_size, m.cols(), {nz}).choices[0].best;
    if (!design) {
      o.fail("no design for the desk model");
      continue;
    }
    const std::size_t seq_len = set.max_len;
    const auto curve = tradeoff_curve(table, *design, m.hidden_size, cal, seq_len);
    for (const auto& pt : curve.points) {
      const auto exact = oracle::approx_model(static_cast<std::int64_t>(m.hidden_size), static_cast<std::int64_t>(nz),
                                              static_cast<std::int64_t>(pt.index),
                                              static_cast<std::int64_t>(design->tr),
                                              static_cast<std::int64_t>(design->tc));
      const double expect = static_cast<double>(seq_len) * (static_cast<double>(exact.ii) / cal.clock_hz);
      if (pt.latency_s != expect) o.fail("curve latency differs from seq_len * II / clock");
      ++points;
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double m1 = median(at1), m16 = median(at16);
  if (!(m16 >= m1)) o.fail("median BLEU fell from " + fmt("%.4f", m1) + " to " + fmt("%.4f", m16));
  if (o.pass) {
    o.detail = "median mean-BLEU " + fmt("%.4f", m1) + " at 1 term -> " + fmt("%.4f", m16) + " at 16 terms; " +
               std::to_string(points) + " curve latencies exact";
  }
  return o;
}

// 9. Containers round-trip and reports reproduce.
Outcome criterion9() {
  Outcome o;
  Rng rng(909);
  int models_ok = 0, factors_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const auto m = LstmModel::random(1 + rng.below(12), 1 + rng.below(12), rng);
    const auto mb = encode_model(m);
    const auto m2 = decode_model(mb);
    models_ok += (m2 == m && encode_model(m2) == mb);

    const std::size_t nz = 1 + rng.below(m.cols());
    const auto f = make_approx_model(m, ApproxConfig{nz, 1 + rng.below(4), 1e-10, 10'000, static_cast<std::uint64_t>(i)});
    const auto fb = encode_factors(f);
    const auto f2 = decode_factors(fb);
    bool same = encode_factors(f2) == fb;
    for (std::size_t g = 0; g < kNumGates; ++g) same = same && f2.gates[g].terms == f.gates[g].terms;
    factors_ok += same;
  }
  if (models_ok != 50) o.fail(std::to_string(models_ok) + "/50 model round trips");
  if (factors_ok != 50) o.fail(std::to_string(factors_ok) + "/50 factor round trips");

  // Same manifest -> same CSV bytes and JSON body, from the CLI.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "alstm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = "'" + std::string(ALSTM_CLI_PATH) + "' ";
  const std::string platform = std::string(ALSTM_SOURCE_DIR) + "/config/zc706_calibration.platform";
  auto run = [&](const std::string& args) {
    const int st = std::system((cli + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string model = (dir / "m.bin").string();
  bool cli_ok = run("gen-model --hidden 16 --input 16 --seed 7 --out '" + model + "'") == 0;
  const std::string trade = "tradeoff --model '" + model + "' --nz 8 --nz 32 --n-steps 6 --platform '" + platform + "'";
  // The output path is part of the manifest, so both runs write to the same
  // paths and the results are moved aside in between.
  for (int rep = 0; rep < 2 && cli_ok; ++rep) {
    cli_ok = run(trade + " --out '" + (dir / "t.csv").string() + "'") == 0 &&
             run(trade + " --format json --out '" + (dir / "t.json").string() + "'") == 0;
    if (cli_ok) {
      fs::rename(dir / "t.csv", dir / ("t" + std::to_string(rep) + ".csv"));
      fs::rename(dir / "t.json", dir / ("t" + std::to_string(rep) + ".json"));
    }
  }
  if (!cli_ok) {
    o.fail("CLI run failed");
  } else {
    const auto csv0 = slurp(dir / "t0.csv"), csv1 = slurp(dir / "t1.csv");
    if (csv0 != csv1) o.fail("CSV reports differ between identical runs");
    const auto j0 = ordered_json::parse(slurp(dir / "t0.json"));
    const auto j1 = ordered_json::parse(slurp(dir / "t1.json"));
    if (j0["body"].dump() != j1["body"].dump()) o.fail("JSON bodies differ between identical runs");
    if (j0["manifest_hash"] != fnv1a_hex(j0["manifest"].dump())) o.fail("JSON manifest hash mismatch");
    if (csv0.rfind("#manifest_hash=", 0) != 0) o.fail("CSV lacks the manifest hash line");
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "50/50 model and 50/50 factor round trips bit-identical; CLI CSV and JSON bodies reproduce";
  return o;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const auto models = desk_models();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"svd oracle equivalence", criterion1},
      {"monotone refinement", criterion2},
      {"exact recovery without pruning", criterion3},
      {"pruning optimality", criterion4},
      {"performance model goldens", criterion5},
      {"roofline and design-space search", criterion6},
      {"full-fidelity decode exactness", [&] { return criterion7(models); }},
      {"anytime accuracy and curve latency", [&] { return criterion8(models); }},
      {"container and report reproducibility", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("criterion %zu [%s]: %s - %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  const double secs = seconds_since(t0);
  std::printf("acceptance: %d/%zu passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              secs);
  return failed == 0 ? 0 : 1;
}
