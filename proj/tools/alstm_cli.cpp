// Command-line front end: gen-model -> decompose -> run / dse / evaluate / tradeoff.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alstm/alstm.hpp"

namespace {

using alstm::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitUsage = 64;

struct Options {
  std::string model;
  std::string factors;
  std::vector<std::size_t> nz;
  std::size_t n_steps = 1;
  std::string platform;
  std::uint64_t seed = 0;
  std::size_t seq_len = 12;
  std::string out;
  std::string format = "csv";

  std::size_t hidden = 16;
  std::size_t input = 16;
  double scale = 0.0;
  std::size_t upto = 0;
  double svd_tol = 1e-10;
  std::size_t svd_max_iters = 10'000;
  std::size_t vocab = 32;
  std::size_t items = 8;
  bool exhaustive = false;
  bool dump_space = false;
  bool corpus = false;
  bool smoothing = false;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_hash(const std::string& path) {
  const auto bytes = alstm::read_file(path);
  return alstm::fnv1a_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ordered_json file_ref(const std::string& path) {
  ordered_json j;
  j["path"] = path;
  j["fnv1a"] = file_hash(path);
  return j;
}

void print_manifest(const alstm::RunManifest& m) { std::cout << m.to_json().dump() << "\n"; }

void write_report(const Options& o, const alstm::RunManifest& m, const alstm::CsvWriter& csv, ordered_json body) {
  if (o.format == "json")
    alstm::write_text(o.out, alstm::json_artifact(m, std::move(body), utc_now()));
  else
    alstm::write_text(o.out, alstm::csv_artifact(m, csv));
}

alstm::ApproxConfig approx_config(const Options& o, std::size_t nz, std::size_t n_steps) {
  alstm::ApproxConfig cfg;
  cfg.nz = nz;
  cfg.n_steps = n_steps;
  cfg.svd_tol = o.svd_tol;
  cfg.svd_max_iters = o.svd_max_iters;
  cfg.seed = o.seed;
  return cfg;
}

alstm::EvalSetParams eval_params(const Options& o) {
  alstm::EvalSetParams p;
  p.vocab = o.vocab;
  p.items = o.items;
  p.max_len = o.seq_len;
  p.seed = o.seed;
  return p;
}

alstm::BleuOptions bleu_options(const Options& o) {
  alstm::BleuOptions b;
  b.smoothing = o.smoothing;
  return b;
}

// --- commands --------------------------------------------------------------

int cmd_gen_model(const Options& o) {
  ordered_json in;
  in["hidden"] = o.hidden;
  in["input"] = o.input;
  in["seed"] = o.seed;
  in["scale"] = alstm::format_number(o.scale);
  in["out"] = o.out;
  const alstm::RunManifest manifest("gen-model", in);
  print_manifest(manifest);
  alstm::Rng rng(o.seed);
  const auto m = alstm::LstmModel::random(o.input, o.hidden, rng, o.scale);
  alstm::save_model(o.out, m);
  return kExitOk;
}

int cmd_decompose(const Options& o) {
  if (o.nz.size() != 1) throw alstm::InputError("decompose takes exactly one --nz");
  ordered_json in;
  in["model"] = file_ref(o.model);
  in["nz"] = o.nz[0];
  in["n_steps"] = o.n_steps;
  in["seed"] = o.seed;
  in["svd_tol"] = alstm::format_number(o.svd_tol);
  in["svd_max_iters"] = o.svd_max_iters;
  in["out"] = o.out;
  const alstm::RunManifest manifest("decompose", in);
  print_manifest(manifest);
  const auto m = alstm::load_model(o.model);
  const auto approx = alstm::make_approx_model(m, approx_config(o, o.nz[0], o.n_steps));
  alstm::save_factors(o.out, approx);
  return kExitOk;
}

int cmd_run(const Options& o) {
  ordered_json in;
  in["model"] = file_ref(o.model);
  if (!o.factors.empty()) in["factors"] = file_ref(o.factors);
  in["upto"] = o.upto;
  in["seq_len"] = o.seq_len;
  in["seed"] = o.seed;
  in["format"] = o.format;
  in["out"] = o.out;
  const alstm::RunManifest manifest("run", in);
  print_manifest(manifest);

  const auto m = alstm::load_model(o.model);
  alstm::Rng rng(o.seed);
  std::vector<alstm::DenseVector> inputs;
  for (std::size_t t = 0; t < o.seq_len; ++t) inputs.push_back(alstm::DenseVector::random(m.input_size, rng));
  const auto s0 = alstm::LstmState::zeros(m.hidden_size);

  std::vector<alstm::LstmState> states;
  std::size_t upto = 0;
  if (o.factors.empty()) {
    states = alstm::run_sequence([&](const auto& x, const auto& s) { return alstm::lstm_step_dense(m, x, s); }, inputs, s0);
  } else {
    auto approx = alstm::load_factors(o.factors);
    if (approx.hidden_size != m.hidden_size || approx.input_size != m.input_size) {
      throw alstm::InputError("factor file does not match the model's sizes");
    }
    approx.variant = m.variant;
    upto = o.upto ? o.upto : approx.term_count();
    states = alstm::run_sequence(
        [&](const auto& x, const auto& s) { return alstm::lstm_step_approx(approx, x, s, upto); }, inputs, s0);
  }

  alstm::CsvWriter csv;
  csv.row({"t", "unit", "h", "c"});
  ordered_json body;
  body["upto"] = upto;
  body["states"] = ordered_json::array();
  for (std::size_t t = 0; t < states.size(); ++t) {
    ordered_json sj;
    sj["t"] = t;
    sj["h"] = ordered_json::array();
    sj["c"] = ordered_json::array();
    for (std::size_t r = 0; r < m.hidden_size; ++r) {
      csv.row({std::to_string(t), std::to_string(r), alstm::format_number(states[t].h[r]),
               alstm::format_number(states[t].c[r])});
      sj["h"].push_back(alstm::format_number(states[t].h[r]));
      sj["c"].push_back(alstm::format_number(states[t].c[r]));
    }
    body["states"].push_back(sj);
  }
  write_report(o, manifest, csv, std::move(body));
  return kExitOk;
}

std::vector<std::string> design_row(const std::string& design, const std::string& status, const alstm::DesignPoint& d) {
  using alstm::format_number;
  return {design,
          status,
          format_number(d.nz),
          format_number(d.tr),
          format_number(d.tc),
          format_number(d.n_steps),
          format_number(d.ii_cycles),
          format_number(d.perf_ops_per_s),
          format_number(d.ctc_ops_per_byte),
          format_number(d.attainable_ops_per_s),
          d.feasible ? "true" : "false"};
}

int cmd_dse(const Options& o) {
  std::size_t hidden = o.hidden, cols = o.hidden + o.input;
  ordered_json in;
  in["platform"] = file_ref(o.platform);
  if (!o.model.empty()) in["model"] = file_ref(o.model);
  in["hidden"] = o.hidden;
  in["input"] = o.input;
  in["nz"] = o.nz;
  in["n_steps"] = o.n_steps;
  in["exhaustive"] = o.exhaustive;
  in["dump_space"] = o.dump_space;
  in["format"] = o.format;
  in["out"] = o.out;
  const alstm::RunManifest manifest("dse", in);
  print_manifest(manifest);

  if (!o.model.empty()) {
    const auto m = alstm::load_model(o.model);
    hidden = m.hidden_size;
    cols = m.cols();
  }
  if (o.nz.empty()) throw alstm::InputError("dse needs at least one --nz");
  const auto p = alstm::load_platform(o.platform);
  const alstm::DseOptions opt{o.exhaustive, o.dump_space};
  const auto result = alstm::dse(p, hidden, cols, o.nz, o.n_steps, opt);
  const auto base = alstm::baseline_dse(p, hidden, cols, opt);

  alstm::CsvWriter csv;
  csv.row({"design", "status", "nz", "tr", "tc", "n_steps", "ii_cycles", "perf_ops_per_s", "ctc_ops_per_byte",
           "attainable_ops_per_s", "feasible"});
  ordered_json body;
  body["hidden"] = hidden;
  body["cols"] = cols;
  body["best"] = ordered_json::array();
  for (const auto& choice : result.choices) {
    ordered_json cj;
    cj["nz"] = choice.nz;
    if (choice.best) {
      csv.row(design_row("approx", "best", *choice.best));
      cj["design"] = alstm::to_json(*choice.best);
    } else {
      csv.row({"approx", "no_feasible_design", std::to_string(choice.nz), "", "", std::to_string(o.n_steps), "", "", "",
               "", "false"});
      cj["design"] = nullptr;
      cj["no_feasible_design"] = true;
    }
    body["best"].push_back(cj);
  }
  if (base) {
    csv.row(design_row("baseline", "best", *base));
    body["baseline"] = alstm::to_json(*base);
  } else {
    csv.row({"baseline", "no_feasible_design", std::to_string(cols), "", "", "1", "", "", "", "", "false"});
    body["baseline"] = nullptr;
  }
  if (o.dump_space) {
    body["space"] = ordered_json::array();
    for (const auto& d : result.space) {
      csv.row(design_row("approx", "space", d));
      body["space"].push_back(alstm::to_json(d));
    }
  }
  write_report(o, manifest, csv, std::move(body));
  return kExitOk;
}

ordered_json eval_inputs(const Options& o) {
  ordered_json in;
  in["model"] = file_ref(o.model);
  if (!o.platform.empty()) in["platform"] = file_ref(o.platform);
  in["nz"] = o.nz;
  in["n_steps"] = o.n_steps;
  in["seed"] = o.seed;
  in["seq_len"] = o.seq_len;
  in["vocab"] = o.vocab;
  in["items"] = o.items;
  in["svd_tol"] = alstm::format_number(o.svd_tol);
  in["svd_max_iters"] = o.svd_max_iters;
  in["bleu_smoothing"] = o.smoothing;
  in["corpus_series"] = o.corpus;
  in["format"] = o.format;
  in["out"] = o.out;
  return in;
}

int cmd_evaluate(const Options& o) {
  const alstm::RunManifest manifest("evaluate", eval_inputs(o));
  print_manifest(manifest);
  if (o.nz.empty()) throw alstm::InputError("evaluate needs at least one --nz");
  const auto m = alstm::load_model(o.model);
  const auto params = eval_params(o);
  const auto set = alstm::make_eval_set(m.input_size, m.hidden_size, params);
  const auto table = alstm::evaluate_grid(m, set, o.nz, o.n_steps, approx_config(o, 1, o.n_steps), bleu_options(o));

  std::optional<alstm::PlatformSpec> platform;
  std::vector<std::optional<alstm::DesignPoint>> designs;
  if (!o.platform.empty()) {
    platform = alstm::load_platform(o.platform);
    for (const auto& c : alstm::dse(*platform, m.hidden_size, m.cols(), o.nz).choices) designs.push_back(c.best);
  }
  const auto csv = alstm::accuracy_csv(table, designs, o.nz, m.hidden_size, platform ? &*platform : nullptr, o.seq_len);

  ordered_json body;
  body["generator"] = alstm::to_json(params);
  body["cells"] = ordered_json::array();
  for (const auto& c : table.cells) body["cells"].push_back(alstm::to_json(c));
  write_report(o, manifest, csv, std::move(body));
  return kExitOk;
}

int cmd_tradeoff(const Options& o) {
  const alstm::RunManifest manifest("tradeoff", eval_inputs(o));
  print_manifest(manifest);
  if (o.platform.empty()) throw alstm::InputError("tradeoff needs --platform");
  if (o.nz.empty()) throw alstm::InputError("tradeoff needs at least one --nz");
  const auto m = alstm::load_model(o.model);
  const auto p = alstm::load_platform(o.platform);
  const auto params = eval_params(o);
  const auto set = alstm::make_eval_set(m.input_size, m.hidden_size, params);
  const auto bopt = bleu_options(o);
  const auto table = alstm::evaluate_grid(m, set, o.nz, o.n_steps, approx_config(o, 1, o.n_steps), bopt);

  const auto base_design = alstm::baseline_dse(p, m.hidden_size, m.cols());
  if (!base_design) throw alstm::InputError("no feasible baseline design on this platform");
  const auto base_tiles = alstm::evaluate_baseline_tiles(m, set, base_design->tr, bopt);
  const auto base_curve = alstm::baseline_curve(base_tiles, *base_design, m.hidden_size, m.cols(), p, o.seq_len, o.corpus);

  alstm::CsvWriter csv;
  auto header = alstm::tradeoff_csv_header();
  header.push_back("design");
  csv.row(header);
  ordered_json body;
  body["generator"] = alstm::to_json(params);
  body["baseline"] = {{"design", alstm::to_json(*base_design)}, {"curve", alstm::to_json(base_curve)}};
  body["approx"] = ordered_json::array();

  for (const auto& choice : alstm::dse(p, m.hidden_size, m.cols(), o.nz).choices) {
    ordered_json aj;
    aj["nz"] = choice.nz;
    if (!choice.best) {
      aj["no_feasible_design"] = true;
      body["approx"].push_back(aj);
      continue;
    }
    const auto curve = alstm::tradeoff_curve(table, *choice.best, m.hidden_size, p, o.seq_len, o.corpus);
    const auto policy = alstm::select_switching_policy(curve, base_curve);
    for (const auto& pt : curve.points) {
      const auto* cell = table.find(choice.nz, pt.index);
      csv.row({alstm::format_number(choice.nz), alstm::format_number(pt.index), alstm::format_number(pt.latency_s),
               alstm::format_number(cell->bleu_mean), alstm::format_number(cell->bleu_corpus), curve.label});
    }
    aj["design"] = alstm::to_json(*choice.best);
    aj["curve"] = alstm::to_json(curve);
    aj["policy"] = alstm::to_json(policy);
    body["approx"].push_back(aj);
  }
  for (const auto& pt : base_curve.points) {
    const auto& cell = base_tiles[pt.index - 1];
    csv.row({alstm::format_number(m.cols()), alstm::format_number(pt.index), alstm::format_number(pt.latency_s),
             alstm::format_number(cell.bleu_mean), alstm::format_number(cell.bleu_corpus), base_curve.label});
  }
  write_report(o, manifest, csv, std::move(body));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime LSTM approximation: decomposition, runtime, performance model and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output path")->required();
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto add_svd = [&](CLI::App* sub) {
    sub->add_option("--svd-tol", o.svd_tol, "Power-iteration residual tolerance");
    sub->add_option("--svd-max-iters", o.svd_max_iters, "Power-iteration iteration cap");
  };

  auto* gen = app.add_subcommand("gen-model", "Write a seeded random model container");
  gen->add_option("--hidden", o.hidden, "Hidden size R")->check(CLI::PositiveNumber);
  gen->add_option("--input", o.input, "Input size")->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--scale", o.scale, "Weight range (default 2/sqrt(C))");
  add_out(gen);

  auto* dec = app.add_subcommand("decompose", "Decompose all four gates into a factor container");
  dec->add_option("--model", o.model, "Model container")->required();
  dec->add_option("--nz", o.nz, "Non-zeros kept per term")->required();
  dec->add_option("--n-steps", o.n_steps, "Total refinement terms")->check(CLI::PositiveNumber);
  dec->add_option("--seed", o.seed, "Power-iteration seed");
  add_svd(dec);
  add_out(dec);

  auto* run = app.add_subcommand("run", "Run the dense or factored model over a seeded input sequence");
  run->add_option("--model", o.model, "Model container")->required();
  run->add_option("--factors", o.factors, "Factor container (factored run)");
  run->add_option("--upto", o.upto, "Refinement terms to evaluate (default: all)");
  run->add_option("--seq-len", o.seq_len, "Time steps")->check(CLI::PositiveNumber);
  run->add_option("--seed", o.seed, "Input generator seed");
  add_format(run);
  add_out(run);

  auto* dse = app.add_subcommand("dse", "Design-space exploration over (nz, tr, tc)");
  dse->add_option("--platform", o.platform, "Platform description")->required();
  dse->add_option("--model", o.model, "Model container (overrides --hidden/--input)");
  dse->add_option("--hidden", o.hidden, "Hidden size R")->check(CLI::PositiveNumber);
  dse->add_option("--input", o.input, "Input size")->check(CLI::PositiveNumber);
  dse->add_option("--nz", o.nz, "Non-zeros per term (repeatable)")->required();
  dse->add_option("--n-steps", o.n_steps, "Refinement terms assumed during search")->check(CLI::PositiveNumber);
  dse->add_flag("--exhaustive", o.exhaustive, "Enumerate every tile size");
  dse->add_flag("--dump-space", o.dump_space, "Emit every evaluated design");
  add_format(dse);
  add_out(dse);

  auto add_eval = [&](CLI::App* sub, bool need_platform) {
    sub->add_option("--model", o.model, "Reference model container")->required();
    auto* plat = sub->add_option("--platform", o.platform, "Platform description");
    if (need_platform) plat->required();
    sub->add_option("--nz", o.nz, "Non-zeros per term (repeatable)")->required();
    sub->add_option("--n-steps", o.n_steps, "Maximum refinement terms")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Seed for the evaluation set and power iteration");
    sub->add_option("--seq-len", o.seq_len, "Decode length cap and time steps per latency")->check(CLI::PositiveNumber);
    sub->add_option("--vocab", o.vocab, "Synthetic vocabulary size")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--items", o.items, "Evaluation items")->check(CLI::PositiveNumber);
    sub->add_flag("--corpus", o.corpus, "Plot corpus BLEU instead of the per-item mean");
    sub->add_flag("--bleu-smoothing", o.smoothing, "Add-one smoothing for n >= 2");
    add_svd(sub);
    add_format(sub);
    add_out(sub);
  };
  auto* eval = app.add_subcommand("evaluate", "BLEU of factored decodes against the dense reference");
  add_eval(eval, false);
  auto* trade = app.add_subcommand("tradeoff", "Latency/accuracy curves and the switching policy");
  add_eval(trade, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_model(o);
    if (*dec) return cmd_decompose(o);
    if (*run) return cmd_run(o);
    if (*dse) return cmd_dse(o);
    if (*eval) return cmd_evaluate(o);
    if (*trade) return cmd_tradeoff(o);
  } catch (const alstm::ConvergeError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const alstm::ZeroMatrixError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const alstm::Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
