// Builds a random LSTM, factors its gates, and shows how the gate error,
// decode accuracy and modelled latency change as refinement terms are added.

#include <cstdio>

#include "alstm/alstm.hpp"

int main() {
  using namespace alstm;

  Rng rng(7);
  const auto model = LstmModel::random(16, 16, rng);
  const std::size_t nz = 16, n_steps = 12;

  EvalSetParams ep;
  ep.seed = 11;
  const auto set = make_eval_set(model.input_size, model.hidden_size, ep);
  const auto table = evaluate_grid(model, set, {nz}, n_steps);
  const auto approx = make_approx_model(model, ApproxConfig{nz, n_steps});

  PlatformSpec platform;
  platform.peak_gops = 180;
  platform.mem_bandwidth_bytes_per_s = 3.4e9;
  platform.clock_hz = 100e6;
  platform.onchip_bytes = 2400 * 1024;
  platform.multiplier_budget = 900;
  const auto design = dse(platform, model.hidden_size, model.cols(), {nz}).choices[0].best;
  if (!design) {
    std::puts("no feasible design");
    return 1;
  }

  std::printf("design: nz=%zu tr=%zu tc=%zu\n", design->nz, design->tr, design->tc);
  std::printf("%6s %14s %12s %12s\n", "terms", "input-gate err", "mean BLEU", "latency us");
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double err = approximation_error(model.gate(Gate::kInput), approx.gates[0], k) /
                       frobenius_norm(model.gate(Gate::kInput));
    const double ii = initiation_interval(model.hidden_size, nz, k, design->tr, design->tc);
    const double latency = sequence_latency(set.max_len, ii, platform);
    std::printf("%6zu %14.4f %12.4f %12.3f\n", k, err, table.find(nz, k)->bleu_mean, latency * 1e6);
  }
  return 0;
}
