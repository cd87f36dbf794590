#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "alstm/approx.hpp"
#include "alstm/error.hpp"
#include "alstm/random.hpp"
#include "alstm/tensor.hpp"

namespace alstm {

/// Gate order used by every container and model: input, forget, output, cell.
enum class Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };
inline constexpr std::size_t kNumGates = 4;

/// How the hidden output is formed from the cell state and output gate.
enum class OutputVariant {
  kCellTimesGate,  // h = c ⊙ o (captioning variant, default)
  kTanhCell,       // h = o ⊙ tanh(c) (textbook LSTM)
};

using Token = std::uint32_t;
inline constexpr Token kEndToken = 0;

/// Logistic function in double, clamped to the asymptote for |x| >= 30.
inline double sigmoid(double x) {
  if (x >= 30.0) return 1.0;
  if (x <= -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

struct LstmState {
  DenseVector h;
  DenseVector c;

  static LstmState zeros(std::size_t hidden) { return {DenseVector(hidden), DenseVector(hidden)}; }

  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// Dense reference model over augmented gate matrices W = [Wx Wh], R x (input_size + R).
struct LstmModel {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<DenseMatrix, kNumGates> gates;
  OutputVariant variant = OutputVariant::kCellTimesGate;

  std::size_t cols() const noexcept { return input_size + hidden_size; }
  const DenseMatrix& gate(Gate g) const { return gates[static_cast<std::size_t>(g)]; }

  void validate() const {
    if (input_size == 0 || hidden_size == 0) throw ShapeError("LstmModel: sizes must be positive");
    for (const auto& w : gates) {
      if (w.rows() != hidden_size || w.cols() != cols()) {
        throw ShapeError("LstmModel: gate matrix is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                         ", expected " + std::to_string(hidden_size) + "x" + std::to_string(cols()));
      }
    }
  }

  /// Gate weights uniform in [-scale, scale); scale <= 0 selects 2 / sqrt(C).
  static LstmModel random(std::size_t input_size, std::size_t hidden_size, Rng& rng, double scale = 0.0) {
    LstmModel m{input_size, hidden_size, {}};
    const double s = scale > 0.0 ? scale : 2.0 / std::sqrt(static_cast<double>(m.cols()));
    for (auto& w : m.gates) w = DenseMatrix::random(hidden_size, m.cols(), rng, s);
    return m;
  }

  friend bool operator==(const LstmModel&, const LstmModel&) = default;
};

/// Factored anytime model: every gate holds the same number of refinement terms.
struct ApproxLstmModel {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<GateFactors, kNumGates> gates;
  OutputVariant variant = OutputVariant::kCellTimesGate;

  std::size_t cols() const noexcept { return input_size + hidden_size; }
  std::size_t term_count() const noexcept { return gates[0].terms.size(); }

  void validate() const {
    if (input_size == 0 || hidden_size == 0) throw ShapeError("ApproxLstmModel: sizes must be positive");
    for (const auto& g : gates) {
      if (g.rows != hidden_size || g.cols != cols()) throw ShapeError("ApproxLstmModel: gate factor shape mismatch");
      if (g.terms.size() != term_count() || g.nz != gates[0].nz) {
        throw ShapeError("ApproxLstmModel: gates disagree on term count or nz");
      }
    }
  }
};

namespace detail {

/// Zero-valued term appended to gates that converged exactly before n_steps.
inline RefinementTerm zero_term(std::size_t rows, std::size_t cols, std::size_t nz) {
  RefinementTerm t;
  t.u = DenseVector(rows);
  t.u[0] = 1.0f;
  t.v_masked.full_len = cols;
  for (std::size_t j = 0; j < nz; ++j) t.v_masked.entries.push_back({static_cast<std::uint32_t>(j), 0.0f});
  return t;
}

/// Applies the gate nonlinearities and the cell/output update.
inline LstmState finish_step(const std::array<Vector<double>, kNumGates>& pre, const LstmState& s,
                             OutputVariant variant, std::size_t rows_done) {
  const std::size_t r_total = s.c.size();
  LstmState next = LstmState::zeros(r_total);
  for (std::size_t r = 0; r < rows_done; ++r) {
    const double i = sigmoid(pre[0][r]);
    const double f = sigmoid(pre[1][r]);
    const double o = sigmoid(pre[2][r]);
    const double g = std::tanh(pre[3][r]);
    const double c = f * static_cast<double>(s.c[r]) + i * g;
    next.c[r] = static_cast<float>(c);
    // h is formed from the rounded cell state so it matches a float32 datapath.
    const double c32 = static_cast<double>(next.c[r]);
    next.h[r] = static_cast<float>(variant == OutputVariant::kCellTimesGate ? c32 * o : o * std::tanh(c32));
  }
  return next;
}

inline void check_step_inputs(std::size_t input_size, std::size_t hidden, const DenseVector& x, const LstmState& s) {
  if (x.size() != input_size) {
    throw ShapeError("lstm step: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(input_size));
  }
  if (s.h.size() != hidden || s.c.size() != hidden) throw ShapeError("lstm step: state size mismatch");
}

}  // namespace detail

/// Builds the factored model by decomposing the four gates independently.
/// Gates that converge exactly early are padded with zero-valued terms so all
/// gates expose the same term count.
inline ApproxLstmModel make_approx_model(const LstmModel& m, const ApproxConfig& cfg, bool parallel = true) {
  m.validate();
  ApproxLstmModel out{m.input_size, m.hidden_size, {}, m.variant};
  if (parallel) {
    std::array<std::future<GateFactors>, kNumGates> jobs;
    for (std::size_t g = 0; g < kNumGates; ++g) {
      jobs[g] = std::async(std::launch::async, [&m, &cfg, g] { return decompose(m.gates[g], cfg); });
    }
    for (std::size_t g = 0; g < kNumGates; ++g) out.gates[g] = jobs[g].get();
  } else {
    for (std::size_t g = 0; g < kNumGates; ++g) out.gates[g] = decompose(m.gates[g], cfg);
  }
  std::size_t terms = 0;
  for (const auto& g : out.gates) terms = std::max(terms, g.terms.size());
  for (auto& g : out.gates) {
    while (g.terms.size() < terms) g.terms.push_back(detail::zero_term(g.rows, g.cols, g.nz));
  }
  return out;
}

/// Σ_{k<upto} sigma_k u_k ((f_k ⊙ v_k) · x_aug). Per term the sparse dot
/// product is formed first, scaled by sigma, then spread over u.
inline Vector<double> gate_preactivation_factored_f64(const GateFactors& g, const DenseVector& x_aug,
                                                      std::size_t upto) {
  if (x_aug.size() != g.cols) {
    throw ShapeError("gate_preactivation_factored: input has " + std::to_string(x_aug.size()) + " entries, expected " +
                     std::to_string(g.cols));
  }
  detail::check_upto(g, upto);
  Vector<double> acc(g.rows);
  for (std::size_t k = 0; k < upto; ++k) {
    const auto& t = g.terms[k];
    const double scalar = static_cast<double>(t.sigma) * t.v_masked.dot(x_aug.values());
    for (std::size_t r = 0; r < g.rows; ++r) acc[r] += scalar * static_cast<double>(t.u[r]);
  }
  return acc;
}

inline DenseVector gate_preactivation_factored(const GateFactors& g, const DenseVector& x_aug, std::size_t upto) {
  const auto acc = gate_preactivation_factored_f64(g, x_aug, upto);
  DenseVector out(acc.size());
  for (std::size_t r = 0; r < acc.size(); ++r) out[r] = static_cast<float>(acc[r]);
  return out;
}

/// Dense reference step. Pre-activations are rounded to float32 like matvec.
inline LstmState lstm_step_dense(const LstmModel& m, const DenseVector& x, const LstmState& s) {
  detail::check_step_inputs(m.input_size, m.hidden_size, x, s);
  const auto x_aug = build_augmented_input(x, s.h);
  std::array<Vector<double>, kNumGates> pre;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const auto y = matvec(m.gates[g], x_aug);
    pre[g] = Vector<double>(y.size());
    for (std::size_t r = 0; r < y.size(); ++r) pre[g][r] = y[r];
  }
  return detail::finish_step(pre, s, m.variant, m.hidden_size);
}

/// Dense step in which only the first rows_done output rows have been
/// produced; the remaining entries of h and c are zero. Models the
/// intermediate output of a row-tiled baseline accelerator.
inline LstmState lstm_step_dense_partial(const LstmModel& m, const DenseVector& x, const LstmState& s,
                                         std::size_t rows_done) {
  detail::check_step_inputs(m.input_size, m.hidden_size, x, s);
  rows_done = std::min(rows_done, m.hidden_size);
  const auto x_aug = build_augmented_input(x, s.h);
  std::array<Vector<double>, kNumGates> pre;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    pre[g] = Vector<double>(m.hidden_size);
    for (std::size_t r = 0; r < rows_done; ++r) {
      pre[g][r] = static_cast<float>(dot(m.gates[g].row(r), x_aug.values()));
    }
  }
  return detail::finish_step(pre, s, m.variant, rows_done);
}

/// Anytime step using the first `upto` refinement terms of every gate.
inline LstmState lstm_step_approx(const ApproxLstmModel& m, const DenseVector& x, const LstmState& s,
                                  std::size_t upto) {
  detail::check_step_inputs(m.input_size, m.hidden_size, x, s);
  const auto x_aug = build_augmented_input(x, s.h);
  std::array<Vector<double>, kNumGates> pre;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    const auto y = gate_preactivation_factored(m.gates[g], x_aug, upto);
    pre[g] = Vector<double>(y.size());
    for (std::size_t r = 0; r < y.size(); ++r) pre[g][r] = y[r];
  }
  return detail::finish_step(pre, s, m.variant, m.hidden_size);
}

using StepFn = std::function<LstmState(const DenseVector&, const LstmState&)>;

/// Folds step over the inputs and returns every intermediate state.
template <typename Step>
std::vector<LstmState> run_sequence(Step&& step, std::span<const DenseVector> inputs, const LstmState& s0) {
  std::vector<LstmState> out;
  out.reserve(inputs.size());
  LstmState s = s0;
  for (const auto& x : inputs) {
    s = step(x, s);
    out.push_back(s);
  }
  return out;
}

template <typename Step>
std::vector<LstmState> run_sequence(Step&& step, const std::vector<DenseVector>& inputs, const LstmState& s0) {
  return run_sequence(std::forward<Step>(step), std::span<const DenseVector>(inputs), s0);
}

/// Argmax over logits; the lowest index wins ties.
inline Token argmax(const DenseVector& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return static_cast<Token>(best);
}

/// Greedy decoding. The prefix tokens are fed in order; afterwards the
/// argmax of proj * h is emitted and fed back until kEndToken or max_len
/// emitted tokens. The prefix and the end token are not part of the result.
template <typename Step>
std::vector<Token> greedy_decode(Step&& step, std::size_t hidden, const DenseMatrix& embed, const DenseMatrix& proj,
                                 std::span<const Token> prefix, std::size_t max_len) {
  if (prefix.empty()) throw ShapeError("greedy_decode: empty prefix");
  if (proj.cols() != hidden) throw ShapeError("greedy_decode: projection width != hidden size");
  if (proj.rows() != embed.rows()) throw ShapeError("greedy_decode: projection and embedding vocabularies differ");
  for (Token t : prefix) {
    if (t >= embed.rows()) throw ShapeError("greedy_decode: token " + std::to_string(t) + " outside vocabulary");
  }
  std::vector<Token> out;
  if (max_len == 0) return out;

  auto embed_row = [&](Token t) {
    auto r = embed.row(t);
    return DenseVector(std::vector<float>(r.begin(), r.end()));
  };
  LstmState s = LstmState::zeros(hidden);
  for (Token t : prefix) s = step(embed_row(t), s);
  while (true) {
    const Token next = argmax(matvec(proj, s.h));
    if (next == kEndToken) break;
    out.push_back(next);
    if (out.size() == max_len) break;
    s = step(embed_row(next), s);
  }
  return out;
}

inline std::vector<Token> greedy_decode(const LstmModel& m, const DenseMatrix& embed, const DenseMatrix& proj,
                                        std::span<const Token> prefix, std::size_t max_len) {
  if (embed.cols() != m.input_size) throw ShapeError("greedy_decode: embedding width != input size");
  return greedy_decode([&m](const DenseVector& x, const LstmState& s) { return lstm_step_dense(m, x, s); },
                       m.hidden_size, embed, proj, prefix, max_len);
}

inline std::vector<Token> greedy_decode(const ApproxLstmModel& m, const DenseMatrix& embed, const DenseMatrix& proj,
                                        std::span<const Token> prefix, std::size_t max_len, std::size_t upto) {
  if (embed.cols() != m.input_size) throw ShapeError("greedy_decode: embedding width != input size");
  return greedy_decode(
      [&m, upto](const DenseVector& x, const LstmState& s) { return lstm_step_approx(m, x, s, upto); },
      m.hidden_size, embed, proj, prefix, max_len);
}

inline std::vector<Token> greedy_decode(const LstmModel& m, const DenseMatrix& embed, const DenseMatrix& proj,
                                        Token start_token, std::size_t max_len) {
  const Token prefix[] = {start_token};
  return greedy_decode(m, embed, proj, std::span<const Token>(prefix), max_len);
}

inline std::vector<Token> greedy_decode(const ApproxLstmModel& m, const DenseMatrix& embed, const DenseMatrix& proj,
                                        Token start_token, std::size_t max_len, std::size_t upto) {
  const Token prefix[] = {start_token};
  return greedy_decode(m, embed, proj, std::span<const Token>(prefix), max_len, upto);
}

}  // namespace alstm
