#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "rdr/problem.hpp"

namespace rdr {

enum class InitMode { uniform, random_dirichlet };

struct SolverConfig {
  double lambda = 0.0;
  double inner_tol = 1e-9;
  double outer_tol = 1e-8;
  std::size_t max_inner_iters = 2000;
  std::size_t max_outer_cycles = 200;
  std::size_t restarts = 8;
  std::uint64_t rng_seed = 1;
  InitMode init_mode = InitMode::uniform;
  std::vector<double> source_weights;  // per-source rate multipliers; empty = all ones

  void validate(std::size_t num_sources) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      fail(errc::out_of_range, "lambda must be finite and nonnegative");
    if (!(inner_tol > 0.0) || !(outer_tol > 0.0))
      fail(errc::out_of_range, "tolerances must be positive");
    if (max_inner_iters == 0 || max_outer_cycles == 0 || restarts == 0)
      fail(errc::out_of_range, "iteration and restart counts must be at least 1");
    if (!source_weights.empty()) {
      if (source_weights.size() != num_sources)
        fail(errc::shape_mismatch, "need one rate weight per source");
      for (double w : source_weights)
        if (!(w > 0.0) || !std::isfinite(w))
          fail(errc::out_of_range, "rate weights must be positive and finite");
    }
  }

  double weight(std::size_t i) const { return source_weights.empty() ? 1.0 : source_weights[i]; }
};

// One iterate of the alternating minimization.
struct SolverState {
  std::vector<StochasticMatrix> enc;  // q_i(w_i | x_i), rows indexed by x_i
  std::vector<StochasticMatrix> marg; // Q_i(w_i | y), rows indexed by y
  Tensor dec;                         // q'(t_hat | w_1..w_M, y), axes (t_hat, w..., y)
  double lagrangian = 0.0;
  std::size_t outer_cycles = 0;
  std::size_t total_inner_iters = 0;
};

struct SolveResult {
  SolverState state;
  std::vector<double> rates;
  double distortion = 0.0;
  double lagrangian = 0.0;
  bool converged = false;
  std::size_t restart_index_of_best = 0;
  std::vector<double> lagrangian_trace;              // best restart
  std::vector<std::vector<double>> all_traces;       // one per restart
  bool ci_warning = false;                           // sources not conditionally independent given y
  double ci_deviation = 0.0;
};

namespace detail {

// p(x_m, y), axes (x_m, y).
inline Tensor source_side_marginal(const ProblemSpec& spec, std::size_t m) {
  return project(spec.joint.probs, std::vector<std::size_t>{spec.x_axis(m), spec.y_axis()});
}

// Row-major layout of the combined auxiliary index (w_1, ..., w_M).
struct WLayout {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> strides;
  std::size_t total = 1;
};

inline WLayout w_layout(const ProblemSpec& spec) {
  WLayout l;
  l.sizes = spec.aux_sizes;
  l.strides.assign(l.sizes.size(), 1);
  for (std::size_t i = l.sizes.size(); i-- > 0;) {
    l.strides[i] = l.total;
    l.total *= l.sizes[i];
  }
  return l;
}

// Joint weight of (t, w_1..w_M, y) under the problem PMF and product encoders:
// g(t, w, y) = sum_x p(t, x, y) * prod_i q_i(w_i | x_i).
inline Tensor joint_tw_y(const ProblemSpec& spec, std::span<const StochasticMatrix> enc) {
  const Tensor& joint = spec.joint.probs;
  const std::size_t m = spec.num_sources;
  const WLayout wl = w_layout(spec);
  std::vector<std::size_t> shape{spec.t_size};
  shape.insert(shape.end(), wl.sizes.begin(), wl.sizes.end());
  shape.push_back(spec.y_size);
  Tensor g(shape, 0.0);
  const std::size_t block = wl.total * spec.y_size;
  std::vector<std::size_t> x(m);
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    const double p = joint[flat];
    if (p == 0.0) continue;
    const std::size_t t = joint.index_of(flat, 0);
    const std::size_t y = joint.index_of(flat, m + 1);
    for (std::size_t i = 0; i < m; ++i) x[i] = joint.index_of(flat, 1 + i);
    for (std::size_t wf = 0; wf < wl.total; ++wf) {
      double prod = p;
      for (std::size_t i = 0; i < m; ++i)
        prod *= enc[i](x[i], (wf / wl.strides[i]) % wl.sizes[i]);
      g[t * block + wf * spec.y_size + y] += prod;
    }
  }
  return g;
}

// Expected distortion of the decoder's choice per latent symbol:
// r(t, w, y) = sum_{t_hat} d(t, t_hat) * dec(t_hat, w, y). Shares the layout
// of joint_tw_y, so contractions are flat dot products.
inline Tensor decoder_risk(const ProblemSpec& spec, const Tensor& dec) {
  const std::size_t block = dec.size() / spec.that_size;
  std::vector<std::size_t> shape = dec.shape();
  shape[0] = spec.t_size;
  Tensor risk(shape, 0.0);
  for (std::size_t rest = 0; rest < block; ++rest)
    for (std::size_t t = 0; t < spec.t_size; ++t) {
      double r = 0.0;
      for (std::size_t th = 0; th < spec.that_size; ++th) {
        const double q = dec[th * block + rest];
        if (q > 0.0) r += spec.distortion(t, th) * q;
      }
      risk[t * block + rest] = r;
    }
  return risk;
}

inline double expected_distortion_of(const ProblemSpec& spec, std::span<const StochasticMatrix> enc,
                                     const Tensor& dec) {
  const Tensor g = joint_tw_y(spec, enc);
  const Tensor risk = decoder_risk(spec, dec);
  double d = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) d += g[i] * risk[i];
  return d < 0.0 ? 0.0 : d;
}

// Deterministic minimum-risk reconstruction rule: for every (w, y) cell all
// mass goes to the t_hat minimizing sum_t d(t, t_hat) g(t, w, y), lowest
// index on ties.
inline Tensor bayes_decoder(const ProblemSpec& spec, std::span<const StochasticMatrix> enc) {
  const Tensor g = joint_tw_y(spec, enc);
  const std::size_t block = g.size() / spec.t_size;
  std::vector<std::size_t> shape = g.shape();
  shape[0] = spec.that_size;
  Tensor dec(shape, 0.0);
  for (std::size_t rest = 0; rest < block; ++rest) {
    std::size_t best = 0;
    double best_risk = std::numeric_limits<double>::infinity();
    for (std::size_t th = 0; th < spec.that_size; ++th) {
      double r = 0.0;
      for (std::size_t t = 0; t < spec.t_size; ++t) r += spec.distortion(t, th) * g[t * block + rest];
      if (r < best_risk) {
        best_risk = r;
        best = th;
      }
    }
    dec[best * block + rest] = 1.0;
  }
  return dec;
}

// The minimizing marginal channel for source m given its encoder: the
// full-joint stationary value reduces to q_m's marginal under p(x_m | y).
inline StochasticMatrix induced_marginal(const ProblemSpec& spec, const StochasticMatrix& q,
                                         std::size_t m, std::vector<std::size_t>* degenerate_rows) {
  const Tensor pxy = source_side_marginal(spec, m);
  const std::size_t xs = spec.x_sizes[m], ys = spec.y_size, ws = spec.aux_sizes[m];
  StochasticMatrix out(ys, ws, 0.0);
  for (std::size_t y = 0; y < ys; ++y) {
    double py = 0.0;
    for (std::size_t x = 0; x < xs; ++x) py += pxy[x * ys + y];
    if (py <= 0.0) {
      for (std::size_t w = 0; w < ws; ++w) out(y, w) = 1.0 / static_cast<double>(ws);
      if (degenerate_rows) degenerate_rows->push_back(y);
      continue;
    }
    for (std::size_t x = 0; x < xs; ++x) {
      const double px = pxy[x * ys + y] / py;
      if (px == 0.0) continue;
      for (std::size_t w = 0; w < ws; ++w) out(y, w) += px * q(x, w);
    }
    double s = 0.0;
    for (std::size_t w = 0; w < ws; ++w) s += out(y, w);
    for (std::size_t w = 0; w < ws; ++w) out(y, w) /= s;
  }
  return out;
}

// One source's rate term sum p(y, x) q(w|x) log2[q(w|x) / Q(w|y)], unclamped.
inline double rate_term(const ProblemSpec& spec, const StochasticMatrix& q,
                        const StochasticMatrix& marg, std::size_t m) {
  const Tensor pxy = source_side_marginal(spec, m);
  const std::size_t xs = spec.x_sizes[m], ys = spec.y_size, ws = spec.aux_sizes[m];
  double r = 0.0;
  for (std::size_t x = 0; x < xs; ++x)
    for (std::size_t y = 0; y < ys; ++y) {
      const double p = pxy[x * ys + y];
      if (p == 0.0) continue;
      for (std::size_t w = 0; w < ws; ++w) {
        const double qv = q(x, w);
        if (qv <= 0.0) continue;
        r += p * qv * (std::log2(qv) - log2_floored(marg(y, w)));
      }
    }
  return r;
}

// Distortion-side coefficient of source m's encoder entries: delta(x_m, w_m)
// such that the distortion term restricted to row x_m is linear,
// sum_w q(w | x_m) delta(x_m, w), with everything else held fixed.
inline Tensor encoder_distortion_term(const ProblemSpec& spec, std::span<const StochasticMatrix> enc,
                                      const Tensor& dec, std::size_t m) {
  const Tensor& joint = spec.joint.probs;
  const std::size_t nsrc = spec.num_sources;
  const WLayout wl = w_layout(spec);
  const Tensor risk = decoder_risk(spec, dec);
  const std::size_t block = wl.total * spec.y_size;
  const std::size_t ws = spec.aux_sizes[m];
  Tensor delta({spec.x_sizes[m], ws}, 0.0);
  std::vector<std::size_t> x(nsrc);
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    const double p = joint[flat];
    if (p == 0.0) continue;
    const std::size_t t = joint.index_of(flat, 0);
    const std::size_t y = joint.index_of(flat, nsrc + 1);
    for (std::size_t i = 0; i < nsrc; ++i) x[i] = joint.index_of(flat, 1 + i);
    for (std::size_t wf = 0; wf < wl.total; ++wf) {
      double prod = p;
      for (std::size_t i = 0; i < nsrc; ++i)
        if (i != m) prod *= enc[i](x[i], (wf / wl.strides[i]) % wl.sizes[i]);
      const std::size_t wm = (wf / wl.strides[m]) % wl.sizes[m];
      delta[x[m] * ws + wm] += prod * risk[t * block + wf * spec.y_size + y];
    }
  }
  return delta;
}

// Exact row-wise minimizer of the Lagrangian over q_m with everything else
// fixed: q(w | x) proportional to exp[sum_y p(y|x) ln Q(w|y)
// - lambda ln2 delta(x, w) / (weight p(x))], computed in log domain with
// per-row max subtraction.
inline StochasticMatrix encoder_minimizer(const ProblemSpec& spec, const StochasticMatrix& marg,
                                          const Tensor& delta, std::size_t m, double lambda,
                                          double rate_weight) {
  const Tensor pxy = source_side_marginal(spec, m);
  const std::size_t xs = spec.x_sizes[m], ys = spec.y_size, ws = spec.aux_sizes[m];
  StochasticMatrix out(xs, ws, 0.0);
  std::vector<double> expo(ws);
  for (std::size_t x = 0; x < xs; ++x) {
    double px = 0.0;
    for (std::size_t y = 0; y < ys; ++y) px += pxy[x * ys + y];
    if (px <= 0.0) {
      for (std::size_t w = 0; w < ws; ++w) out(x, w) = 1.0 / static_cast<double>(ws);
      continue;
    }
    for (std::size_t w = 0; w < ws; ++w) {
      double e = 0.0;
      for (std::size_t y = 0; y < ys; ++y) {
        const double py = pxy[x * ys + y] / px;
        if (py > 0.0) e += py * ln_floored(marg(y, w));
      }
      e -= lambda * std::numbers::ln2 * delta[x * ws + w] / (rate_weight * px);
      expo[w] = e;
    }
    double mx = expo[0];
    for (std::size_t w = 1; w < ws; ++w) mx = std::max(mx, expo[w]);
    double s = 0.0;
    for (std::size_t w = 0; w < ws; ++w) {
      const double v = std::exp(expo[w] - mx);
      out(x, w) = v;
      s += v;
    }
    if (s <= 0.0) fail(errc::all_zero_row, "encoder row " + std::to_string(x) + " underflowed");
    for (std::size_t w = 0; w < ws; ++w) out(x, w) /= s;
  }
  return out;
}

inline double lagrangian_of(const ProblemSpec& spec, std::span<const StochasticMatrix> enc,
                            std::span<const StochasticMatrix> marg, const Tensor& dec, double lambda,
                            std::span<const double> weights) {
  double value = 0.0;
  for (std::size_t m = 0; m < spec.num_sources; ++m)
    value += (weights.empty() ? 1.0 : weights[m]) * rate_term(spec, enc[m], marg[m], m);
  if (lambda != 0.0) value += lambda * expected_distortion_of(spec, enc, dec);
  return value;
}

inline StochasticMatrix uniform_channel(std::size_t rows, std::size_t cols) {
  return StochasticMatrix(rows, cols, 1.0 / static_cast<double>(cols));
}

inline StochasticMatrix dirichlet_channel(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  StochasticMatrix out(rows, cols, 0.0);
  std::exponential_distribution<double> unit(1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = unit(rng);
      out(r, c) = v;
      s += v;
    }
    if (s <= 0.0)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) = 1.0 / static_cast<double>(cols);
    else
      for (std::size_t c = 0; c < cols; ++c) out(r, c) /= s;
  }
  return out;
}

}  // namespace detail

inline double lagrangian(const ProblemSpec& spec, const SolverState& state, double lambda) {
  return detail::lagrangian_of(spec, state.enc, state.marg, state.dec, lambda, {});
}

inline StochasticMatrix update_marginal(const ProblemSpec& spec, const SolverState& state,
                                        std::size_t m,
                                        std::vector<std::size_t>* degenerate_rows = nullptr) {
  return detail::induced_marginal(spec, state.enc[m], m, degenerate_rows);
}

inline StochasticMatrix update_encoder(const ProblemSpec& spec, const SolverState& state,
                                       std::size_t m, double lambda, double rate_weight = 1.0) {
  const Tensor delta = detail::encoder_distortion_term(spec, state.enc, state.dec, m);
  return detail::encoder_minimizer(spec, state.marg[m], delta, m, lambda, rate_weight);
}

inline Tensor update_decoder(const ProblemSpec& spec, const SolverState& state) {
  return detail::bayes_decoder(spec, state.enc);
}

inline double expected_distortion(const ProblemSpec& spec, const SolverState& state) {
  return detail::expected_distortion_of(spec, state.enc, state.dec);
}

// Per-source rates, valid once each marginal channel equals the one induced
// by its encoder (run update_marginal first). Tiny negative float residue is
// clamped to zero.
inline std::vector<double> rates(const ProblemSpec& spec, const SolverState& state) {
  std::vector<double> out(spec.num_sources);
  for (std::size_t m = 0; m < spec.num_sources; ++m) {
    double r = detail::rate_term(spec, state.enc[m], state.marg[m], m);
    if (r < 0.0 && r > -1e-9) r = 0.0;
    out[m] = r;
  }
  return out;
}

// Assembles a consistent state from encoder channels: marginals induced,
// decoder Bayes-optimal.
inline SolverState make_state(const ProblemSpec& spec, std::vector<StochasticMatrix> enc) {
  SolverState st;
  st.enc = std::move(enc);
  st.marg.reserve(spec.num_sources);
  for (std::size_t m = 0; m < spec.num_sources; ++m)
    st.marg.push_back(detail::induced_marginal(spec, st.enc[m], m, nullptr));
  st.dec = detail::bayes_decoder(spec, st.enc);
  return st;
}

inline SolverState make_initial_state(const ProblemSpec& spec, const SolverConfig& config,
                                      std::size_t restart) {
  std::vector<StochasticMatrix> enc;
  enc.reserve(spec.num_sources);
  if (restart == 0 && config.init_mode == InitMode::uniform) {
    for (std::size_t m = 0; m < spec.num_sources; ++m)
      enc.push_back(detail::uniform_channel(spec.x_sizes[m], spec.aux_sizes[m]));
  } else {
    std::mt19937_64 rng(config.rng_seed + restart);
    for (std::size_t m = 0; m < spec.num_sources; ++m)
      enc.push_back(detail::dirichlet_channel(spec.x_sizes[m], spec.aux_sizes[m], rng));
  }
  return make_state(spec, std::move(enc));
}

namespace detail {

// Runs the alternating schedule from the given state; fills the trace with
// the Lagrangian after every single update.
inline bool run_schedule(const ProblemSpec& spec, const SolverConfig& config, SolverState& st,
                         std::vector<double>& trace) {
  const std::size_t nsrc = spec.num_sources;
  std::span<const double> weights(config.source_weights);
  double value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
  trace.push_back(value);
  bool converged = false;
  double outer_prev = value;
  for (std::size_t cycle = 0; cycle < config.max_outer_cycles; ++cycle) {
    for (std::size_t m = 0; m < nsrc; ++m) {
      double inner_prev = value;
      for (std::size_t k = 0; k < config.max_inner_iters; ++k) {
        st.marg[m] = induced_marginal(spec, st.enc[m], m, nullptr);
        value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
        trace.push_back(value);
        const Tensor delta = encoder_distortion_term(spec, st.enc, st.dec, m);
        st.enc[m] = encoder_minimizer(spec, st.marg[m], delta, m, config.lambda, config.weight(m));
        value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
        trace.push_back(value);
        ++st.total_inner_iters;
        const double rel = std::abs(value - inner_prev) / std::max(std::abs(inner_prev), 1e-12);
        inner_prev = value;
        if (rel < config.inner_tol) break;
      }
      st.dec = bayes_decoder(spec, st.enc);
      value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
      trace.push_back(value);
    }
    st.outer_cycles = cycle + 1;
    const double rel = std::abs(value - outer_prev) / std::max(std::abs(outer_prev), 1e-12);
    outer_prev = value;
    if (rel < config.outer_tol) {
      converged = true;
      break;
    }
  }
  // Refresh marginals so reported rates use each encoder's own induced
  // channel; every refresh is itself a descent step.
  for (std::size_t m = 0; m < nsrc; ++m) {
    st.marg[m] = induced_marginal(spec, st.enc[m], m, nullptr);
    value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
    trace.push_back(value);
  }
  // Prune dead letters. A letter on its way out decays geometrically, and the
  // relative-change stop freezes it partway down, leaving residual mass whose
  // cross-row ratios are historical noise. Snap such columns to exactly zero
  // so the returned support is clean. The decoder rows for a pruned letter
  // keep their last informed values: re-deriving them would face an all-zero
  // risk slice where every reconstruction ties. The prune is not a scheduled
  // update, so the trace (which mirrors the update sequence) is left alone;
  // its effect on the Lagrangian is below kDeadColumn times a log factor.
  constexpr double kDeadColumn = 1e-6;
  bool pruned = false;
  for (std::size_t m = 0; m < nsrc; ++m) {
    const std::size_t xs = spec.x_sizes[m], ws = spec.aux_sizes[m];
    bool changed = false;
    for (std::size_t w = 0; w < ws; ++w) {
      double colmax = 0.0;
      for (std::size_t x = 0; x < xs; ++x) colmax = std::max(colmax, st.enc[m](x, w));
      if (colmax <= 0.0 || colmax >= kDeadColumn) continue;
      for (std::size_t x = 0; x < xs; ++x) st.enc[m](x, w) = 0.0;
      changed = true;
    }
    if (!changed) continue;
    for (std::size_t x = 0; x < xs; ++x) {
      double s = 0.0;
      for (std::size_t w = 0; w < ws; ++w) s += st.enc[m](x, w);
      for (std::size_t w = 0; w < ws; ++w) st.enc[m](x, w) /= s;
    }
    st.marg[m] = induced_marginal(spec, st.enc[m], m, nullptr);
    pruned = true;
  }
  // Decoder slices no input can reach have identically zero risk, so any
  // reconstruction there is equally optimal and whatever the last refresh
  // left behind is a historical accident. Hedge those slices uniformly:
  // a noncommittal row prices unreachable letters at the mean distortion,
  // whereas an arbitrary deterministic leftover prices them at zero for one
  // input symbol and full for another. Zero-mass slices contribute nothing
  // to the objective, so this never moves the Lagrangian.
  {
    const Tensor g = joint_tw_y(spec, st.enc);
    const std::size_t block = g.size() / spec.t_size;
    const double u = 1.0 / static_cast<double>(spec.that_size);
    for (std::size_t rest = 0; rest < block; ++rest) {
      double mass = 0.0;
      for (std::size_t t = 0; t < spec.t_size; ++t) mass += g[t * block + rest];
      if (mass > 0.0) continue;
      for (std::size_t th = 0; th < spec.that_size; ++th) st.dec[th * block + rest] = u;
    }
  }
  if (pruned) value = lagrangian_of(spec, st.enc, st.marg, st.dec, config.lambda, weights);
  st.lagrangian = value;
  return converged;
}

}  // namespace detail

// Best-of-restarts alternating minimization of the rate-distortion Lagrangian.
inline SolveResult solve(const ProblemSpec& spec_in, const SolverConfig& config) {
  ProblemSpec spec = spec_in;
  spec.validate();
  config.validate(spec.num_sources);

  const IndependenceReport ci = check_conditional_independence(spec.joint, 1e-9);

  SolveResult best;
  best.lagrangian = std::numeric_limits<double>::infinity();
  best.all_traces.reserve(config.restarts);
  for (std::size_t r = 0; r < config.restarts; ++r) {
    SolverState st = make_initial_state(spec, config, r);
    std::vector<double> trace;
    const bool converged = detail::run_schedule(spec, config, st, trace);
    const double value = st.lagrangian;
    best.all_traces.push_back(std::move(trace));
    if (r == 0 || value < best.lagrangian) {
      best.state = std::move(st);
      best.lagrangian = value;
      best.converged = converged;
      best.restart_index_of_best = r;
    }
  }
  best.lagrangian_trace = best.all_traces[best.restart_index_of_best];
  best.rates = rates(spec, best.state);
  best.distortion = expected_distortion(spec, best.state);
  best.ci_warning = !ci.independent;
  best.ci_deviation = ci.max_deviation;
  return best;
}

// Continues the schedule from an existing state (used by warm-started sweeps).
inline SolveResult solve_from(const ProblemSpec& spec_in, const SolverConfig& config,
                              const SolverState& start) {
  ProblemSpec spec = spec_in;
  spec.validate();
  config.validate(spec.num_sources);
  const IndependenceReport ci = check_conditional_independence(spec.joint, 1e-9);

  SolveResult out;
  SolverState st = start;
  st.total_inner_iters = 0;
  std::vector<double> trace;
  out.converged = detail::run_schedule(spec, config, st, trace);
  out.lagrangian = st.lagrangian;
  out.state = std::move(st);
  out.lagrangian_trace = trace;
  out.all_traces.push_back(std::move(trace));
  out.rates = rates(spec, out.state);
  out.distortion = expected_distortion(spec, out.state);
  out.ci_warning = !ci.independent;
  out.ci_deviation = ci.max_deviation;
  return out;
}

}  // namespace rdr
