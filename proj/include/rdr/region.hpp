#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "rdr/solver.hpp"

namespace rdr {

struct SweepPoint {
  double lambda = 0.0;
  std::vector<double> rates;
  double distortion = 0.0;
  double lagrangian = 0.0;
  bool converged = false;
  std::size_t restart_index = 0;
  std::size_t outer_cycles = 0;
  bool failed = false;  // solver threw; numeric fields are NaN
};

// Lambda = 0 plus 24 geometrically spaced points spanning [1e-2, 1e3].
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  const double lo = 1e-2, hi = 1e3;
  const int n = 24;
  for (int j = 0; j < n; ++j) grid.push_back(lo * std::pow(hi / lo, static_cast<double>(j) / (n - 1)));
  return grid;
}

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > 0.0) || hi < lo) fail(errc::out_of_range, "geometric grid needs 0 < lo <= hi");
  if (n == 0) fail(errc::out_of_range, "grid needs at least one point");
  std::vector<double> grid;
  if (n == 1) {
    grid.push_back(lo);
    return grid;
  }
  for (std::size_t j = 0; j < n; ++j)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(n - 1)));
  return grid;
}

namespace detail {

inline SweepPoint point_from_result(const SolveResult& res, double lambda) {
  SweepPoint pt;
  pt.lambda = lambda;
  pt.rates = res.rates;
  pt.distortion = res.distortion;
  pt.lagrangian = res.lagrangian;
  pt.converged = res.converged;
  pt.restart_index = res.restart_index_of_best;
  pt.outer_cycles = res.state.outer_cycles;
  return pt;
}

inline SweepPoint failed_point(double lambda, std::size_t num_sources) {
  SweepPoint pt;
  pt.lambda = lambda;
  pt.rates.assign(num_sources, std::numeric_limits<double>::quiet_NaN());
  pt.distortion = std::numeric_limits<double>::quiet_NaN();
  pt.lagrangian = std::numeric_limits<double>::quiet_NaN();
  pt.converged = false;
  pt.failed = true;
  return pt;
}

}  // namespace detail

struct SweepOutcome {
  std::vector<SweepPoint> points;
  std::vector<SolverState> states;           // one per point; empty channels on failure
  std::vector<std::vector<double>> traces;   // best-restart trace per point
};

// Traces the rate-distortion tradeoff over a lambda grid, in grid order.
// Every point runs a full best-of-restarts solve; with warm starting the
// previous point's solution is continued as one extra candidate, and the
// point keeps whichever candidate reaches the lower objective. The fresh
// solve guards against dragging a poor branch across the whole grid, while
// the continuation keeps the trace on a good branch once one is found.
// Failed points are retained with NaNs.
inline SweepOutcome sweep_with_states(const ProblemSpec& spec_in, std::span<const double> lambda_grid,
                                      const SolverConfig& base_config, bool warm_start = true) {
  if (lambda_grid.empty()) fail(errc::out_of_range, "lambda grid is empty");
  for (double l : lambda_grid)
    if (!(l >= 0.0) || !std::isfinite(l)) fail(errc::out_of_range, "lambda grid entries must be finite and >= 0");
  ProblemSpec spec = spec_in;
  spec.validate();

  SweepOutcome out;
  out.points.reserve(lambda_grid.size());
  SolverState carried;
  bool have_carry = false;
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    SolverConfig cfg = base_config;
    cfg.lambda = lambda_grid[k];
    try {
      if (!warm_start || !have_carry) {
        SolveResult res = solve(spec, cfg);
        out.points.push_back(detail::point_from_result(res, cfg.lambda));
        out.traces.push_back(std::move(res.lagrangian_trace));
        carried = res.state;
        out.states.push_back(std::move(res.state));
        have_carry = true;
      } else {
        SolveResult warm = solve_from(spec, cfg, carried);
        SolveResult cold = solve(spec, cfg);
        const bool keep_warm = warm.converged && warm.lagrangian <= cold.lagrangian;
        SolveResult& chosen = keep_warm ? warm : cold;
        out.points.push_back(detail::point_from_result(chosen, cfg.lambda));
        out.traces.push_back(std::move(chosen.lagrangian_trace));
        carried = chosen.state;
        out.states.push_back(std::move(chosen.state));
      }
    } catch (const error&) {
      out.points.push_back(detail::failed_point(cfg.lambda, spec.num_sources));
      out.states.emplace_back();
      out.traces.emplace_back();
    }
  }
  return out;
}

inline std::vector<SweepPoint> sweep(const ProblemSpec& spec, std::span<const double> lambda_grid,
                                     const SolverConfig& base_config, bool warm_start = true) {
  return sweep_with_states(spec, lambda_grid, base_config, warm_start).points;
}

// Finds the sweep point whose distortion matches the target by bisecting the
// multiplier between the zero-rate corner and a high-pressure corner.
inline SweepPoint solve_for_distortion(const ProblemSpec& spec_in, double target_d,
                                       const SolverConfig& base_config) {
  ProblemSpec spec = spec_in;
  spec.validate();
  if (!std::isfinite(target_d)) fail(errc::out_of_range, "target distortion must be finite");

  const double kDistTol = 1e-3;
  auto solve_at = [&](double lambda) {
    SolverConfig cfg = base_config;
    cfg.lambda = lambda;
    return detail::point_from_result(solve(spec, cfg), lambda);
  };

  SweepPoint at_zero = solve_at(0.0);
  const double d_max = at_zero.distortion;
  if (target_d > d_max + kDistTol)
    fail(errc::target_out_of_range,
         "target " + std::to_string(target_d) + " above zero-rate distortion " + std::to_string(d_max));
  if (std::abs(at_zero.distortion - target_d) <= kDistTol) return at_zero;

  // Doubling search for a multiplier pressing distortion below the target.
  double hi = 1.0;
  SweepPoint at_hi = solve_at(hi);
  std::size_t doublings = 0;
  while (at_hi.distortion > target_d && doublings < 24) {
    hi *= 2.0;
    at_hi = solve_at(hi);
    ++doublings;
  }
  SweepPoint best = at_hi;
  auto consider = [&](const SweepPoint& pt) {
    if (std::abs(pt.distortion - target_d) < std::abs(best.distortion - target_d)) best = pt;
  };
  consider(at_zero);
  if (at_hi.distortion > target_d + kDistTol)
    fail(errc::target_out_of_range, "target " + std::to_string(target_d) + " below reachable distortion " +
                                        std::to_string(at_hi.distortion) + "; feasible interval [" +
                                        std::to_string(at_hi.distortion) + ", " + std::to_string(d_max) + "]");

  double lo = 0.0;
  for (std::size_t step = 0; step < 40 && std::abs(best.distortion - target_d) > kDistTol; ++step) {
    const double mid = 0.5 * (lo + hi);
    SweepPoint at_mid = solve_at(mid);
    consider(at_mid);
    if (at_mid.distortion > target_d)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

struct SubsetBound {
  std::uint32_t subset_mask = 0;  // bit i-1 set means source i is in the subset
  double inner_value = 0.0;       // I(X_A; W_A | W_{A^c}, Y)
  double outer_value = 0.0;       // sum_{i in A} I(X_i; W_i | Y)
  double sum_rate = 0.0;          // sum_{i in A} R_i
};

struct SubsetBoundReport {
  std::vector<SubsetBound> bounds;  // masks 1 .. 2^M - 1 in ascending order
};

// Evaluates the achievable-region bound expressions for every nonempty
// source subset on the joint induced by the current encoders.
inline SubsetBoundReport subset_bounds(const ProblemSpec& spec_in, const SolverState& state) {
  ProblemSpec spec = spec_in;
  spec.validate();
  const std::size_t m = spec.num_sources;
  if (m > 10) fail(errc::too_many_sources, "subset enumeration limited to 10 sources");

  // Joint over (x_1..x_M, w_1..w_M, y) = p(x, y) * prod_i q_i(w_i | x_i).
  std::vector<std::size_t> xy_axes;
  for (std::size_t i = 0; i < m; ++i) xy_axes.push_back(spec.x_axis(i));
  xy_axes.push_back(spec.y_axis());
  const Tensor p_xy = detail::project(spec.joint.probs, xy_axes);

  const detail::WLayout wl = detail::w_layout(spec);
  std::vector<std::size_t> shape;
  for (std::size_t i = 0; i < m; ++i) shape.push_back(spec.x_sizes[i]);
  for (std::size_t i = 0; i < m; ++i) shape.push_back(wl.sizes[i]);
  shape.push_back(spec.y_size);
  Tensor big(shape, 0.0);
  std::vector<std::size_t> x(m);
  for (std::size_t flat = 0; flat < p_xy.size(); ++flat) {
    const double p = p_xy[flat];
    if (p == 0.0) continue;
    const std::size_t y = p_xy.index_of(flat, m);
    std::size_t base = y;  // y is the last axis of `big`, stride 1
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = p_xy.index_of(flat, i);
      base += x[i] * big.stride(i);
    }
    for (std::size_t wf = 0; wf < wl.total; ++wf) {
      double prod = p;
      std::size_t off = base;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t wi = (wf / wl.strides[i]) % wl.sizes[i];
        prod *= state.enc[i](x[i], wi);
        off += wi * big.stride(m + i);
      }
      big[off] += prod;
    }
  }
  const JointPmf joint{std::move(big)};
  const std::size_t y_axis = 2 * m;

  const std::vector<double> point_rates = rates(spec, state);

  SubsetBoundReport report;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    SubsetBound b;
    b.subset_mask = mask;
    std::vector<std::size_t> a_axes, b_axes, c_axes;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) {
        a_axes.push_back(i);
        b_axes.push_back(m + i);
        b.sum_rate += point_rates[i];
        b.outer_value += conditional_mutual_information(joint, std::vector<std::size_t>{i},
                                                        std::vector<std::size_t>{m + i},
                                                        std::vector<std::size_t>{y_axis});
      } else {
        c_axes.push_back(m + i);
      }
    }
    c_axes.push_back(y_axis);
    b.inner_value = conditional_mutual_information(joint, a_axes, b_axes, c_axes);
    report.bounds.push_back(b);
  }
  return report;
}

// Per-source I(X_i; W_i) - I(W_i; Y); matches rates() whenever each marginal
// channel is the induced one.
inline std::vector<double> rates_via_mutual_information(const ProblemSpec& spec_in,
                                                        const SolverState& state) {
  ProblemSpec spec = spec_in;
  spec.validate();
  std::vector<double> out(spec.num_sources, 0.0);
  for (std::size_t i = 0; i < spec.num_sources; ++i) {
    const Tensor pxy = detail::source_side_marginal(spec, i);  // (x, y)
    const std::size_t xs = spec.x_sizes[i], ys = spec.y_size, ws = spec.aux_sizes[i];
    Tensor p_xw({xs, ws}, 0.0);
    Tensor p_wy({ws, spec.y_size}, 0.0);
    for (std::size_t xi = 0; xi < xs; ++xi)
      for (std::size_t y = 0; y < ys; ++y) {
        const double p = pxy[xi * ys + y];
        if (p == 0.0) continue;
        for (std::size_t w = 0; w < ws; ++w) {
          p_xw[xi * ws + w] += p * state.enc[i](xi, w);
          p_wy[w * ys + y] += p * state.enc[i](xi, w);
        }
      }
    out[i] = mutual_information(JointPmf{std::move(p_xw)}) - mutual_information(JointPmf{std::move(p_wy)});
  }
  return out;
}

}  // namespace rdr
