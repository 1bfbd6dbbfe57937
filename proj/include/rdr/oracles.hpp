#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rdr/solver.hpp"

namespace rdr {

namespace detail {

// Rate of the binary side-information problem before convexification:
// h(p * d) - h(d) with * the binary convolution.
inline double wz_base(double p, double d) {
  const double mixed = p * (1.0 - d) + (1.0 - p) * d;
  return binary_entropy(mixed) - binary_entropy(d);
}

inline double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

}  // namespace detail

// Lower convex envelope of the binary Wyner-Ziv rate expression together
// with the zero-rate point (p, 0), sampled on a dense distortion grid.
struct WZCurve {
  double crossover = 0.0;
  std::vector<double> d;       // grid 0..p inclusive
  std::vector<double> r;       // envelope values on the grid
  std::vector<double> hull_d;  // envelope vertices
  std::vector<double> hull_r;

  // Envelope value at an arbitrary distortion in [0, crossover].
  double value(double dist) const {
    if (dist < 0.0 || dist > crossover) fail(errc::out_of_range, "distortion outside [0, p]");
    if (dist >= hull_d.back()) return hull_r.back();
    auto it = std::upper_bound(hull_d.begin(), hull_d.end(), dist);
    const std::size_t j = static_cast<std::size_t>(it - hull_d.begin());
    const std::size_t i = j == 0 ? 0 : j - 1;
    double v;
    if (j == 0 || hull_d[j] == hull_d[i]) {
      v = hull_r[i];
    } else {
      const double f = (dist - hull_d[i]) / (hull_d[j] - hull_d[i]);
      v = hull_r[i] + f * (hull_r[j] - hull_r[i]);
    }
    // Chords between adjacent grid vertices sit above the curve where it is
    // already convex; taking the pointwise min restores it exactly there.
    v = std::min(v, detail::wz_base(crossover, dist));
    return v < 0.0 ? 0.0 : v;
  }
};

inline WZCurve wyner_ziv_curve(double p, double step = 1e-4) {
  if (!(p > 0.0) || p > 0.5) fail(errc::out_of_range, "crossover must lie in (0, 1/2]");
  if (!(step > 0.0) || step >= p) fail(errc::out_of_range, "step must lie in (0, p)");
  WZCurve c;
  c.crossover = p;
  std::vector<double> gx, gy;
  for (std::size_t k = 0;; ++k) {
    const double d = static_cast<double>(k) * step;
    if (d >= p - 1e-15) break;
    gx.push_back(d);
    gy.push_back(detail::wz_base(p, d));
  }
  gx.push_back(p);
  gy.push_back(0.0);  // side information alone reaches distortion p

  // Monotone-chain lower hull over the sampled points.
  for (std::size_t i = 0; i < gx.size(); ++i) {
    while (c.hull_d.size() >= 2 &&
           detail::cross(c.hull_d[c.hull_d.size() - 2], c.hull_r[c.hull_r.size() - 2],
                         c.hull_d.back(), c.hull_r.back(), gx[i], gy[i]) <= 0.0) {
      c.hull_d.pop_back();
      c.hull_r.pop_back();
    }
    c.hull_d.push_back(gx[i]);
    c.hull_r.push_back(gy[i]);
  }

  c.d = gx;
  c.r.reserve(gx.size());
  for (double d : gx) c.r.push_back(c.value(d));
  return c;
}

// R(p, D) of the binary source with side information: envelope of
// h(p * D) - h(D) with (p, 0).
inline double wyner_ziv_binary(double p, double dist) {
  return wyner_ziv_curve(p).value(dist);
}

struct BruteForceResult {
  double value = 0.0;
  std::vector<StochasticMatrix> enc;
  std::size_t evaluated = 0;
};

namespace detail {

inline void simplex_rows(std::size_t remaining, std::size_t slot, std::vector<std::size_t>& counts,
                         std::size_t steps, std::vector<std::vector<double>>& out) {
  if (slot + 1 == counts.size()) {
    counts[slot] = remaining;
    std::vector<double> row(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      row[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
    out.push_back(std::move(row));
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    counts[slot] = c;
    simplex_rows(remaining - c, slot + 1, counts, steps, out);
  }
}

// All distributions on `parts` outcomes with entries multiples of 1/steps.
inline std::vector<std::vector<double>> simplex_grid(std::size_t steps, std::size_t parts) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> counts(parts, 0);
  simplex_rows(steps, 0, counts, steps, out);
  return out;
}

}  // namespace detail

// Exhaustive minimization of the Lagrangian over encoder channels whose rows
// lie on a simplex grid of the given resolution; marginal channels and the
// decoder take their exact best responses at every grid point.
inline BruteForceResult brute_force_lagrangian_min(const ProblemSpec& spec_in, double lambda,
                                                   double resolution) {
  ProblemSpec spec = spec_in;
  spec.validate();
  if (!(resolution > 0.0) || resolution > 1.0) fail(errc::out_of_range, "resolution must lie in (0, 1]");
  const std::size_t steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  const std::size_t m = spec.num_sources;

  std::vector<std::vector<std::vector<double>>> choices(m);
  double configs = 1.0;
  std::size_t total_rows = 0;
  for (std::size_t i = 0; i < m; ++i) {
    choices[i] = detail::simplex_grid(steps, spec.aux_sizes[i]);
    configs *= std::pow(static_cast<double>(choices[i].size()), static_cast<double>(spec.x_sizes[i]));
    total_rows += spec.x_sizes[i];
  }
  if (configs > 1e7)
    fail(errc::grid_too_large, std::to_string(configs) + " encoder configurations exceed 1e7");

  // Row owners: which (source, row) each odometer digit addresses.
  std::vector<std::size_t> row_src(total_rows), row_idx(total_rows);
  {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t x = 0; x < spec.x_sizes[i]; ++x, ++pos) {
        row_src[pos] = i;
        row_idx[pos] = x;
      }
  }

  std::vector<StochasticMatrix> enc;
  for (std::size_t i = 0; i < m; ++i) enc.emplace_back(spec.x_sizes[i], spec.aux_sizes[i], 0.0);
  std::vector<StochasticMatrix> marg(m);

  BruteForceResult best;
  best.value = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> digit(total_rows, 0);
  bool done = false;
  while (!done) {
    for (std::size_t r = 0; r < total_rows; ++r) {
      const auto& row = choices[row_src[r]][digit[r]];
      for (std::size_t w = 0; w < row.size(); ++w) enc[row_src[r]](row_idx[r], w) = row[w];
    }
    for (std::size_t i = 0; i < m; ++i) marg[i] = detail::induced_marginal(spec, enc[i], i, nullptr);
    const Tensor dec = detail::bayes_decoder(spec, enc);
    const double value = detail::lagrangian_of(spec, enc, marg, dec, lambda, {});
    ++best.evaluated;
    if (value < best.value) {
      best.value = value;
      best.enc = enc;
    }

    done = true;
    for (std::size_t r = total_rows; r-- > 0;) {
      if (++digit[r] < choices[row_src[r]].size()) {
        done = false;
        break;
      }
      digit[r] = 0;
    }
  }
  return best;
}

// Stationarity gap of the encoder variables: per (source, input symbol), the
// spread of the Lagrangian partials over the supported outputs plus any
// positive violation of the partial <= level condition on unsupported ones.
inline double kkt_residual(const ProblemSpec& spec_in, const SolverState& state, double lambda) {
  ProblemSpec spec = spec_in;
  spec.validate();
  const double kSupport = 1e-8;
  double worst = 0.0;
  for (std::size_t m = 0; m < spec.num_sources; ++m) {
    const Tensor delta = detail::encoder_distortion_term(spec, state.enc, state.dec, m);
    const Tensor pxy = detail::source_side_marginal(spec, m);
    const std::size_t xs = spec.x_sizes[m], ys = spec.y_size, ws = spec.aux_sizes[m];
    for (std::size_t x = 0; x < xs; ++x) {
      double px = 0.0;
      for (std::size_t y = 0; y < ys; ++y) px += pxy[x * ys + y];
      if (px <= 0.0) continue;
      std::vector<double> partial(ws);
      for (std::size_t w = 0; w < ws; ++w) {
        double v = px * (log2_floored(state.enc[m](x, w)) + std::numbers::log2e);
        for (std::size_t y = 0; y < ys; ++y) {
          const double p = pxy[x * ys + y];
          if (p > 0.0) v -= p * log2_floored(state.marg[m](y, w));
        }
        v += lambda * delta[x * ws + w];
        partial[w] = v;
      }
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      double level = 0.0;
      std::size_t supported = 0;
      for (std::size_t w = 0; w < ws; ++w)
        if (state.enc[m](x, w) > kSupport) {
          lo = std::min(lo, partial[w]);
          hi = std::max(hi, partial[w]);
          level += partial[w];
          ++supported;
        }
      if (supported == 0) continue;
      level /= static_cast<double>(supported);
      // Zero entries satisfy the boundary condition when their partial sits at
      // or above the support level; mass would otherwise flow onto them.
      double violation = 0.0;
      for (std::size_t w = 0; w < ws; ++w)
        if (state.enc[m](x, w) <= kSupport) violation = std::max(violation, level - partial[w]);
      worst = std::max(worst, (hi - lo) + violation);
    }
  }
  return worst;
}

}  // namespace rdr
