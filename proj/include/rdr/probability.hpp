#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rdr/tensor.hpp"

namespace rdr {

inline constexpr double kProbTol = 1e-12;   // normalization tolerance for PMFs and rows
inline constexpr double kLogFloor = 1e-300; // floor for log arguments

inline double log2_floored(double v) { return std::log2(v < kLogFloor ? kLogFloor : v); }
inline double ln_floored(double v) { return std::log(v < kLogFloor ? kLogFloor : v); }

// A joint PMF over a fixed axis order chosen by the caller. For problem joints
// the order is (t, x_1, ..., x_M, y).
struct JointPmf {
  Tensor probs;
};

inline void validate_joint(const JointPmf& pmf) {
  const auto& t = pmf.probs;
  if (t.rank() == 0 || t.size() == 0) fail(errc::shape_mismatch, "joint PMF has no cells");
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] < 0.0 || !std::isfinite(t[i]))
      fail(errc::negative_probability,
           "entry " + std::to_string(i) + " = " + std::to_string(t[i]));
  double dev = std::abs(t.sum() - 1.0);
  if (dev > kProbTol)
    fail(errc::not_normalized, "PMF sums to 1 " + (t.sum() > 1.0 ? std::string("+ ") : std::string("- ")) +
                                   std::to_string(dev));
}

namespace detail {

inline void check_axes(std::span<const std::size_t> axes, std::size_t rank) {
  for (auto a : axes)
    if (a >= rank) fail(errc::out_of_range, "axis " + std::to_string(a) + " out of range");
  for (std::size_t i = 0; i < axes.size(); ++i)
    for (std::size_t j = i + 1; j < axes.size(); ++j)
      if (axes[i] == axes[j]) fail(errc::axes_overlap, "axis " + std::to_string(axes[i]) + " repeated");
}

// Sum out every axis not listed; output axes appear exactly in the given order.
inline Tensor project(const Tensor& src, std::span<const std::size_t> axes) {
  check_axes(axes, src.rank());
  std::vector<std::size_t> out_shape(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = src.extent(axes[i]);
  Tensor out(out_shape, 0.0);
  for (std::size_t flat = 0; flat < src.size(); ++flat) {
    const double v = src[flat];
    if (v == 0.0) continue;
    std::size_t of = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) of += src.index_of(flat, axes[i]) * out.stride(i);
    out[of] += v;
  }
  return out;
}

}  // namespace detail

// Marginal over the kept axes (ascending original order).
inline JointPmf marginal(const JointPmf& pmf, std::span<const std::size_t> keep_axes) {
  if (keep_axes.empty()) fail(errc::empty_axis_set, "marginal needs at least one axis");
  std::vector<std::size_t> axes(keep_axes.begin(), keep_axes.end());
  std::sort(axes.begin(), axes.end());
  return JointPmf{detail::project(pmf.probs, axes)};
}

// Conditional p(target | given), laid out with the given axes leading and the
// target axes trailing. Zero-probability conditioning slices are filled
// uniformly and their flat given-index recorded in `degenerate`.
struct ConditionalTable {
  Tensor table;                          // axes: (given..., target...)
  std::size_t given_rank = 0;            // leading axes count
  std::vector<std::size_t> degenerate;   // flat indices over the given block
};

inline ConditionalTable conditional(const JointPmf& pmf, std::span<const std::size_t> target_axes,
                                    std::span<const std::size_t> given_axes) {
  if (target_axes.empty()) fail(errc::empty_axis_set, "conditional needs target axes");
  std::vector<std::size_t> all(given_axes.begin(), given_axes.end());
  all.insert(all.end(), target_axes.begin(), target_axes.end());
  detail::check_axes(all, pmf.probs.rank());  // rejects target/given overlap
  Tensor joint = detail::project(pmf.probs, all);

  std::size_t given_cells = 1, target_cells = 1;
  for (std::size_t i = 0; i < given_axes.size(); ++i) given_cells *= joint.extent(i);
  for (std::size_t i = given_axes.size(); i < joint.rank(); ++i) target_cells *= joint.extent(i);

  ConditionalTable out{std::move(joint), given_axes.size(), {}};
  for (std::size_t g = 0; g < given_cells; ++g) {
    double mass = 0.0;
    for (std::size_t t = 0; t < target_cells; ++t) mass += out.table[g * target_cells + t];
    if (mass <= 0.0) {
      for (std::size_t t = 0; t < target_cells; ++t)
        out.table[g * target_cells + t] = 1.0 / static_cast<double>(target_cells);
      out.degenerate.push_back(g);
    } else {
      for (std::size_t t = 0; t < target_cells; ++t) out.table[g * target_cells + t] /= mass;
    }
  }
  return out;
}

// Shannon entropy in bits of a dense distribution; 0 log 0 = 0.
inline double entropy_bits(const Tensor& t) {
  double h = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0) h -= t[i] * std::log2(t[i]);
  return h;
}

// I(axis0; axis1) of a two-axis PMF, in bits.
inline double mutual_information(const JointPmf& pmf) {
  validate_joint(pmf);
  if (pmf.probs.rank() != 2) fail(errc::shape_mismatch, "mutual_information needs a 2-axis PMF");
  const std::size_t a0 = 0, a1 = 1;
  double h = entropy_bits(detail::project(pmf.probs, std::vector<std::size_t>{a0})) +
             entropy_bits(detail::project(pmf.probs, std::vector<std::size_t>{a1})) -
             entropy_bits(pmf.probs);
  return h < 0.0 ? 0.0 : h;
}

// I(A; B | C) in bits via H(AC) + H(BC) - H(ABC) - H(C). C may be empty.
inline double conditional_mutual_information(const JointPmf& pmf, std::span<const std::size_t> a_axes,
                                             std::span<const std::size_t> b_axes,
                                             std::span<const std::size_t> c_axes) {
  std::vector<std::size_t> all(a_axes.begin(), a_axes.end());
  all.insert(all.end(), b_axes.begin(), b_axes.end());
  all.insert(all.end(), c_axes.begin(), c_axes.end());
  detail::check_axes(all, pmf.probs.rank());
  if (a_axes.empty() || b_axes.empty()) fail(errc::empty_axis_set, "CMI needs nonempty A and B");

  auto h_of = [&](std::vector<std::size_t> axes) {
    if (axes.empty()) return 0.0;
    std::sort(axes.begin(), axes.end());
    return entropy_bits(detail::project(pmf.probs, axes));
  };
  std::vector<std::size_t> ac(a_axes.begin(), a_axes.end()), bc(b_axes.begin(), b_axes.end());
  ac.insert(ac.end(), c_axes.begin(), c_axes.end());
  bc.insert(bc.end(), c_axes.begin(), c_axes.end());
  double v = h_of(ac) + h_of(bc) - h_of(all) - h_of({c_axes.begin(), c_axes.end()});
  return v < 0.0 ? 0.0 : v;
}

struct IndependenceReport {
  bool independent = false;
  double max_deviation = 0.0;
};

// Checks p(x_1..x_M | y) = prod_i p(x_i | y) on a joint laid out as
// (t, x_1, ..., x_M, y). Zero-probability y symbols contribute nothing.
inline IndependenceReport check_conditional_independence(const JointPmf& pmf, double tol) {
  const std::size_t rank = pmf.probs.rank();
  if (rank < 3) fail(errc::shape_mismatch, "joint must have axes (t, x_1..x_M, y)");
  const std::size_t m = rank - 2;
  const std::size_t y_axis = rank - 1;

  std::vector<std::size_t> xy_axes;
  for (std::size_t i = 1; i <= m; ++i) xy_axes.push_back(i);
  xy_axes.push_back(y_axis);
  Tensor p_xy = detail::project(pmf.probs, xy_axes);  // (x_1..x_M, y)

  // Per-source conditionals p(x_i | y), rows indexed by y.
  std::vector<Tensor> per_source;
  for (std::size_t i = 1; i <= m; ++i) {
    ConditionalTable c = conditional(pmf, std::vector<std::size_t>{i}, std::vector<std::size_t>{y_axis});
    per_source.push_back(std::move(c.table));  // (y, x_i)
  }

  const std::size_t y_size = pmf.probs.extent(y_axis);
  std::vector<double> p_y(y_size, 0.0);
  for (std::size_t flat = 0; flat < p_xy.size(); ++flat)
    p_y[p_xy.index_of(flat, m)] += p_xy[flat];

  double dev = 0.0;
  for (std::size_t flat = 0; flat < p_xy.size(); ++flat) {
    const std::size_t y = p_xy.index_of(flat, m);
    if (p_y[y] <= 0.0) continue;
    double prod = 1.0;
    for (std::size_t i = 0; i < m; ++i) prod *= per_source[i][y * per_source[i].extent(1) + p_xy.index_of(flat, i)];
    dev = std::max(dev, std::abs(p_xy[flat] / p_y[y] - prod));
  }
  return {dev <= tol, dev};
}

// h(p) in bits; endpoints return 0.
inline double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) fail(errc::out_of_range, "binary_entropy argument " + std::to_string(p));
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Row-stochastic matrix; rows index the input alphabet.
struct StochasticMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> p;

  StochasticMatrix() = default;
  StochasticMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), p(r * c, fill) {}

  double operator()(std::size_t r, std::size_t c) const { return p[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return p[r * cols + c]; }
};

inline void validate_stochastic(const StochasticMatrix& m) {
  if (m.rows == 0 || m.cols == 0 || m.p.size() != m.rows * m.cols)
    fail(errc::shape_mismatch, "stochastic matrix shape");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (m(r, c) < 0.0 || !std::isfinite(m(r, c)))
        fail(errc::negative_probability, "row " + std::to_string(r));
      s += m(r, c);
    }
    if (std::abs(s - 1.0) > kProbTol)
      fail(errc::not_normalized, "row " + std::to_string(r) + " sums to " + std::to_string(s));
  }
}

// Distortion values d(t, t_hat) >= 0; rows index t, columns t_hat.
struct DistortionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> d;

  DistortionMatrix() = default;
  DistortionMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), d(r * c, fill) {}

  double operator()(std::size_t r, std::size_t c) const { return d[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return d[r * cols + c]; }

  double max_value() const { return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end()); }
};

inline void validate_distortion(const DistortionMatrix& m) {
  if (m.rows == 0 || m.cols == 0 || m.d.size() != m.rows * m.cols)
    fail(errc::shape_mismatch, "distortion matrix shape");
  for (double v : m.d)
    if (v < 0.0 || !std::isfinite(v))
      fail(errc::validation_error, "distortion entries must be finite and nonnegative");
}

}  // namespace rdr
