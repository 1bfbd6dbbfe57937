#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdr/probability.hpp"

namespace rdr {

// A finite-alphabet remote source coding problem: latent T, observations
// X_1..X_M, side information Y at the decoder, reconstruction alphabet T_hat.
// The joint is laid out over axes (t, x_1, ..., x_M, y).
struct ProblemSpec {
  std::string name;
  std::size_t num_sources = 0;
  std::size_t t_size = 0;
  std::vector<std::size_t> x_sizes;
  std::size_t y_size = 0;
  std::size_t that_size = 0;
  JointPmf joint;
  DistortionMatrix distortion;            // t_size x that_size
  std::vector<std::size_t> aux_sizes;     // |W_i|, defaulted in validate()

  std::size_t t_axis() const { return 0; }
  std::size_t x_axis(std::size_t i) const { return 1 + i; }
  std::size_t y_axis() const { return 1 + num_sources; }

  void validate() {
    if (num_sources == 0 || x_sizes.size() != num_sources)
      fail(errc::shape_mismatch, "need one observation alphabet per source");
    if (t_size == 0 || y_size == 0 || that_size == 0)
      fail(errc::shape_mismatch, "alphabet sizes must be positive");
    if (joint.probs.rank() != num_sources + 2)
      fail(errc::shape_mismatch, "joint must have axes (t, x_1..x_M, y)");
    if (joint.probs.extent(0) != t_size || joint.probs.extent(num_sources + 1) != y_size)
      fail(errc::shape_mismatch, "joint extents disagree with declared alphabets");
    for (std::size_t i = 0; i < num_sources; ++i)
      if (joint.probs.extent(1 + i) != x_sizes[i])
        fail(errc::shape_mismatch, "joint extent for source " + std::to_string(i + 1));
    validate_joint(joint);
    if (distortion.rows != t_size || distortion.cols != that_size)
      fail(errc::shape_mismatch, "distortion matrix must be |T| x |T_hat|");
    validate_distortion(distortion);
    if (aux_sizes.empty()) {
      aux_sizes.resize(num_sources);
      for (std::size_t i = 0; i < num_sources; ++i) aux_sizes[i] = x_sizes[i] + 1;
    }
    if (aux_sizes.size() != num_sources)
      fail(errc::shape_mismatch, "need one auxiliary alphabet size per source");
    for (auto w : aux_sizes)
      if (w == 0) fail(errc::shape_mismatch, "auxiliary alphabet sizes must be positive");
  }
};

// Binary symmetric channel with the given crossover probability.
inline StochasticMatrix bsc(double crossover) {
  if (crossover < 0.0 || crossover > 1.0) fail(errc::out_of_range, "crossover probability");
  StochasticMatrix m(2, 2);
  m(0, 0) = 1.0 - crossover;
  m(0, 1) = crossover;
  m(1, 0) = crossover;
  m(1, 1) = 1.0 - crossover;
  return m;
}

// d(t, t_hat) = 1[t != t_hat] on a common alphabet of size n.
inline DistortionMatrix hamming_distortion(std::size_t n) {
  DistortionMatrix d(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.0;
  return d;
}

// Component-wise Hamming sum on a product alphabet. Symbols decompose
// row-major over the component sizes; d(t, t_hat) counts differing components.
inline DistortionMatrix hamming_sum_distortion(std::span<const std::size_t> component_sizes) {
  if (component_sizes.empty()) fail(errc::empty_axis_set, "need at least one component");
  std::size_t n = 1;
  for (auto c : component_sizes) {
    if (c == 0) fail(errc::shape_mismatch, "component sizes must be positive");
    n *= c;
  }
  DistortionMatrix d(n, n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      std::size_t ra = a, rb = b;
      double mismatches = 0.0;
      for (std::size_t k = component_sizes.size(); k-- > 0;) {
        const std::size_t c = component_sizes[k];
        if (ra % c != rb % c) mismatches += 1.0;
        ra /= c;
        rb /= c;
      }
      d(a, b) = mismatches;
    }
  return d;
}

// Builds the dense joint p(t, x, y) = p(y) * prod_i p(x_i|y) * p(t|x, y).
// `channels[i]` has rows indexed by y and columns by x_i. `t_given_xy` is a
// tensor over (x_1..x_M, y, t) whose trailing axis is a distribution on t.
inline JointPmf expand_factored(std::span<const double> p_y,
                                std::span<const StochasticMatrix> channels,
                                const Tensor& t_given_xy) {
  const std::size_t m = channels.size();
  const std::size_t y_size = p_y.size();
  if (m == 0) fail(errc::shape_mismatch, "need at least one source channel");
  if (y_size == 0) fail(errc::shape_mismatch, "p(y) is empty");
  if (t_given_xy.rank() != m + 2) fail(errc::shape_mismatch, "t kernel needs axes (x_1..x_M, y, t)");
  for (std::size_t i = 0; i < m; ++i) {
    if (channels[i].rows != y_size) fail(errc::shape_mismatch, "channel rows must index y");
    if (t_given_xy.extent(i) != channels[i].cols)
      fail(errc::shape_mismatch, "t kernel extent for source " + std::to_string(i + 1));
  }
  if (t_given_xy.extent(m) != y_size) fail(errc::shape_mismatch, "t kernel y extent");
  const std::size_t t_size = t_given_xy.extent(m + 1);

  std::vector<std::size_t> shape{t_size};
  for (std::size_t i = 0; i < m; ++i) shape.push_back(channels[i].cols);
  shape.push_back(y_size);
  Tensor out(shape, 0.0);

  for (std::size_t kflat = 0; kflat < t_given_xy.size(); ++kflat) {
    const std::size_t t = t_given_xy.index_of(kflat, m + 1);
    const std::size_t y = t_given_xy.index_of(kflat, m);
    double w = p_y[y] * t_given_xy[kflat];
    std::size_t oflat = t * out.stride(0) + y;  // y is the last axis, stride 1
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t xi = t_given_xy.index_of(kflat, i);
      w *= channels[i](y, xi);
      oflat += xi * out.stride(1 + i);
    }
    out[oflat] += w;
  }
  return JointPmf{std::move(out)};
}

// Deterministic-T overload: `t_map` is flat row-major over (x_1..x_M, y).
inline JointPmf expand_factored(std::span<const double> p_y,
                                std::span<const StochasticMatrix> channels,
                                std::span<const std::size_t> t_map, std::size_t t_size) {
  const std::size_t m = channels.size();
  if (m == 0) fail(errc::shape_mismatch, "need at least one source channel");
  std::vector<std::size_t> shape;
  for (std::size_t i = 0; i < m; ++i) shape.push_back(channels[i].cols);
  shape.push_back(p_y.size());
  std::size_t cells = 1;
  for (auto s : shape) cells *= s;
  if (t_map.size() != cells) fail(errc::shape_mismatch, "t map must cover every (x, y) cell");
  shape.push_back(t_size);
  Tensor kernel(shape, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    if (t_map[i] >= t_size) fail(errc::out_of_range, "t map value " + std::to_string(t_map[i]));
    kernel[i * t_size + t_map[i]] = 1.0;
  }
  return expand_factored(p_y, channels, kernel);
}

// The canonical two-source benchmark: Y uniform binary, X_i = BSC(p_i)(Y),
// T = (X_1, X_2), Hamming-sum distortion.
inline ProblemSpec make_two_bsc(double p1, double p2) {
  ProblemSpec spec;
  spec.name = "two_bsc";
  spec.num_sources = 2;
  spec.x_sizes = {2, 2};
  spec.t_size = 4;
  spec.that_size = 4;
  spec.y_size = 2;
  const std::vector<double> p_y{0.5, 0.5};
  const std::vector<StochasticMatrix> channels{bsc(p1), bsc(p2)};
  // t = 2*x1 + x2 over cells (x1, x2, y) row-major.
  std::vector<std::size_t> t_map(8);
  for (std::size_t x1 = 0; x1 < 2; ++x1)
    for (std::size_t x2 = 0; x2 < 2; ++x2)
      for (std::size_t y = 0; y < 2; ++y) t_map[(x1 * 2 + x2) * 2 + y] = 2 * x1 + x2;
  spec.joint = expand_factored(p_y, channels, t_map, 4);
  const std::vector<std::size_t> comp{2, 2};
  spec.distortion = hamming_sum_distortion(comp);
  spec.validate();
  return spec;
}

// Single-source binary Wyner–Ziv benchmark: Y uniform, X = BSC(p)(Y), T = X,
// Hamming distortion.
inline ProblemSpec make_wz_binary(double p) {
  ProblemSpec spec;
  spec.name = "wz_binary";
  spec.num_sources = 1;
  spec.x_sizes = {2};
  spec.t_size = 2;
  spec.that_size = 2;
  spec.y_size = 2;
  const std::vector<double> p_y{0.5, 0.5};
  const std::vector<StochasticMatrix> channels{bsc(p)};
  const std::vector<std::size_t> t_map{0, 0, 1, 1};  // t = x over cells (x, y)
  spec.joint = expand_factored(p_y, channels, t_map, 2);
  spec.distortion = hamming_distortion(2);
  spec.validate();
  return spec;
}

}  // namespace rdr
