#pragma once

#include <random>
#include <string>
#include <vector>

#include "rdr/rdr.hpp"

namespace rdrtest {

inline std::string problem_path(const std::string& name) {
  return std::string(RDR_PROBLEMS_DIR) + "/" + name;
}

inline rdr::LoadedProblem load_bundled(const std::string& name) {
  return rdr::parse_problem(problem_path(name));
}

inline rdr::StochasticMatrix random_channel(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  rdr::StochasticMatrix m(rows, cols, 0.0);
  std::exponential_distribution<double> exp1(1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = exp1(rng);
      s += m(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) /= s;
  }
  return m;
}

inline rdr::SolverState random_state(const rdr::ProblemSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<rdr::StochasticMatrix> enc;
  for (std::size_t i = 0; i < spec.num_sources; ++i)
    enc.push_back(random_channel(spec.x_sizes[i], spec.aux_sizes[i], rng));
  return rdr::make_state(spec, std::move(enc));
}

// Walks every (t, x_1..x_M, y, w_1..w_M, t_hat) cell and applies fn with the
// full-joint weight p(t,x,y) * prod_i q_i(w_i|x_i) * dec(t_hat|w,y). This is
// the deliberately naive contraction the fast paths are checked against.
template <typename Fn>
inline void for_each_full_cell(const rdr::ProblemSpec& spec, const rdr::SolverState& state, Fn&& fn) {
  const std::size_t nsrc = spec.num_sources;
  std::vector<std::size_t> x(nsrc, 0), w(nsrc, 0);
  std::vector<std::size_t> joint_idx(nsrc + 2, 0);
  std::vector<std::size_t> dec_idx(nsrc + 2, 0);
  for (std::size_t t = 0; t < spec.t_size; ++t) {
    x.assign(nsrc, 0);
    do {
      for (std::size_t y = 0; y < spec.y_size; ++y) {
        joint_idx[0] = t;
        for (std::size_t i = 0; i < nsrc; ++i) joint_idx[1 + i] = x[i];
        joint_idx[nsrc + 1] = y;
        const double pj = spec.joint.probs.at(joint_idx);
        if (pj == 0.0) continue;
        w.assign(nsrc, 0);
        do {
          double qprod = 1.0;
          for (std::size_t i = 0; i < nsrc; ++i) qprod *= state.enc[i](x[i], w[i]);
          for (std::size_t th = 0; th < spec.that_size; ++th) {
            dec_idx[0] = th;
            for (std::size_t i = 0; i < nsrc; ++i) dec_idx[1 + i] = w[i];
            dec_idx[nsrc + 1] = y;
            const double qd = state.dec.at(dec_idx);
            if (qd == 0.0) continue;
            fn(t, x, y, w, th, pj * qprod * qd);
          }
        } while (rdr::advance_index(w, spec.aux_sizes));
      }
    } while (rdr::advance_index(x, spec.x_sizes));
  }
}

inline double full_expected_distortion(const rdr::ProblemSpec& spec, const rdr::SolverState& state) {
  double total = 0.0;
  for_each_full_cell(spec, state,
                     [&](std::size_t t, const std::vector<std::size_t>&, std::size_t,
                         const std::vector<std::size_t>&, std::size_t th, double weight) {
                       total += weight * spec.distortion(t, th);
                     });
  return total;
}

// Term-by-term evaluation of the objective over the complete joint including
// the decoder, rather than the reduced per-source contraction.
inline double full_lagrangian(const rdr::ProblemSpec& spec, const rdr::SolverState& state,
                              double lambda) {
  double value = 0.0;
  for_each_full_cell(spec, state,
                     [&](std::size_t t, const std::vector<std::size_t>& x, std::size_t y,
                         const std::vector<std::size_t>& w, std::size_t th, double weight) {
                       for (std::size_t i = 0; i < spec.num_sources; ++i) {
                         const double q = state.enc[i](x[i], w[i]);
                         const double Q = state.marg[i](y, w[i]);
                         if (q > 0.0) value += weight * (std::log2(q) - rdr::log2_floored(Q));
                       }
                       value += weight * lambda * spec.distortion(t, th);
                     });
  return value;
}

// Literal numerator/denominator marginal update: sums the complete joint
// (including the decoder factor) over everything but (w_m, y).
inline rdr::StochasticMatrix full_marginal_update(const rdr::ProblemSpec& spec,
                                                  const rdr::SolverState& state, std::size_t m) {
  rdr::StochasticMatrix out(spec.y_size, spec.aux_sizes[m], 0.0);
  for_each_full_cell(spec, state,
                     [&](std::size_t, const std::vector<std::size_t>&, std::size_t y,
                         const std::vector<std::size_t>& w, std::size_t, double weight) {
                       out(y, w[m]) += weight;
                     });
  for (std::size_t y = 0; y < spec.y_size; ++y) {
    double s = 0.0;
    for (std::size_t wv = 0; wv < spec.aux_sizes[m]; ++wv) s += out(y, wv);
    if (s <= 0.0) {
      for (std::size_t wv = 0; wv < spec.aux_sizes[m]; ++wv)
        out(y, wv) = 1.0 / static_cast<double>(spec.aux_sizes[m]);
    } else {
      for (std::size_t wv = 0; wv < spec.aux_sizes[m]; ++wv) out(y, wv) /= s;
    }
  }
  return out;
}

inline std::vector<rdr::StochasticMatrix> identity_encoders(const rdr::ProblemSpec& spec) {
  std::vector<rdr::StochasticMatrix> enc;
  for (std::size_t i = 0; i < spec.num_sources; ++i) {
    rdr::StochasticMatrix q(spec.x_sizes[i], spec.aux_sizes[i], 0.0);
    for (std::size_t xv = 0; xv < spec.x_sizes[i]; ++xv) q(xv, xv % spec.aux_sizes[i]) = 1.0;
    enc.push_back(std::move(q));
  }
  return enc;
}

inline std::vector<rdr::StochasticMatrix> constant_encoders(const rdr::ProblemSpec& spec) {
  std::vector<rdr::StochasticMatrix> enc;
  for (std::size_t i = 0; i < spec.num_sources; ++i) {
    const std::size_t cols = spec.aux_sizes[i];
    rdr::StochasticMatrix q(spec.x_sizes[i], cols, 0.0);
    for (std::size_t xv = 0; xv < spec.x_sizes[i]; ++xv)
      for (std::size_t wv = 0; wv < cols; ++wv)
        q(xv, wv) = cols == 1 ? 1.0 : (wv == 0 ? 0.6 : 0.4 / static_cast<double>(cols - 1));
    enc.push_back(std::move(q));
  }
  return enc;
}

template <typename Fn>
inline rdr::errc thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const rdr::error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an rdr::error, none was thrown");
}

inline bool trace_non_increasing(const std::vector<double>& trace, double slack) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1] + slack) return false;
  return true;
}

}  // namespace rdrtest
