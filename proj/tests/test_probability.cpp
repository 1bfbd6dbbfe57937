#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rdr/rdr.hpp"

using rdr::JointPmf;
using rdr::Tensor;
using Catch::Matchers::WithinAbs;

namespace {

JointPmf uniform_pmf(std::vector<std::size_t> shape) {
  std::size_t cells = 1;
  for (auto s : shape) cells *= s;
  return JointPmf{Tensor(shape, 1.0 / static_cast<double>(cells))};
}

constexpr double kH03 = 0.8812908992306927;  // -0.3 log2 0.3 - 0.7 log2 0.7

}  // namespace

TEST_CASE("tensor indexing round-trips") {
  Tensor t({2, 3, 4}, 0.0);
  REQUIRE(t.rank() == 3);
  REQUIRE(t.size() == 24);
  std::vector<std::size_t> idx{0, 0, 0};
  std::size_t flat = 0;
  do {
    REQUIRE(t.flat_index(idx) == flat);
    for (std::size_t a = 0; a < 3; ++a) REQUIRE(t.index_of(flat, a) == idx[a]);
    ++flat;
  } while (rdr::advance_index(idx, t.shape()));
  REQUIRE(flat == 24);
}

TEST_CASE("tensor shape validation") {
  REQUIRE(rdrtest::thrown_code([] { Tensor t({2, 0, 3}, 0.0); }) == rdr::errc::shape_mismatch);
  REQUIRE(rdrtest::thrown_code([] { Tensor t(std::vector<std::size_t>{}, 0.0); }) ==
          rdr::errc::shape_mismatch);
  REQUIRE(rdrtest::thrown_code([] {
            Tensor t({2, 2}, std::vector<double>{1.0, 2.0, 3.0});
          }) == rdr::errc::shape_mismatch);
}

TEST_CASE("joint validation accepts the uniform pmf") {
  REQUIRE_NOTHROW(rdr::validate_joint(uniform_pmf({2, 2, 2, 2})));
}

TEST_CASE("joint validation rejects a negative entry") {
  JointPmf pmf = uniform_pmf({2, 2});
  pmf.probs[1] = -0.1;
  pmf.probs[0] = 0.35 + 0.25;
  REQUIRE(rdrtest::thrown_code([&] { rdr::validate_joint(pmf); }) ==
          rdr::errc::negative_probability);
}

TEST_CASE("joint validation reports the normalization deviation") {
  JointPmf pmf = uniform_pmf({2, 2});
  for (auto& v : pmf.probs.data()) v *= 0.98;
  try {
    rdr::validate_joint(pmf);
    FAIL("expected NotNormalized");
  } catch (const rdr::error& e) {
    REQUIRE(e.code() == rdr::errc::not_normalized);
    REQUIRE(std::string(e.what()).find("0.02") != std::string::npos);
  }
}

TEST_CASE("marginal onto one axis of two bsc observations matches hand values") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.3, 0.3);
  // (x1, y) marginal: matching cells carry (1-0.3)/2, mismatching 0.3/2.
  const JointPmf m = rdr::marginal(spec.joint, std::vector<std::size_t>{1, 3});
  REQUIRE_THAT(m.probs.at(std::vector<std::size_t>{0, 0}), WithinAbs(0.35, 1e-15));
  REQUIRE_THAT(m.probs.at(std::vector<std::size_t>{0, 1}), WithinAbs(0.15, 1e-15));
  REQUIRE_THAT(m.probs.at(std::vector<std::size_t>{1, 0}), WithinAbs(0.15, 1e-15));
  REQUIRE_THAT(m.probs.at(std::vector<std::size_t>{1, 1}), WithinAbs(0.35, 1e-15));
}

TEST_CASE("marginal keeping all axes is the identity") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.3, 0.3);
  const JointPmf m = rdr::marginal(spec.joint, std::vector<std::size_t>{0, 1, 2, 3});
  REQUIRE(m.probs == spec.joint.probs);
}

TEST_CASE("marginal of a uniform square is uniform") {
  const JointPmf m = rdr::marginal(uniform_pmf({2, 2}), std::vector<std::size_t>{0});
  REQUIRE_THAT(m.probs[0], WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(m.probs[1], WithinAbs(0.5, 1e-15));
}

TEST_CASE("marginal rejects an empty axis set and bad axes") {
  const JointPmf pmf = uniform_pmf({2, 2});
  REQUIRE(rdrtest::thrown_code([&] { rdr::marginal(pmf, std::vector<std::size_t>{}); }) ==
          rdr::errc::empty_axis_set);
  REQUIRE(rdrtest::thrown_code([&] { rdr::marginal(pmf, std::vector<std::size_t>{2}); }) ==
          rdr::errc::out_of_range);
}

TEST_CASE("marginalization commutes") {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> exp1(1.0);
  Tensor t({3, 2, 4, 2}, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) total += (t[i] = exp1(rng));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] /= total;
  const JointPmf pmf{t};

  const JointPmf both = rdr::marginal(pmf, std::vector<std::size_t>{1, 3});
  const JointPmf first = rdr::marginal(pmf, std::vector<std::size_t>{0, 1, 3});
  const JointPmf then_second = rdr::marginal(first, std::vector<std::size_t>{1, 2});
  REQUIRE(both.probs.shape() == then_second.probs.shape());
  for (std::size_t i = 0; i < both.probs.size(); ++i)
    REQUIRE_THAT(both.probs[i], WithinAbs(then_second.probs[i], 1e-14));
  REQUIRE_THAT(both.probs.sum(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("conditional rows of x1 given y match the channel") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.3, 0.3);
  const rdr::ConditionalTable c =
      rdr::conditional(spec.joint, std::vector<std::size_t>{1}, std::vector<std::size_t>{3});
  REQUIRE(c.given_rank == 1);
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{0, 0}), WithinAbs(0.7, 1e-12));
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{0, 1}), WithinAbs(0.3, 1e-12));
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{1, 0}), WithinAbs(0.3, 1e-12));
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{1, 1}), WithinAbs(0.7, 1e-12));
  REQUIRE(c.degenerate.empty());
}

TEST_CASE("conditional of independent uniforms is uniform") {
  const rdr::ConditionalTable c =
      rdr::conditional(uniform_pmf({2, 2}), std::vector<std::size_t>{0}, std::vector<std::size_t>{1});
  for (std::size_t i = 0; i < c.table.size(); ++i) REQUIRE_THAT(c.table[i], WithinAbs(0.5, 1e-15));
}

TEST_CASE("conditional flags zero-probability conditioning rows") {
  Tensor t({2, 3}, 0.0);  // column y=2 carries no mass
  t[t.flat_index(std::vector<std::size_t>{0, 0})] = 0.5;
  t[t.flat_index(std::vector<std::size_t>{1, 1})] = 0.5;
  const rdr::ConditionalTable c =
      rdr::conditional(JointPmf{t}, std::vector<std::size_t>{0}, std::vector<std::size_t>{1});
  REQUIRE(c.degenerate == std::vector<std::size_t>{2});
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{2, 0}), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(c.table.at(std::vector<std::size_t>{2, 1}), WithinAbs(0.5, 1e-15));
}

TEST_CASE("conditional rejects overlapping axis sets") {
  REQUIRE(rdrtest::thrown_code([] {
            rdr::conditional(uniform_pmf({2, 2}), std::vector<std::size_t>{0},
                             std::vector<std::size_t>{0});
          }) == rdr::errc::axes_overlap);
}

TEST_CASE("conditional then re-multiplying reconstructs the joint") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.25, 0.4);
  const rdr::ConditionalTable c = rdr::conditional(spec.joint, std::vector<std::size_t>{0, 1, 2},
                                                   std::vector<std::size_t>{3});
  const JointPmf py = rdr::marginal(spec.joint, std::vector<std::size_t>{3});
  std::vector<std::size_t> idx(4, 0);
  do {
    // conditional table axes: (y, t, x1, x2)
    const double rebuilt =
        py.probs[idx[3]] *
        c.table.at(std::vector<std::size_t>{idx[3], idx[0], idx[1], idx[2]});
    REQUIRE_THAT(rebuilt, WithinAbs(spec.joint.probs.at(idx), 1e-12));
  } while (rdr::advance_index(idx, spec.joint.probs.shape()));
}

TEST_CASE("binary entropy endpoints and fixture values") {
  REQUIRE(rdr::binary_entropy(0.0) == 0.0);
  REQUIRE(rdr::binary_entropy(1.0) == 0.0);
  REQUIRE_THAT(rdr::binary_entropy(0.5), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(rdr::binary_entropy(0.3), WithinAbs(kH03, 1e-15));
  REQUIRE(rdrtest::thrown_code([] { rdr::binary_entropy(-0.01); }) == rdr::errc::out_of_range);
  REQUIRE(rdrtest::thrown_code([] { rdr::binary_entropy(1.01); }) == rdr::errc::out_of_range);
}

TEST_CASE("mutual information of a noiseless binary pair is one bit") {
  Tensor t({2, 2}, std::vector<double>{0.5, 0.0, 0.0, 0.5});
  REQUIRE_THAT(rdr::mutual_information(JointPmf{t}), WithinAbs(1.0, 1e-12));
}

TEST_CASE("mutual information of an independent product is zero") {
  Tensor t({2, 3}, 0.0);
  const double px[2] = {0.4, 0.6};
  const double pyv[3] = {0.2, 0.3, 0.5};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) t[a * 3 + b] = px[a] * pyv[b];
  REQUIRE_THAT(rdr::mutual_information(JointPmf{t}), WithinAbs(0.0, 1e-12));
}

TEST_CASE("mutual information of a bsc pair matches the entropy identity") {
  Tensor t({2, 2}, std::vector<double>{0.35, 0.15, 0.15, 0.35});
  const double mi = rdr::mutual_information(JointPmf{t});
  REQUIRE_THAT(mi, WithinAbs(1.0 - kH03, 1e-12));
  REQUIRE_THAT(mi, WithinAbs(0.11871, 5e-6));

  Tensor tt({2, 2}, std::vector<double>{0.35, 0.15, 0.15, 0.35});  // symmetric here
  REQUIRE_THAT(rdr::mutual_information(JointPmf{tt}), WithinAbs(mi, 1e-15));
}

TEST_CASE("mutual information is symmetric and relabel-invariant") {
  Tensor t({2, 3}, std::vector<double>{0.05, 0.25, 0.1, 0.3, 0.1, 0.2});
  Tensor transposed({3, 2}, 0.0);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) transposed[b * 2 + a] = t[a * 3 + b];
  const double mi = rdr::mutual_information(JointPmf{t});
  REQUIRE_THAT(rdr::mutual_information(JointPmf{transposed}), WithinAbs(mi, 1e-13));

  Tensor relabeled({2, 3}, 0.0);  // swap symbols of the first axis
  for (std::size_t b = 0; b < 3; ++b) {
    relabeled[0 * 3 + b] = t[1 * 3 + b];
    relabeled[1 * 3 + b] = t[0 * 3 + b];
  }
  REQUIRE_THAT(rdr::mutual_information(JointPmf{relabeled}), WithinAbs(mi, 1e-13));
}

TEST_CASE("conditional mutual information with empty conditioning equals mutual information") {
  Tensor t({2, 3}, std::vector<double>{0.05, 0.25, 0.1, 0.3, 0.1, 0.2});
  const double mi = rdr::mutual_information(JointPmf{t});
  const double cmi = rdr::conditional_mutual_information(
      JointPmf{t}, std::vector<std::size_t>{0}, std::vector<std::size_t>{1}, {});
  REQUIRE_THAT(cmi, WithinAbs(mi, 1e-13));
}

TEST_CASE("conditioning on a determining variable gives zero") {
  // c uniform on {0,1}; a = b = c.
  Tensor t({2, 2, 2}, 0.0);
  t.at(std::vector<std::size_t>{0, 0, 0}) = 0.5;
  t.at(std::vector<std::size_t>{1, 1, 1}) = 0.5;
  const double cmi = rdr::conditional_mutual_information(
      JointPmf{t}, std::vector<std::size_t>{0}, std::vector<std::size_t>{1},
      std::vector<std::size_t>{2});
  REQUIRE_THAT(cmi, WithinAbs(0.0, 1e-12));
}

TEST_CASE("conditioning on an independent variable changes nothing") {
  Tensor ab({2, 3}, std::vector<double>{0.05, 0.25, 0.1, 0.3, 0.1, 0.2});
  Tensor t({2, 3, 2}, 0.0);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 2; ++c)
        t.at(std::vector<std::size_t>{a, b, c}) = ab[a * 3 + b] * 0.5;
  const double cmi = rdr::conditional_mutual_information(
      JointPmf{t}, std::vector<std::size_t>{0}, std::vector<std::size_t>{1},
      std::vector<std::size_t>{2});
  REQUIRE_THAT(cmi, WithinAbs(rdr::mutual_information(JointPmf{ab}), 1e-12));
}

TEST_CASE("the two observations are conditionally independent given side information") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.3, 0.3);
  const double cmi = rdr::conditional_mutual_information(
      spec.joint, std::vector<std::size_t>{1}, std::vector<std::size_t>{2},
      std::vector<std::size_t>{3});
  REQUIRE_THAT(cmi, WithinAbs(0.0, 1e-12));

  const rdr::IndependenceReport rep = rdr::check_conditional_independence(spec.joint, 1e-9);
  REQUIRE(rep.independent);
  REQUIRE(rep.max_deviation <= 1e-14);
}

TEST_CASE("conditional mutual information rejects overlapping sets") {
  const rdr::ProblemSpec spec = rdr::make_two_bsc(0.3, 0.3);
  REQUIRE(rdrtest::thrown_code([&] {
            rdr::conditional_mutual_information(spec.joint, std::vector<std::size_t>{1},
                                                std::vector<std::size_t>{1},
                                                std::vector<std::size_t>{3});
          }) == rdr::errc::axes_overlap);
}

TEST_CASE("copied observations are flagged as dependent") {
  // x2 = x1, y independent of both.
  Tensor t({2, 2, 2}, 0.0);  // (x1, x2, y)
  t.at(std::vector<std::size_t>{0, 0, 0}) = 0.25;
  t.at(std::vector<std::size_t>{0, 0, 1}) = 0.25;
  t.at(std::vector<std::size_t>{1, 1, 0}) = 0.25;
  t.at(std::vector<std::size_t>{1, 1, 1}) = 0.25;
  // layout (t, x1..xM, y) with a singleton t axis
  Tensor with_t({1, 2, 2, 2}, t.data());
  const rdr::IndependenceReport rep = rdr::check_conditional_independence(JointPmf{with_t}, 1e-9);
  REQUIRE_FALSE(rep.independent);
  REQUIRE(rep.max_deviation > 0.05);
}

TEST_CASE("single-source independence check is vacuous") {
  const rdr::ProblemSpec spec = rdr::make_wz_binary(0.3);
  const rdr::IndependenceReport rep = rdr::check_conditional_independence(spec.joint, 1e-9);
  REQUIRE(rep.independent);
  REQUIRE(rep.max_deviation <= 1e-14);
}

TEST_CASE("any factored construction passes the independence check") {
  std::vector<double> p_y{0.25, 0.45, 0.3};
  std::vector<rdr::StochasticMatrix> channels;
  rdr::StochasticMatrix c1(3, 2, 0.0);
  c1(0, 0) = 0.9; c1(0, 1) = 0.1;
  c1(1, 0) = 0.4; c1(1, 1) = 0.6;
  c1(2, 0) = 0.2; c1(2, 1) = 0.8;
  rdr::StochasticMatrix c2(3, 3, 0.0);
  c2(0, 0) = 0.5; c2(0, 1) = 0.3; c2(0, 2) = 0.2;
  c2(1, 0) = 0.1; c2(1, 1) = 0.1; c2(1, 2) = 0.8;
  c2(2, 0) = 0.3; c2(2, 1) = 0.4; c2(2, 2) = 0.3;
  channels.push_back(c1);
  channels.push_back(c2);
  // stochastic t kernel over (x1, x2, y) -> t with |T| = 2
  Tensor kernel({2, 3, 3, 2}, 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.1, 0.9);
  std::vector<std::size_t> cell{0, 0, 0};
  do {
    const double a = uni(rng);
    kernel.at(std::vector<std::size_t>{cell[0], cell[1], cell[2], 0}) = a;
    kernel.at(std::vector<std::size_t>{cell[0], cell[1], cell[2], 1}) = 1.0 - a;
  } while (rdr::advance_index(cell, std::vector<std::size_t>{2, 3, 3}));

  const JointPmf joint = rdr::expand_factored(p_y, channels, kernel);
  REQUIRE_NOTHROW(rdr::validate_joint(joint));
  const rdr::IndependenceReport rep = rdr::check_conditional_independence(joint, 1e-9);
  REQUIRE(rep.independent);
  REQUIRE(rep.max_deviation <= 1e-14);
}

TEST_CASE("stochastic and distortion matrix validation") {
  rdr::StochasticMatrix m(2, 2, 0.5);
  REQUIRE_NOTHROW(rdr::validate_stochastic(m));
  m(0, 0) = 0.6;
  REQUIRE(rdrtest::thrown_code([&] { rdr::validate_stochastic(m); }) == rdr::errc::not_normalized);
  m(0, 0) = -0.5;
  m(0, 1) = 1.5;
  REQUIRE(rdrtest::thrown_code([&] { rdr::validate_stochastic(m); }) ==
          rdr::errc::negative_probability);

  rdr::DistortionMatrix d(2, 2, 1.0);
  REQUIRE_NOTHROW(rdr::validate_distortion(d));
  d(1, 1) = -0.25;
  REQUIRE(rdrtest::thrown_code([&] { rdr::validate_distortion(d); }) ==
          rdr::errc::validation_error);
  REQUIRE_THAT(rdr::hamming_sum_distortion(std::vector<std::size_t>{2, 2})(0, 3),
               WithinAbs(2.0, 0.0));
  REQUIRE_THAT(rdr::hamming_sum_distortion(std::vector<std::size_t>{2, 2})(1, 3),
               WithinAbs(1.0, 0.0));
}
