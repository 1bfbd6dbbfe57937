// Acceptance checks for the distributed rate-distortion solver.
// Each check prints exactly one PASS/FAIL line; the exit code is the number
// of failed checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rdr/rdr.hpp"

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  if (!ok) ++failures;
}

std::string problem_file(const char* name) {
  return std::string(RDR_PROBLEMS_DIR) + "/" + name;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct SolveRecord {
  std::string problem;
  double lambda = 0.0;
  rdr::ProblemSpec spec;
  rdr::SolverState state;
  std::vector<double> rates;
  bool converged = false;
};

std::vector<SolveRecord> g_solves;  // shared by criteria 4, 6 and 7

void criterion_1_curve_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const rdr::ProblemSpec spec = rdr::parse_problem(problem_file("wz_binary_p30.json")).spec;
  rdr::SolverConfig cfg;
  const std::vector<double> grid = rdr::geometric_grid(0.1, 100.0, 20);
  const std::vector<rdr::SweepPoint> points = rdr::sweep(spec, grid, cfg);
  double worst = 0.0;
  int checked = 0;
  for (const auto& pt : points) {
    if (!pt.converged || pt.distortion < 0.01 || pt.distortion > 0.29) continue;
    const double ref = rdr::wyner_ziv_binary(0.3, pt.distortion);
    worst = std::max(worst, std::abs(pt.rates[0] - ref));
    ++checked;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = checked >= 3 && worst <= 0.01 && secs <= 60.0;
  report(1, ok,
         "single-source sweep vs closed-form curve: max |R - R*(D)| = " + fmt(worst) + " over " +
             std::to_string(checked) + " points in " + fmt(secs) + " s (need <= 0.01, <= 60 s)");
}

void criterion_2_zero_pressure_corner() {
  const rdr::ProblemSpec spec = rdr::parse_problem(problem_file("two_bsc_p30.json")).spec;
  rdr::SolverConfig cfg;
  cfg.lambda = 0.0;
  const rdr::SolveResult res = rdr::solve(spec, cfg);
  g_solves.push_back({"two_bsc_p30", 0.0, spec, res.state, res.rates, res.converged});
  const bool ok = res.rates[0] <= 1e-6 && res.rates[1] <= 1e-6 &&
                  std::abs(res.distortion - 0.6) <= 1e-3;
  report(2, ok,
         "zero-pressure corner: rates (" + fmt(res.rates[0]) + ", " + fmt(res.rates[1]) +
             "), distortion " + fmt(res.distortion) + " (need rates <= 1e-6, D = 0.6 +- 1e-3)");
}

void criterion_3_high_pressure_corner() {
  const rdr::ProblemSpec spec = rdr::parse_problem(problem_file("two_bsc_p30.json")).spec;
  rdr::SolverConfig cfg;
  cfg.lambda = 1000.0;
  const rdr::SolveResult res = rdr::solve(spec, cfg);
  g_solves.push_back({"two_bsc_p30", 1000.0, spec, res.state, res.rates, res.converged});
  const bool ok = res.distortion <= 1e-3 && std::abs(res.rates[0] - 0.8813) <= 0.02 &&
                  std::abs(res.rates[1] - 0.8813) <= 0.02;
  report(3, ok,
         "high-pressure corner: rates (" + fmt(res.rates[0]) + ", " + fmt(res.rates[1]) +
             "), distortion " + fmt(res.distortion) +
             " (need D <= 1e-3, rates = 0.8813 +- 0.02)");
}

void criterion_4_monotone_descent() {
  const char* names[] = {"wz_binary_p30.json", "two_bsc_p30.json", "dependent_pair.json"};
  int violations = 0;
  int traces = 0;
  double worst_step = 0.0;
  for (const char* name : names) {
    const rdr::ProblemSpec spec = rdr::parse_problem(problem_file(name)).spec;
    for (double lambda : {0.0, 1.0, 1000.0}) {
      rdr::SolverConfig cfg;
      cfg.lambda = lambda;
      cfg.init_mode = rdr::InitMode::random_dirichlet;
      const rdr::SolveResult res = rdr::solve(spec, cfg);
      g_solves.push_back({name, lambda, spec, res.state, res.rates, res.converged});
      for (const auto& trace : res.all_traces) {
        ++traces;
        for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
          worst_step = std::max(worst_step, trace[i + 1] - trace[i]);
          if (trace[i + 1] > trace[i] + 1e-10) ++violations;
        }
      }
    }
  }
  const bool ok = violations == 0 && traces == 72;
  report(4, ok,
         "objective descent over " + std::to_string(traces) + " restart traces: " +
             std::to_string(violations) + " increases (worst step " + fmt(worst_step) +
             ", slack 1e-10)");
}

void criterion_5_grid_search_floor() {
  rdr::ProblemSpec spec = rdr::parse_problem(problem_file("wz_binary_p30.json")).spec;
  spec.aux_sizes = {2};
  spec.validate();
  double worst_gap = -1e300;
  bool ok = true;
  for (double lambda : {0.5, 1.0, 2.0}) {
    rdr::SolverConfig cfg;
    cfg.lambda = lambda;
    const rdr::SolveResult res = rdr::solve(spec, cfg);
    const rdr::BruteForceResult grid = rdr::brute_force_lagrangian_min(spec, lambda, 0.02);
    worst_gap = std::max(worst_gap, res.lagrangian - grid.value);
    if (!(res.lagrangian <= grid.value + 1e-3)) ok = false;
  }
  report(5, ok,
         "solver objective vs exhaustive grid floor: worst excess " + fmt(worst_gap) +
             " (need <= 1e-3)");
}

void criterion_6_stationarity() {
  double worst = 0.0;
  int checked = 0;
  for (const auto& rec : g_solves) {
    if (!rec.converged) continue;
    worst = std::max(worst, rdr::kkt_residual(rec.spec, rec.state, rec.lambda));
    ++checked;
  }
  const bool ok = checked > 0 && worst < 1e-5;
  report(6, ok,
         "first-order residual at " + std::to_string(checked) + " converged solves: max " +
             fmt(worst) + " (need < 1e-5)");
}

void criterion_7_bound_consistency() {
  double worst_gap = 0.0;
  double worst_slack = 1e300;
  int checked = 0;
  bool ok = true;
  for (const auto& rec : g_solves) {
    if (!rec.converged || rec.problem.find("two_bsc") == std::string::npos) continue;
    const rdr::SubsetBoundReport rep = rdr::subset_bounds(rec.spec, rec.state);
    ++checked;
    for (const auto& b : rep.bounds) {
      worst_gap = std::max(worst_gap, std::abs(b.inner_value - b.outer_value));
      worst_slack = std::min(worst_slack, b.sum_rate - b.inner_value);
      if (std::abs(b.inner_value - b.outer_value) >= 1e-6) ok = false;
      if (b.sum_rate < b.inner_value - 1e-6) ok = false;
    }
  }
  ok = ok && checked > 0;
  report(7, ok,
         "bound agreement at " + std::to_string(checked) +
             " conditionally-independent solves: max |inner - outer| = " + fmt(worst_gap) +
             ", min sum-rate slack = " + fmt(worst_slack) + " (need gap < 1e-6, slack >= -1e-6)");
}

void criterion_8_symmetry() {
  const rdr::ProblemSpec spec = rdr::parse_problem(problem_file("two_bsc_p30.json")).spec;
  rdr::SolverConfig cfg;
  const std::vector<rdr::SweepPoint> points = rdr::sweep(spec, rdr::default_lambda_grid(), cfg);
  double worst = 0.0;
  int converged = 0;
  for (const auto& pt : points) {
    if (!pt.converged) continue;
    ++converged;
    worst = std::max(worst, std::abs(pt.rates[0] - pt.rates[1]));
  }
  const bool ok = converged > 0 && worst <= 0.01;
  report(8, ok,
         "rate symmetry on a symmetric pair over " + std::to_string(converged) +
             " sweep points: max |R1 - R2| = " + fmt(worst) + " (need <= 0.01)");
}

void criterion_9_reproducibility() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "rdr_acceptance";
  fs::create_directories(base);
  const std::string cli = RDR_CLI_PATH;
  bool ok = true;
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = base / ("run" + std::to_string(run));
    fs::remove_all(dir);
    const std::string cmd = "'" + cli + "' sweep --problem '" + problem_file("wz_binary_p30.json") +
                            "' --seed 7 --output '" + dir.string() + "' --emit csv > /dev/null";
    if (std::system(cmd.c_str()) != 0) ok = false;
    std::ifstream in(dir / "sweep.csv", std::ios::binary);
    if (!in) ok = false;
    std::stringstream buf;
    buf << in.rdbuf();
    csv[run] = buf.str();
  }
  ok = ok && !csv[0].empty() && csv[0] == csv[1];
  report(9, ok,
         "repeated seeded sweeps byte-identical (" + std::to_string(csv[0].size()) +
             " bytes vs " + std::to_string(csv[1].size()) + ")");
}

void run(int n, void (*fn)()) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  run(1, criterion_1_curve_accuracy);
  run(2, criterion_2_zero_pressure_corner);
  run(3, criterion_3_high_pressure_corner);
  run(4, criterion_4_monotone_descent);
  run(5, criterion_5_grid_search_floor);
  run(6, criterion_6_stationarity);
  run(7, criterion_7_bound_consistency);
  run(8, criterion_8_symmetry);
  run(9, criterion_9_reproducibility);
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures;
}
