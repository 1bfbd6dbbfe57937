#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rdr/rdr.hpp"

namespace {

struct RawFlags {
  std::string lambda_grid;
  std::string aux_sizes;
  std::string per_source_lambda;
  std::string warm_start = "on";
};

void add_common_flags(CLI::App* cmd, rdr::RunOptions& opt, RawFlags& raw) {
  cmd->add_option("--problem", opt.problem_path, "problem description (JSON)")->required();
  cmd->add_option("--lambda-grid", raw.lambda_grid,
                  "multiplier grid: start:stop:count (geometric) or v1,v2,...");
  cmd->add_option("--restarts", opt.restarts, "random restarts per solve");
  cmd->add_option("--seed", opt.seed, "base RNG seed")->each([&](const std::string&) {
    opt.has_seed = true;
  });
  cmd->add_option("--tol", opt.tol, "inner loop tolerance (outer loop uses 10x)")
      ->each([&](const std::string&) { opt.has_tol = true; });
  cmd->add_option("--max-iters", opt.max_iters, "inner iteration cap per cycle");
  cmd->add_option("--aux-sizes", raw.aux_sizes, "auxiliary alphabet sizes, e.g. 3,3");
  cmd->add_option("--per-source-lambda", raw.per_source_lambda,
                  "per-source rate weights, e.g. 2,1");
  cmd->add_option("--output", opt.output_dir, "output directory (created if missing)");
  cmd->add_option("--emit", opt.emit, "artifacts to write: csv, json, or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  cmd->add_option("--warm-start", raw.warm_start, "reuse the previous grid point's solution")
      ->check(CLI::IsMember({"on", "off"}));
}

int finish_options(rdr::RunOptions& opt, const RawFlags& raw) {
  try {
    if (!raw.lambda_grid.empty()) opt.lambda_grid = rdr::parse_lambda_grid(raw.lambda_grid);
    if (!raw.aux_sizes.empty()) opt.aux_sizes = rdr::parse_size_list(raw.aux_sizes);
    if (!raw.per_source_lambda.empty())
      opt.per_source_lambda = rdr::parse_double_list(raw.per_source_lambda);
  } catch (const rdr::error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  opt.warm_start = raw.warm_start != "off";
  if (!std::filesystem::exists(opt.problem_path)) {
    std::cerr << "problem file not found: " << opt.problem_path << "\n";
    return 1;
  }
  return -1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-distortion region solver for noisily observed sources with decoder side "
               "information"};
  app.set_version_flag("--version", std::string(rdr::kToolVersion));
  app.require_subcommand(1);

  rdr::RunOptions opt;
  RawFlags raw;

  CLI::App* sweep = app.add_subcommand("sweep", "trace the distortion-rate curve over a multiplier grid");
  add_common_flags(sweep, opt, raw);
  sweep->add_option("--target-d", opt.target_d, "solve for one point at this distortion")
      ->each([&](const std::string&) { opt.has_target_d = true; });

  CLI::App* target = app.add_subcommand("target-d", "find the multiplier matching a distortion target");
  add_common_flags(target, opt, raw);
  target->add_option("--target-d", opt.target_d, "distortion target")
      ->required()
      ->each([&](const std::string&) { opt.has_target_d = true; });

  CLI::App* bounds = app.add_subcommand("bounds", "report per-subset rate bounds along the sweep");
  add_common_flags(bounds, opt, raw);

  CLI::App* contour = app.add_subcommand("contour", "grid the two-source rate plane by distortion");
  add_common_flags(contour, opt, raw);

  CLI::App* verify = app.add_subcommand("verify", "run self-checks on a problem");
  add_common_flags(verify, opt, raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const int early = finish_options(opt, raw);
  if (early >= 0) return early;

  try {
    if (sweep->parsed()) return rdr::run_sweep_command(opt);
    if (target->parsed()) return rdr::run_target_command(opt);
    if (bounds->parsed()) return rdr::run_bounds_command(opt);
    if (contour->parsed()) return rdr::run_contour_command(opt);
    if (verify->parsed()) return rdr::run_verify_command(opt);
  } catch (const rdr::error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
