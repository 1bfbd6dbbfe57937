#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdr/oracles.hpp"
#include "rdr/region.hpp"

namespace rdr {

inline constexpr const char* kToolName = "rdregion";
inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& doc, const char* key,
                                           const char* where) {
  auto it = doc.find(key);
  if (it == doc.end())
    fail(errc::parse_error, std::string("missing field '") + key + "' in " + where);
  return *it;
}

template <typename T>
inline T as(const nlohmann::json& v, const std::string& what) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, "bad value for " + what + ": " + e.what());
  }
}

inline std::size_t as_size(const nlohmann::json& v, const std::string& what) {
  const auto n = as<long long>(v, what);
  if (n < 0) fail(errc::parse_error, what + " must be nonnegative");
  return static_cast<std::size_t>(n);
}

inline std::vector<std::size_t> as_size_list(const nlohmann::json& v, const std::string& what) {
  if (!v.is_array()) fail(errc::parse_error, what + " must be an array");
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_size(v[i], what));
  return out;
}

inline nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double number_or_nan(const nlohmann::json& v, const std::string& what) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return as<double>(v, what);
}

}  // namespace detail

inline InitMode init_mode_from_string(const std::string& s) {
  if (s == "uniform") return InitMode::uniform;
  if (s == "random-dirichlet") return InitMode::random_dirichlet;
  fail(errc::parse_error, "unknown init mode '" + s + "' (use uniform or random-dirichlet)");
}

inline const char* to_string(InitMode m) {
  return m == InitMode::uniform ? "uniform" : "random-dirichlet";
}

struct LoadedProblem {
  ProblemSpec spec;
  SolverConfig config;  // defaults overlaid with the file's solver section
};

inline void apply_solver_overrides(SolverConfig& cfg, const nlohmann::json& doc) {
  if (auto it = doc.find("inner_tol"); it != doc.end()) cfg.inner_tol = detail::as<double>(*it, "solver.inner_tol");
  if (auto it = doc.find("outer_tol"); it != doc.end()) cfg.outer_tol = detail::as<double>(*it, "solver.outer_tol");
  if (auto it = doc.find("max_inner_iters"); it != doc.end()) cfg.max_inner_iters = detail::as_size(*it, "solver.max_inner_iters");
  if (auto it = doc.find("max_outer_cycles"); it != doc.end()) cfg.max_outer_cycles = detail::as_size(*it, "solver.max_outer_cycles");
  if (auto it = doc.find("restarts"); it != doc.end()) cfg.restarts = detail::as_size(*it, "solver.restarts");
  if (auto it = doc.find("rng_seed"); it != doc.end()) cfg.rng_seed = detail::as<std::uint64_t>(*it, "solver.rng_seed");
  if (auto it = doc.find("init_mode"); it != doc.end())
    cfg.init_mode = init_mode_from_string(detail::as<std::string>(*it, "solver.init_mode"));
}

inline LoadedProblem parse_problem_json(const nlohmann::json& doc) {
  LoadedProblem out;
  ProblemSpec& spec = out.spec;
  if (!doc.is_object()) fail(errc::parse_error, "problem document must be a JSON object");
  spec.name = doc.contains("name") ? detail::as<std::string>(doc["name"], "name") : std::string("unnamed");

  const auto& alpha = detail::require_field(doc, "alphabets", "problem");
  spec.t_size = detail::as_size(detail::require_field(alpha, "t", "alphabets"), "alphabets.t");
  spec.x_sizes = detail::as_size_list(detail::require_field(alpha, "x", "alphabets"), "alphabets.x");
  spec.y_size = detail::as_size(detail::require_field(alpha, "y", "alphabets"), "alphabets.y");
  spec.that_size = detail::as_size(detail::require_field(alpha, "t_hat", "alphabets"), "alphabets.t_hat");
  spec.num_sources = spec.x_sizes.size();
  if (spec.num_sources == 0) fail(errc::dimension_mismatch, "alphabets.x must list at least one source");

  const auto& joint = detail::require_field(doc, "joint", "problem");
  const bool has_dense = joint.contains("dense");
  const bool has_factored = joint.contains("factored");
  if (has_dense == has_factored)
    fail(errc::parse_error, "joint needs exactly one of 'dense' or 'factored'");
  if (has_dense) {
    std::vector<double> data = detail::as<std::vector<double>>(joint["dense"], "joint.dense");
    std::vector<std::size_t> shape{spec.t_size};
    shape.insert(shape.end(), spec.x_sizes.begin(), spec.x_sizes.end());
    shape.push_back(spec.y_size);
    std::size_t cells = 1;
    for (auto s : shape) cells *= s;
    if (data.size() != cells)
      fail(errc::dimension_mismatch, "joint.dense has " + std::to_string(data.size()) +
                                         " entries, expected " + std::to_string(cells));
    spec.joint = JointPmf{Tensor(shape, std::move(data))};
  } else {
    const auto& fac = joint["factored"];
    std::vector<double> p_y = detail::as<std::vector<double>>(
        detail::require_field(fac, "p_y", "joint.factored"), "p_y");
    if (p_y.size() != spec.y_size) fail(errc::dimension_mismatch, "p_y length must equal |Y|");
    const auto& ch = detail::require_field(fac, "x_given_y", "joint.factored");
    if (!ch.is_array() || ch.size() != spec.num_sources)
      fail(errc::dimension_mismatch, "x_given_y needs one channel per source");
    std::vector<StochasticMatrix> channels;
    for (std::size_t i = 0; i < spec.num_sources; ++i) {
      auto rows = detail::as<std::vector<std::vector<double>>>(ch[i], "x_given_y");
      if (rows.size() != spec.y_size)
        fail(errc::dimension_mismatch, "x_given_y channel " + std::to_string(i + 1) +
                                           " needs one row per side-information symbol");
      StochasticMatrix mat(spec.y_size, spec.x_sizes[i], 0.0);
      for (std::size_t y = 0; y < rows.size(); ++y) {
        if (rows[y].size() != spec.x_sizes[i])
          fail(errc::dimension_mismatch, "x_given_y channel " + std::to_string(i + 1) + " row " +
                                             std::to_string(y) + " length");
        for (std::size_t x = 0; x < rows[y].size(); ++x) mat(y, x) = rows[y][x];
      }
      validate_stochastic(mat);
      channels.push_back(std::move(mat));
    }
    std::size_t xy_cells = spec.y_size;
    for (auto s : spec.x_sizes) xy_cells *= s;
    if (fac.contains("t_map")) {
      std::vector<std::size_t> t_map = detail::as_size_list(fac["t_map"], "t_map");
      if (t_map.size() != xy_cells)
        fail(errc::dimension_mismatch, "t_map must cover every (x, y) cell (" +
                                           std::to_string(xy_cells) + " entries)");
      spec.joint = expand_factored(p_y, channels, t_map, spec.t_size);
    } else if (fac.contains("t_given_xy")) {
      std::vector<double> flat = detail::as<std::vector<double>>(fac["t_given_xy"], "t_given_xy");
      if (flat.size() != xy_cells * spec.t_size)
        fail(errc::dimension_mismatch, "t_given_xy must have |T| entries per (x, y) cell");
      std::vector<std::size_t> kshape(spec.x_sizes);
      kshape.push_back(spec.y_size);
      kshape.push_back(spec.t_size);
      spec.joint = expand_factored(p_y, channels, Tensor(kshape, std::move(flat)));
    } else {
      fail(errc::parse_error, "factored joint needs 't_map' or 't_given_xy'");
    }
  }

  const auto& dist = detail::require_field(doc, "distortion", "problem");
  if (dist.is_string()) {
    const std::string kw = dist.get<std::string>();
    if (kw == "hamming") {
      if (spec.t_size != spec.that_size)
        fail(errc::dimension_mismatch, "hamming distortion needs |T| == |T_hat|");
      spec.distortion = hamming_distortion(spec.t_size);
    } else if (kw == "hamming-sum") {
      std::size_t prod = 1;
      for (auto s : spec.x_sizes) prod *= s;
      if (spec.t_size != prod || spec.that_size != prod)
        fail(errc::dimension_mismatch,
             "hamming-sum distortion needs |T| == |T_hat| == product of observation alphabets");
      spec.distortion = hamming_sum_distortion(spec.x_sizes);
    } else {
      fail(errc::parse_error, "unknown distortion keyword '" + kw + "'");
    }
  } else if (dist.is_object() && dist.contains("matrix")) {
    auto rows = detail::as<std::vector<std::vector<double>>>(dist["matrix"], "distortion.matrix");
    if (rows.size() != spec.t_size)
      fail(errc::dimension_mismatch, "distortion matrix needs |T| rows");
    DistortionMatrix d(spec.t_size, spec.that_size, 0.0);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != spec.that_size)
        fail(errc::dimension_mismatch, "distortion matrix row " + std::to_string(t) + " length");
      for (std::size_t th = 0; th < rows[t].size(); ++th) d(t, th) = rows[t][th];
    }
    spec.distortion = d;
  } else {
    fail(errc::parse_error, "distortion must be 'hamming', 'hamming-sum', or {\"matrix\": ...}");
  }

  if (doc.contains("aux_sizes")) spec.aux_sizes = detail::as_size_list(doc["aux_sizes"], "aux_sizes");
  if (doc.contains("solver")) apply_solver_overrides(out.config, doc["solver"]);

  spec.validate();
  return out;
}

inline LoadedProblem parse_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open problem file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, "invalid JSON in " + path + ": " + e.what());
  }
  return parse_problem_json(doc);
}

// Canonical dense serialization; floats round-trip bit-exactly.
inline nlohmann::json problem_to_json(const ProblemSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  doc["alphabets"] = {{"t", spec.t_size}, {"x", spec.x_sizes}, {"y", spec.y_size}, {"t_hat", spec.that_size}};
  doc["joint"]["dense"] = spec.joint.probs.data();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < spec.distortion.rows; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t th = 0; th < spec.distortion.cols; ++th) row.push_back(spec.distortion(t, th));
    rows.push_back(std::move(row));
  }
  doc["distortion"]["matrix"] = std::move(rows);
  doc["aux_sizes"] = spec.aux_sizes;
  return doc;
}

inline void write_problem(const ProblemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot write " + path);
  out << problem_to_json(spec).dump(2) << "\n";
}

inline nlohmann::json config_to_json(const SolverConfig& c) {
  return {{"lambda", c.lambda},
          {"inner_tol", c.inner_tol},
          {"outer_tol", c.outer_tol},
          {"max_inner_iters", c.max_inner_iters},
          {"max_outer_cycles", c.max_outer_cycles},
          {"restarts", c.restarts},
          {"rng_seed", c.rng_seed},
          {"init_mode", to_string(c.init_mode)},
          {"source_weights", c.source_weights}};
}

inline SolverConfig config_from_json(const nlohmann::json& doc) {
  SolverConfig c;
  c.lambda = detail::as<double>(detail::require_field(doc, "lambda", "config"), "config.lambda");
  apply_solver_overrides(c, doc);
  if (doc.contains("source_weights"))
    c.source_weights = detail::as<std::vector<double>>(doc["source_weights"], "config.source_weights");
  return c;
}

inline nlohmann::json point_to_json(const SweepPoint& pt) {
  nlohmann::json rates = nlohmann::json::array();
  for (double r : pt.rates) rates.push_back(detail::number_or_null(r));
  return {{"lambda", pt.lambda},
          {"rates", std::move(rates)},
          {"distortion", detail::number_or_null(pt.distortion)},
          {"lagrangian", detail::number_or_null(pt.lagrangian)},
          {"converged", pt.converged},
          {"restart_index", pt.restart_index},
          {"outer_cycles", pt.outer_cycles},
          {"failed", pt.failed}};
}

inline SweepPoint point_from_json(const nlohmann::json& doc) {
  SweepPoint pt;
  pt.lambda = detail::as<double>(detail::require_field(doc, "lambda", "point"), "point.lambda");
  for (const auto& r : detail::require_field(doc, "rates", "point"))
    pt.rates.push_back(detail::number_or_nan(r, "point.rates"));
  pt.distortion = detail::number_or_nan(detail::require_field(doc, "distortion", "point"), "point.distortion");
  pt.lagrangian = detail::number_or_nan(detail::require_field(doc, "lagrangian", "point"), "point.lagrangian");
  pt.converged = detail::as<bool>(detail::require_field(doc, "converged", "point"), "point.converged");
  pt.restart_index = detail::as_size(doc.value("restart_index", nlohmann::json(0)), "point.restart_index");
  pt.outer_cycles = detail::as_size(doc.value("outer_cycles", nlohmann::json(0)), "point.outer_cycles");
  pt.failed = doc.value("failed", false);
  return pt;
}

struct PointBoundsReport {
  double lambda = 0.0;
  SubsetBoundReport report;
};

struct ResultBundle {
  std::string problem_name;
  std::string tool_version = kToolVersion;
  SolverConfig config;
  bool warm_start = true;
  std::vector<double> lambda_grid;
  std::vector<SweepPoint> points;
  std::vector<PointBoundsReport> subset_reports;
  std::vector<std::vector<StochasticMatrix>> solutions;  // per-point encoder channels (optional)
  double wall_seconds = 0.0;
  bool ci_warning = false;
  double ci_deviation = 0.0;
};

inline nlohmann::json matrix_to_json(const StochasticMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline StochasticMatrix matrix_from_json(const nlohmann::json& doc) {
  auto rows = detail::as<std::vector<std::vector<double>>>(doc, "matrix");
  if (rows.empty() || rows[0].empty()) fail(errc::parse_error, "matrix must be nonempty");
  StochasticMatrix m(rows.size(), rows[0].size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) fail(errc::dimension_mismatch, "ragged matrix rows");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

inline nlohmann::json bundle_to_json(const ResultBundle& b) {
  nlohmann::json doc;
  doc["tool"] = {{"name", kToolName}, {"version", b.tool_version}};
  doc["problem"] = b.problem_name;
  doc["config"] = config_to_json(b.config);
  doc["warm_start"] = b.warm_start;
  doc["lambda_grid"] = b.lambda_grid;
  doc["wall_seconds"] = b.wall_seconds;
  doc["ci_warning"] = b.ci_warning;
  doc["ci_deviation"] = b.ci_deviation;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : b.points) pts.push_back(point_to_json(pt));
  doc["points"] = std::move(pts);
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& rep : b.subset_reports) {
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& bd : rep.report.bounds)
      bounds.push_back({{"subset_mask", bd.subset_mask},
                        {"inner", bd.inner_value},
                        {"outer", bd.outer_value},
                        {"sum_rate", bd.sum_rate}});
    reports.push_back({{"lambda", rep.lambda}, {"bounds", std::move(bounds)}});
  }
  doc["subset_bounds"] = std::move(reports);
  nlohmann::json sols = nlohmann::json::array();
  for (const auto& enc : b.solutions) {
    nlohmann::json one = nlohmann::json::array();
    for (const auto& ch : enc) one.push_back(matrix_to_json(ch));
    sols.push_back(std::move(one));
  }
  doc["solutions"] = std::move(sols);
  return doc;
}

inline ResultBundle bundle_from_json(const nlohmann::json& doc) {
  ResultBundle b;
  b.problem_name = detail::as<std::string>(detail::require_field(doc, "problem", "bundle"), "bundle.problem");
  b.tool_version = detail::as<std::string>(detail::require_field(doc, "tool", "bundle")["version"], "tool.version");
  b.config = config_from_json(detail::require_field(doc, "config", "bundle"));
  b.warm_start = doc.value("warm_start", true);
  b.lambda_grid = detail::as<std::vector<double>>(detail::require_field(doc, "lambda_grid", "bundle"), "lambda_grid");
  b.wall_seconds = doc.value("wall_seconds", 0.0);
  b.ci_warning = doc.value("ci_warning", false);
  b.ci_deviation = doc.value("ci_deviation", 0.0);
  for (const auto& pt : detail::require_field(doc, "points", "bundle")) b.points.push_back(point_from_json(pt));
  if (doc.contains("subset_bounds"))
    for (const auto& rep : doc["subset_bounds"]) {
      PointBoundsReport r;
      r.lambda = detail::as<double>(detail::require_field(rep, "lambda", "subset_bounds"), "bounds.lambda");
      for (const auto& bd : detail::require_field(rep, "bounds", "subset_bounds")) {
        SubsetBound s;
        s.subset_mask = static_cast<std::uint32_t>(detail::as_size(bd["subset_mask"], "subset_mask"));
        s.inner_value = detail::as<double>(bd["inner"], "inner");
        s.outer_value = detail::as<double>(bd["outer"], "outer");
        s.sum_rate = detail::as<double>(bd["sum_rate"], "sum_rate");
        r.report.bounds.push_back(s);
      }
      b.subset_reports.push_back(std::move(r));
    }
  if (doc.contains("solutions"))
    for (const auto& sol : doc["solutions"]) {
      std::vector<StochasticMatrix> enc;
      for (const auto& ch : sol) enc.push_back(matrix_from_json(ch));
      b.solutions.push_back(std::move(enc));
    }
  return b;
}

inline void write_bundle(const ResultBundle& b, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot write " + path);
  out << bundle_to_json(b).dump(2) << "\n";
}

inline ResultBundle read_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, "invalid JSON in " + path + ": " + e.what());
  }
  return bundle_from_json(doc);
}

// 17 significant digits: lossless double round trip.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points, std::size_t num_sources) {
  std::string out = "lambda";
  for (std::size_t i = 1; i <= num_sources; ++i) out += ",R_" + std::to_string(i);
  out += ",D,lagrangian,converged\n";
  for (const auto& pt : points) {
    out += format_double(pt.lambda);
    for (std::size_t i = 0; i < num_sources; ++i)
      out += "," + format_double(i < pt.rates.size() ? pt.rates[i] : std::numeric_limits<double>::quiet_NaN());
    out += "," + format_double(pt.distortion);
    out += "," + format_double(pt.lagrangian);
    out += pt.converged ? ",1\n" : ",0\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::parse_error, "cannot write " + path);
  out << text;
}

struct ContourGrid {
  std::vector<double> r1_centers;
  std::vector<double> r2_centers;
  std::vector<double> d;  // row-major over (r1, r2); NaN marks an empty cell
};

// Grids a traced point cloud over the (R_1, R_2) plane: each cell takes the
// distortion of the converged point nearest its center, and cells containing
// no point stay empty — values are never interpolated.
inline ContourGrid emit_contour_grid(const std::vector<SweepPoint>& points, std::size_t num_sources,
                                     std::size_t n1 = 12, std::size_t n2 = 12) {
  if (num_sources != 2) fail(errc::wrong_source_count, "contour mode needs exactly two sources");
  if (points.size() < 3)
    fail(errc::not_enough_points, "contour needs at least three sweep points, got " +
                                      std::to_string(points.size()));
  if (n1 == 0 || n2 == 0) fail(errc::out_of_range, "contour grid dimensions must be positive");

  auto usable = [](const SweepPoint& pt) {
    return !pt.failed && pt.converged && pt.rates.size() == 2 && std::isfinite(pt.rates[0]) &&
           std::isfinite(pt.rates[1]) && std::isfinite(pt.distortion);
  };
  double max1 = 0.0, max2 = 0.0;
  std::size_t count = 0;
  for (const auto& pt : points)
    if (usable(pt)) {
      max1 = std::max(max1, pt.rates[0]);
      max2 = std::max(max2, pt.rates[1]);
      ++count;
    }
  if (count < 3) fail(errc::not_enough_points, "fewer than three converged points to grid");
  if (max1 <= 0.0) max1 = 1e-9;
  if (max2 <= 0.0) max2 = 1e-9;

  ContourGrid g;
  const double w1 = max1 / static_cast<double>(n1);
  const double w2 = max2 / static_cast<double>(n2);
  for (std::size_t i = 0; i < n1; ++i) g.r1_centers.push_back((static_cast<double>(i) + 0.5) * w1);
  for (std::size_t j = 0; j < n2; ++j) g.r2_centers.push_back((static_cast<double>(j) + 0.5) * w2);
  g.d.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> best(n1 * n2, std::numeric_limits<double>::infinity());
  for (const auto& pt : points) {
    if (!usable(pt)) continue;
    const std::size_t i = std::min(n1 - 1, static_cast<std::size_t>(pt.rates[0] / w1));
    const std::size_t j = std::min(n2 - 1, static_cast<std::size_t>(pt.rates[1] / w2));
    const double dx = pt.rates[0] - g.r1_centers[i];
    const double dy = pt.rates[1] - g.r2_centers[j];
    const double dist2 = dx * dx + dy * dy;
    if (dist2 < best[i * n2 + j]) {
      best[i * n2 + j] = dist2;
      g.d[i * n2 + j] = pt.distortion;
    }
  }
  return g;
}

inline std::string contour_csv(const ContourGrid& g) {
  std::string out = "R1\\R2";
  for (double c : g.r2_centers) out += "," + format_double(c);
  out += "\n";
  for (std::size_t i = 0; i < g.r1_centers.size(); ++i) {
    out += format_double(g.r1_centers[i]);
    for (std::size_t j = 0; j < g.r2_centers.size(); ++j) {
      const double v = g.d[i * g.r2_centers.size() + j];
      out += std::isnan(v) ? ",NA" : "," + format_double(v);
    }
    out += "\n";
  }
  return out;
}

// ---- command drivers ----

struct RunOptions {
  std::string problem_path;
  std::vector<double> lambda_grid;  // empty = default grid
  bool has_target_d = false;
  double target_d = 0.0;
  std::size_t restarts = 0;     // 0 = keep problem/default value
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_tol = false;
  double tol = 0.0;
  std::size_t max_iters = 0;    // 0 = keep
  std::vector<std::size_t> aux_sizes;
  std::vector<double> per_source_lambda;
  std::string output_dir = ".";
  std::string emit = "both";    // csv | json | both
  bool warm_start = true;
};

// "a:b:n" = n geometrically spaced points from a to b (a > 0); otherwise a
// comma-separated list of values.
inline std::vector<double> parse_lambda_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    double lo = 0.0, hi = 0.0;
    unsigned long long n = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%llu%c", &lo, &hi, &n, &extra) != 3)
      fail(errc::parse_error, "lambda grid must be start:stop:count or a comma list");
    return geometric_grid(lo, hi, static_cast<std::size_t>(n));
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(errc::parse_error, "bad lambda value '" + item + "'");
    }
  }
  if (out.empty()) fail(errc::parse_error, "lambda grid is empty");
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const long long v = std::stoll(item);
      if (v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(errc::parse_error, "bad size value '" + item + "'");
    }
  }
  if (out.empty()) fail(errc::parse_error, "size list is empty");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(errc::parse_error, "bad numeric value '" + item + "'");
    }
  }
  if (out.empty()) fail(errc::parse_error, "numeric list is empty");
  return out;
}

namespace detail {

struct PreparedRun {
  ProblemSpec spec;
  SolverConfig config;
  std::vector<double> grid;
};

inline PreparedRun prepare_run(const RunOptions& opt) {
  LoadedProblem loaded = parse_problem(opt.problem_path);
  PreparedRun run;
  run.spec = std::move(loaded.spec);
  run.config = loaded.config;
  if (!opt.aux_sizes.empty()) {
    run.spec.aux_sizes = opt.aux_sizes;
    run.spec.validate();
  }
  if (opt.restarts > 0) run.config.restarts = opt.restarts;
  if (opt.has_seed) run.config.rng_seed = opt.seed;
  if (opt.has_tol) {
    if (!(opt.tol > 0.0)) fail(errc::out_of_range, "--tol must be positive");
    run.config.inner_tol = opt.tol;
    run.config.outer_tol = 10.0 * opt.tol;
  }
  if (opt.max_iters > 0) run.config.max_inner_iters = opt.max_iters;
  if (!opt.per_source_lambda.empty()) run.config.source_weights = opt.per_source_lambda;
  run.grid = opt.lambda_grid.empty() ? default_lambda_grid() : opt.lambda_grid;
  return run;
}

inline void warn_if_dependent(const ProblemSpec& spec) {
  const IndependenceReport ci = check_conditional_independence(spec.joint, 1e-9);
  if (!ci.independent)
    std::cerr << "warning: sources are not conditionally independent given the side information "
                 "(max deviation "
              << format_double(ci.max_deviation)
              << "); reported region is an inner (achievable) bound only\n";
}

inline ResultBundle make_bundle(const PreparedRun& run, const RunOptions& opt,
                                const SweepOutcome& outcome, double wall_seconds) {
  ResultBundle b;
  b.problem_name = run.spec.name;
  b.config = run.config;
  b.warm_start = opt.warm_start;
  b.lambda_grid = run.grid;
  b.points = outcome.points;
  b.wall_seconds = wall_seconds;
  const IndependenceReport ci = check_conditional_independence(run.spec.joint, 1e-9);
  b.ci_warning = !ci.independent;
  b.ci_deviation = ci.max_deviation;
  for (std::size_t k = 0; k < outcome.points.size(); ++k) {
    if (outcome.points[k].failed || outcome.states[k].enc.empty()) continue;
    b.solutions.push_back(outcome.states[k].enc);
    if (outcome.points[k].converged && run.spec.num_sources <= 10) {
      PointBoundsReport rep;
      rep.lambda = outcome.points[k].lambda;
      rep.report = subset_bounds(run.spec, outcome.states[k]);
      b.subset_reports.push_back(std::move(rep));
    }
  }
  return b;
}

inline int emit_outputs(const PreparedRun& run, const RunOptions& opt, const SweepOutcome& outcome,
                        double wall_seconds) {
  std::filesystem::create_directories(opt.output_dir);
  const bool want_csv = opt.emit == "csv" || opt.emit == "both";
  const bool want_json = opt.emit == "json" || opt.emit == "both";
  if (want_csv) {
    const std::string path = opt.output_dir + "/sweep.csv";
    write_text_file(path, sweep_csv(outcome.points, run.spec.num_sources));
    std::cout << "wrote " << path << "\n";
  }
  if (want_json) {
    const std::string path = opt.output_dir + "/bundle.json";
    write_bundle(make_bundle(run, opt, outcome, wall_seconds), path);
    std::cout << "wrote " << path << "\n";
  }
  std::size_t converged = 0;
  for (const auto& pt : outcome.points)
    if (pt.converged) ++converged;
  std::cout << converged << "/" << outcome.points.size() << " points converged\n";
  return converged > 0 ? 0 : 3;
}

}  // namespace detail

inline int run_sweep_command(const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::PreparedRun run = detail::prepare_run(opt);
  detail::warn_if_dependent(run.spec);
  SweepOutcome outcome;
  if (opt.has_target_d) {
    SweepPoint pt = solve_for_distortion(run.spec, opt.target_d, run.config);
    run.grid = {pt.lambda};
    outcome.points.push_back(pt);
    SolverConfig cfg = run.config;
    cfg.lambda = pt.lambda;
    outcome.states.push_back(solve(run.spec, cfg).state);
    outcome.traces.emplace_back();
  } else {
    outcome = sweep_with_states(run.spec, run.grid, run.config, opt.warm_start);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return detail::emit_outputs(run, opt, outcome, wall);
}

inline int run_target_command(const RunOptions& opt) {
  if (!opt.has_target_d) fail(errc::parse_error, "target-d requires --target-d");
  return run_sweep_command(opt);
}

inline int run_bounds_command(const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::PreparedRun run = detail::prepare_run(opt);
  detail::warn_if_dependent(run.spec);
  SweepOutcome outcome = sweep_with_states(run.spec, run.grid, run.config, opt.warm_start);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ResultBundle b = detail::make_bundle(run, opt, outcome, wall);
  std::filesystem::create_directories(opt.output_dir);
  const std::string path = opt.output_dir + "/bundle.json";
  write_bundle(b, path);
  std::cout << "wrote " << path << "\n";
  for (const auto& rep : b.subset_reports) {
    std::cout << "lambda " << format_double(rep.lambda) << ":\n";
    for (const auto& bd : rep.report.bounds)
      std::cout << "  subset mask " << bd.subset_mask << ": inner " << format_double(bd.inner_value)
                << ", outer " << format_double(bd.outer_value) << ", sum rate "
                << format_double(bd.sum_rate) << "\n";
  }
  return b.subset_reports.empty() ? 3 : 0;
}

inline int run_contour_command(const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  detail::PreparedRun run = detail::prepare_run(opt);
  if (run.spec.num_sources != 2)
    fail(errc::wrong_source_count, "contour mode needs exactly two sources");
  detail::warn_if_dependent(run.spec);

  std::vector<std::vector<double>> ratios;
  if (!opt.per_source_lambda.empty()) {
    ratios.push_back(opt.per_source_lambda);
  } else {
    ratios = {{1, 1}, {2, 1}, {1, 2}, {4, 1}, {1, 4}, {8, 1}, {1, 8}};
  }
  std::vector<SweepPoint> all_points;
  SweepOutcome merged;
  for (const auto& w : ratios) {
    SolverConfig cfg = run.config;
    cfg.source_weights = w;
    SweepOutcome outcome = sweep_with_states(run.spec, run.grid, cfg, opt.warm_start);
    for (std::size_t k = 0; k < outcome.points.size(); ++k) {
      all_points.push_back(outcome.points[k]);
      merged.points.push_back(outcome.points[k]);
      merged.states.push_back(std::move(outcome.states[k]));
      merged.traces.emplace_back();
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(opt.output_dir);
  const bool want_csv = opt.emit == "csv" || opt.emit == "both";
  const bool want_json = opt.emit == "json" || opt.emit == "both";
  int status = 0;
  if (want_csv) {
    const ContourGrid grid = emit_contour_grid(all_points, run.spec.num_sources);
    const std::string path = opt.output_dir + "/contour.csv";
    write_text_file(path, contour_csv(grid));
    std::cout << "wrote " << path << "\n";
  }
  if (want_json) {
    const std::string path = opt.output_dir + "/bundle.json";
    write_bundle(detail::make_bundle(run, opt, merged, wall), path);
    std::cout << "wrote " << path << "\n";
  }
  std::size_t converged = 0;
  for (const auto& pt : all_points)
    if (pt.converged) ++converged;
  std::cout << converged << "/" << all_points.size() << " points converged\n";
  if (converged == 0) status = 3;
  return status;
}

inline int run_verify_command(const RunOptions& opt) {
  detail::PreparedRun run = detail::prepare_run(opt);
  const IndependenceReport ci = check_conditional_independence(run.spec.joint, 1e-9);
  std::cout << "conditional independence given y: " << (ci.independent ? "holds" : "violated")
            << " (max deviation " << format_double(ci.max_deviation) << ")\n";

  bool all_ok = true;
  auto report = [&](const std::string& name, bool ok, const std::string& detail_text) {
    std::cout << (ok ? "ok   " : "FAIL ") << name;
    if (!detail_text.empty()) std::cout << " (" << detail_text << ")";
    std::cout << "\n";
    if (!ok) all_ok = false;
  };

  const std::vector<double> lambdas =
      opt.lambda_grid.empty() ? std::vector<double>{0.0, 0.5, 2.0, 1000.0} : opt.lambda_grid;
  bool descent_ok = true, kkt_ok = true, bounds_ok = true, any_converged = false;
  double worst_step = 0.0, worst_kkt = 0.0, worst_gap = -std::numeric_limits<double>::infinity();
  for (double l : lambdas) {
    SolverConfig cfg = run.config;
    cfg.lambda = l;
    const SolveResult res = solve(run.spec, cfg);
    for (const auto& trace : res.all_traces)
      for (std::size_t i = 1; i < trace.size(); ++i)
        worst_step = std::max(worst_step, trace[i] - trace[i - 1]);
    if (worst_step > 1e-10) descent_ok = false;
    if (res.converged) {
      any_converged = true;
      const double resid = kkt_residual(run.spec, res.state, l);
      worst_kkt = std::max(worst_kkt, resid);
      if (resid >= 1e-5) kkt_ok = false;
      const SubsetBoundReport rep = subset_bounds(run.spec, res.state);
      for (const auto& bd : rep.bounds) {
        worst_gap = std::max(worst_gap, bd.inner_value - bd.outer_value);
        if (bd.inner_value > bd.outer_value + 1e-9) bounds_ok = false;
        if (bd.sum_rate < bd.inner_value - 1e-6) bounds_ok = false;
      }
    }
  }
  report("lagrangian descent across restarts", descent_ok,
         "worst step +" + format_double(worst_step));
  report("stationarity at converged points", kkt_ok, "worst residual " + format_double(worst_kkt));
  report("subset bounds consistent", bounds_ok, "worst inner-outer gap " + format_double(worst_gap));
  report("at least one multiplier converged", any_converged, "");

  // Grid search cross-check when exhaustive enumeration stays fast. At
  // resolution 0.1 each encoder row ranges over C(10 + |W|-1, |W|-1)
  // compositions, and rows multiply across input symbols and sources.
  double grid_cells = 1.0;
  for (std::size_t i = 0; i < run.spec.num_sources; ++i) {
    const std::size_t ws = run.spec.aux_sizes[i];
    double per_row = 1.0;
    for (std::size_t j = 1; j < ws; ++j)
      per_row = per_row * static_cast<double>(10 + j) / static_cast<double>(j);
    grid_cells *= std::pow(per_row, static_cast<double>(run.spec.x_sizes[i]));
  }
  if (grid_cells <= 2e5) {
    try {
      SolverConfig cfg = run.config;
      cfg.lambda = 1.0;
      const SolveResult res = solve(run.spec, cfg);
      const BruteForceResult bf = brute_force_lagrangian_min(run.spec, 1.0, 0.1);
      report("grid search agreement at lambda 1", res.lagrangian <= bf.value + 1e-3,
             "solver " + format_double(res.lagrangian) + " vs grid " + format_double(bf.value));
    } catch (const error& e) {
      if (e.code() != errc::grid_too_large) throw;
      std::cout << "skip grid search cross-check (encoder grid too large)\n";
    }
  } else {
    std::cout << "skip grid search cross-check (encoder grid too large)\n";
  }
  return all_ok ? 0 : 3;
}

}  // namespace rdr
