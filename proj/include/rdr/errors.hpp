#pragma once

#include <stdexcept>
#include <string>

namespace rdr {

enum class errc {
  negative_probability,
  not_normalized,
  shape_mismatch,
  empty_axis_set,
  axes_overlap,
  out_of_range,
  degenerate_row,
  all_zero_row,
  grid_too_large,
  too_many_sources,
  target_out_of_range,
  not_enough_points,
  wrong_source_count,
  parse_error,
  validation_error,
  dimension_mismatch,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::negative_probability: return "NegativeProbability";
    case errc::not_normalized: return "NotNormalized";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::empty_axis_set: return "EmptyAxisSet";
    case errc::axes_overlap: return "AxesOverlap";
    case errc::out_of_range: return "OutOfRange";
    case errc::degenerate_row: return "DegenerateRow";
    case errc::all_zero_row: return "AllZeroRow";
    case errc::grid_too_large: return "GridTooLarge";
    case errc::too_many_sources: return "TooManySources";
    case errc::target_out_of_range: return "TargetOutOfRange";
    case errc::not_enough_points: return "NotEnoughPoints";
    case errc::wrong_source_count: return "WrongSourceCount";
    case errc::parse_error: return "ParseError";
    case errc::validation_error: return "ValidationError";
    case errc::dimension_mismatch: return "DimensionMismatch";
  }
  return "UnknownError";
}

// Library-wide exception carrying a machine-checkable error code.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

}  // namespace rdr
