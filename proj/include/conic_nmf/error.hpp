#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace conic_nmf {

enum class Errc {
  invalid_argument,
  zero_column,
  zero_vector,
  zero_matrix,
  no_convergence,
  k_too_large,
  k_exceeds_n,
  single_cone,
  non_positive_basis,
  infeasible,
  dimension_too_small,
  range_invalid,
  rank_deficient,
  shape_mismatch,
  io,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::zero_column: return "ZeroColumn";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::zero_matrix: return "ZeroMatrix";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::k_exceeds_n: return "KExceedsN";
    case Errc::single_cone: return "SingleCone";
    case Errc::non_positive_basis: return "NonPositiveBasis";
    case Errc::infeasible: return "Infeasible";
    case Errc::dimension_too_small: return "DimensionTooSmall";
    case Errc::range_invalid: return "RangeInvalid";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::io: return "IOError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the condition;
/// `index()` carries the offending column for ZeroColumn.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

  /// Numerical failures (exit code 3 at the CLI) as opposed to bad input.
  bool is_numerical() const noexcept {
    return code_ == Errc::no_convergence || code_ == Errc::infeasible ||
           code_ == Errc::rank_deficient;
  }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace conic_nmf
