#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivmono {

enum class ErrorKind
{
  empty_sample,
  non_finite,
  tau_out_of_range,
  length_mismatch,
  degenerate_support,
  treatment_mismatch,
  range_escape,
  not_strictly_increasing,
  config_invalid,
  unknown_preset,
  no_latent_data,
  empty_cell,
  weak_pair,
  domain_empty,
  no_solution_on_grid,
  assumption_three_violated,
  bracketing_violation,
  tau_outside_window,
  map_range_escape,
  sign_treatment_mismatch,
  no_eligible_pair,
  not_square,
  too_few_samples,
  grid_too_large,
  outside_support,
  io_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

//! Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline std::string_view
to_string(ErrorKind kind) noexcept
{
  switch (kind) {
    case ErrorKind::empty_sample: return "EmptySample";
    case ErrorKind::non_finite: return "NonFinite";
    case ErrorKind::tau_out_of_range: return "TauOutOfRange";
    case ErrorKind::length_mismatch: return "LengthMismatch";
    case ErrorKind::degenerate_support: return "DegenerateSupport";
    case ErrorKind::treatment_mismatch: return "TreatmentMismatch";
    case ErrorKind::range_escape: return "RangeEscape";
    case ErrorKind::not_strictly_increasing: return "NotStrictlyIncreasing";
    case ErrorKind::config_invalid: return "ConfigInvalid";
    case ErrorKind::unknown_preset: return "UnknownPreset";
    case ErrorKind::no_latent_data: return "NoLatentData";
    case ErrorKind::empty_cell: return "EmptyCell";
    case ErrorKind::weak_pair: return "WeakPair";
    case ErrorKind::domain_empty: return "DomainEmpty";
    case ErrorKind::no_solution_on_grid: return "NoSolutionOnGrid";
    case ErrorKind::assumption_three_violated: return "AssumptionThreeViolated";
    case ErrorKind::bracketing_violation: return "BracketingViolation";
    case ErrorKind::tau_outside_window: return "TauOutsideWindow";
    case ErrorKind::map_range_escape: return "MapRangeEscape";
    case ErrorKind::sign_treatment_mismatch: return "SignTreatmentMismatch";
    case ErrorKind::no_eligible_pair: return "NoEligiblePair";
    case ErrorKind::not_square: return "NotSquare";
    case ErrorKind::too_few_samples: return "TooFewSamples";
    case ErrorKind::grid_too_large: return "GridTooLarge";
    case ErrorKind::outside_support: return "OutsideSupport";
    case ErrorKind::io_error: return "IoError";
  }
  return "Unknown";
}

} // namespace ivmono
