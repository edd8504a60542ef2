#pragma once

#include "ivmono/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivmono {

//! Ordered pair of instrument indices (first, second). Directions below are
//! always read as D^t_first versus D^t_second.
struct InstrumentPair
{
  std::size_t first = 0;
  std::size_t second = 0;

  friend bool operator==(const InstrumentPair&, const InstrumentPair&) = default;
};

enum class Direction
{
  le,      //!< D^t_first <= D^t_second
  ge,      //!< D^t_first >= D^t_second
  both,    //!< equality for every unit
  neither, //!< no almost-sure ordering
};

const char* to_string(Direction d);

struct PairMonotonicity
{
  InstrumentPair pair;
  //! One entry per treatment.
  std::vector<Direction> directions;
  std::optional<Treatment> sign_treatment;
};

//! Monotonicity subset with per-pair directions, and the k pairs chosen to
//! carry distinct sign treatments.
struct MonotonicitySpec
{
  std::vector<PairMonotonicity> pairs;
  //! Indices into pairs.
  std::vector<std::size_t> lambda_star;
};

//! Treatment whose direction opposes all the others, if there is exactly one.
std::optional<Treatment>
sign_treatment_of(const std::vector<Direction>& directions);

} // namespace ivmono
