#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ivmono {

enum class OutcomeFamily
{
  gaussian,    //!< a = mean, b = standard deviation
  exponential, //!< a = rate
};

//! Marginal law of one potential outcome.
struct OutcomeModel
{
  OutcomeFamily family = OutcomeFamily::gaussian;
  double a = 0.0;
  double b = 1.0;

  double cdf(double y) const;
  double pdf(double y) const;
  double quantile(double u) const;
};

enum class RankMode
{
  invariance, //!< U_t = V for every t
  similarity, //!< U_t = Phi(rho Phi^-1(V) + sqrt(1 - rho^2) xi_t)
};

//! Structural design. Each unit draws V ~ U(0,1) and Gumbel taste shocks
//! eps_t, and under instrument value z chooses
//!   argmax_t base[t] + loading[t] * V + discount[z][t] + eps_t,
//! ties going to the lower index. The shocks are the same across z, so the
//! discount table alone decides which monotonicity inequalities hold.
struct DgpConfig
{
  std::string preset = "custom";
  std::size_t k = 1;
  std::vector<std::string> labels;
  std::vector<double> assignment_probs;
  std::vector<OutcomeModel> outcomes;
  RankMode rank_mode = RankMode::invariance;
  double rho = 0.5;
  std::vector<double> base_utility;
  std::vector<double> loading;
  double taste_scale = 1.0;
  std::vector<std::vector<double>> discount;
  //! Declared monotonicity table (the design's Λ plus any extra rows).
  std::vector<PairMonotonicity> declared;
  std::uint64_t seed = 0;

  std::size_t num_treatments() const { return k + 1; }
  std::size_t num_instruments() const { return labels.size(); }

  //! Throws ConfigInvalid naming the first broken invariant.
  void validate() const;

  //! Pairs of declared whose entry carries a sign treatment.
  std::vector<PairMonotonicity> lambda() const;
};

//! example_I, example_II, mto, shared_sign. k is ignored by mto.
DgpConfig
preset(const std::string& name, std::size_t k);

//! Choice under instrument value z given one unit's utilities before
//! discounts.
Treatment
choice_function(const std::vector<double>& utilities,
                const std::vector<std::vector<double>>& discount,
                std::size_t z);

//! Direction that the discount table guarantees for treatment t when moving
//! between the instruments of pair: ge if t gains the most, le if it gains
//! the least, both if all gains tie, neither otherwise.
Direction
implied_direction(const DgpConfig& config, InstrumentPair pair, Treatment t);

Dataset
simulate(const DgpConfig& config, std::size_t n, bool with_latent = true);

struct DirectionReport
{
  Treatment treatment = 0;
  Direction observed = Direction::both;
  std::size_t le_violations = 0; //!< units with D^t_first > D^t_second
  std::size_t ge_violations = 0; //!< units with D^t_first < D^t_second
};

std::vector<DirectionReport>
verify_monotonicity(const Dataset& data, InstrumentPair pair);

//! Number of units violating the declared directions of the config.
std::size_t
count_declared_violations(const DgpConfig& config, const Dataset& data);

} // namespace ivmono
