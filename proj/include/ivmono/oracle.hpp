#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/dgp.hpp"
#include "ivmono/types.hpp"

#include <string>
#include <vector>

namespace ivmono::oracle {

//! Per-treatment search grids of `nodes` points on [Q_t(0.001), Q_t(0.999)].
std::vector<std::vector<double>>
outcome_grids(const std::vector<OutcomeModel>& outcomes, std::size_t nodes = 255);

struct GridSolveResult
{
  //! Candidates with max_z |Pi_z| <= tolerance (at most max_solutions kept).
  std::vector<std::vector<double>> solutions;
  std::size_t solution_count = 0;
  std::vector<double> best;
  double best_residual = 0.0;
  double tolerance = 0.0;
  //! The best candidate touches the edge of some grid.
  bool saturated = false;
  std::size_t candidates = 0;
};

//! Exhaustive search of sum_t F(y_t | t, z) p_t(z) = tau over the product of
//! the grids, for k <= 2. A negative tolerance selects the largest one-step
//! increment of the moment function on the grids. Throws GridTooLarge above
//! max_candidates.
GridSolveResult
grid_solve(double tau,
           const CellTables& tables,
           const std::vector<std::vector<double>>& grids,
           double tolerance = -1.0,
           std::size_t max_candidates = std::size_t{ 1 } << 24,
           std::size_t max_solutions = 4096);

//! Nested continuous bisection on differences Pi_toward - Pi_away of the
//! pairs in lambda_star, with y_anchor = y_f. Any k.
std::vector<double>
nested_solve(double y_f, const CellTables& tables, const MonotonicitySpec& spec, int iterations = 48);

//! Outer bisection on the anchor value so that Pi at the first instrument
//! value equals tau, using nested_solve for the rest. Any k.
std::vector<double>
monotone_solve(double tau, const CellTables& tables, const MonotonicitySpec& spec, int iterations = 40);

//! Q_t(F_s(y)); throws OutsideSupport when F_s(y) is 0 or 1.
double
analytic_phi(const std::vector<OutcomeModel>& outcomes, Treatment s, Treatment t, double y);

double
analytic_phi(const DgpConfig& config, Treatment s, Treatment t, double y);

struct LatentComplierSet
{
  std::size_t from = 0;
  std::size_t to = 0;
  Treatment treatment = 0;
  //! Units with D^t_from = 0 and D^t_to = 1, ascending.
  std::vector<std::size_t> units;
  double frequency = 0.0;
};

struct IdentityCheck
{
  std::string name;
  bool holds = false;
  std::size_t mismatches = 0;
};

struct LatentComplierStats
{
  std::vector<LatentComplierSet> sets;
  std::vector<IdentityCheck> identities;

  const LatentComplierSet& find(std::size_t from, std::size_t to, Treatment t) const;
};

//! Enumerates every complier set for every ordered instrument pair and
//! treatment, then checks for each oriented pair with sign treatment s that
//!   C^s_{away,toward} is the disjoint union of C^j_{toward,away}, j != s,
//!   C^j_{toward,away} = {D^s_toward = 1, D^j_away = 1},
//!   count(U_s <= tau, C^s_{away,toward}) = sum_j count(U_s <= tau, C^j_{toward,away}).
LatentComplierStats
latent_complier_stats(const Dataset& data, const std::vector<PairMonotonicity>& pairs);

//! Values of latent Y_t (or U_t) over a set of units.
std::vector<double>
latent_values(const Dataset& data, const std::vector<std::size_t>& units, Treatment t, bool rank = false);

//! KS distance between U_t and U_t' over a set and its 1.36 sqrt(2/m) bound.
struct RankCheck
{
  double distance = 0.0;
  double bound = 0.0;
  bool holds = false;
};

RankCheck
rank_similarity_check(const Dataset& data, const std::vector<std::size_t>& units, Treatment t, Treatment t_prime);

} // namespace ivmono::oracle
