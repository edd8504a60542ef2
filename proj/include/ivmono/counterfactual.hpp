#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/compliers.hpp"
#include "ivmono/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivmono {

//! Complier tables of the k equations, relabeled so that canonical
//! treatment 0 is the one treatment that is no pair's sign treatment and
//! canonical m (1..k) is the m-th smallest sign treatment. Equation m reads
//!   F_m(y_m) P_m = sum_{j != m} P_{m,j} F_{m,j}(y_j)
//! where F_m is the CDF of Y_m over units pushed into m by moving the pair
//! from `away` to `toward`, and F_{m,j} the CDF of Y_j over units pushed into
//! j by the opposite move.
struct SystemTables
{
  std::size_t k = 0;
  //! canonical index -> original treatment label.
  std::vector<Treatment> original;
  //! Per equation m - 1: the pair with toward in .first, away in .second.
  std::vector<InstrumentPair> oriented;
  std::vector<ComplierTable> own;
  //! others[m - 1][j] for canonical j != m; empty when P_{m,j} is zero.
  std::vector<std::vector<std::optional<ComplierTable>>> others;
  //! P_m - sum_j P_{m,j} per equation; zero up to rounding.
  std::vector<double> balance;
  bool analytic = false;

  Treatment anchor() const { return original[k]; }
  //! Canonical index of an original treatment.
  std::size_t canonical(Treatment t) const;
};

//! Throws AssumptionThreeViolated when lambda_star does not list k pairs with
//! pairwise distinct sign treatments, and WeakPair on thin complier sets.
SystemTables
build_system(const CellTables& tables, const MonotonicitySpec& spec, double eta = 0.01);

struct SolverOptions
{
  //! Residual tolerance in CDF units; solutions on step functions are also
  //! accepted within the jump of the searched function at the solution.
  double tolerance = 1e-8;
  //! Allowed monotonicity defect of the searched function before the search
  //! aborts with BracketingViolation.
  double bracket_slack = 1e-6;
};

SolverOptions
default_solver_options(const SystemTables& system);

//! Images at one anchor value, by original treatment label. The anchor's
//! own entry equals y_f.
struct Solution
{
  double y_f = 0.0;
  std::vector<double> images;
  //! Per canonical equation 1..k (index m - 1): normalized residual and the
  //! step-function jump that bounds it.
  std::vector<double> residuals;
  std::vector<double> bounds;
  bool certified = false;
  bool saturated = false;
  bool flat = false;
};

//! k = 1: phi_{1,0}(y) = Q_{C0}(F_{C1}(y)) in canonical labels.
Solution
solve_binary(const SystemTables& system, double y_f);

//! Binary map tabulated on grid (source = sign treatment, target = the other).
CounterfactualMap
solve_binary_map(const SystemTables& system, const std::vector<double>& grid);

//! k = 2 by the explicit two-step formula with a linear scan.
Solution
solve_k2(const SystemTables& system, double y_f, const SolverOptions& options);

//! Any k, by the nested monotone bisection. k = 1 delegates to solve_binary.
Solution
solve_general(const SystemTables& system, double y_f, const SolverOptions& options);

//! Throws NoSolutionOnGrid when the solution is not certified.
void
require_certified(const Solution& s);

struct MapFamily
{
  std::size_t k = 0;
  Treatment anchor = 0;
  //! maps[s][t] = phi_{s,t}.
  std::vector<std::vector<CounterfactualMap>> maps;
  std::vector<Solution> solutions;
  std::size_t repaired = 0;
  std::size_t dropped_nodes = 0;
  std::size_t uncertified = 0;
  std::vector<std::string> warnings;

  const CounterfactualMap& operator()(Treatment s, Treatment t) const { return maps[s][t]; }
};

//! Solves at every node of grid (values of the anchor treatment) and derives
//! all other maps by inversion and composition.
MapFamily
build_all_maps(const SystemTables& system, const std::vector<double>& grid, const SolverOptions& options);

//! Uniform grid over the anchor treatment's trimmed window.
std::vector<double>
default_map_grid(const CellTables& tables, const SystemTables& system, std::size_t nodes = 512);

} // namespace ivmono
