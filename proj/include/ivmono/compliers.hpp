#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/types.hpp"

namespace ivmono {

PropensityMatrix
propensity_matrix(const Dataset& data);

//! p_t(z') - p_t(z) for from = z, to = z'. Throws WeakPair unless the
//! difference exceeds eta.
double
complier_probability(const PropensityMatrix& p,
                     std::size_t from,
                     std::size_t to,
                     Treatment t,
                     double eta = 0.01);

//! Units pushed into treatment t when the instrument moves from `from` to
//! `to`, that is {D^t_from = 0, D^t_to = 1}.
struct ComplierTable
{
  std::size_t from = 0;
  std::size_t to = 0;
  Treatment treatment = 0;
  double probability = 0.0;
  MonotoneCdf cdf;
  //! Largest amount by which isotonization had to move a raw value.
  double repair = 0.0;
  //! Sample size an ECDF would need to match the plug-in variance; infinite
  //! for analytic tables.
  double effective_size = inf;
};

//! F_{Y_t | C}(y) = (F(y|t,to) p_t(to) - F(y|t,from) p_t(from)) / P(C) on
//! the treatment's grid, isotonized.
ComplierTable
complier_cdf(const CellTables& tables, std::size_t from, std::size_t to, Treatment t, double eta = 0.01);

} // namespace ivmono
