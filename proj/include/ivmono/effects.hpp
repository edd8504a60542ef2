#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/counterfactual.hpp"

#include <string>
#include <vector>

namespace ivmono {

//! F_{Y_s}(y) = sum_t F(phi_{s,t}(y) | t, z) p_t(z) on the domain of the
//! maps out of s, isotonized.
MonotoneCdf
potential_cdf(Treatment s, const MapFamily& maps, const CellTables& tables, std::size_t z);

//! Mixture of the per-z versions with the tables' instrument weights.
MonotoneCdf
potential_cdf_pooled(Treatment s, const MapFamily& maps, const CellTables& tables);

//! Largest sup-distance between per-z versions of F_{Y_s}.
double
z_invariance_gap(Treatment s, const MapFamily& maps, const CellTables& tables);

struct MeanEstimate
{
  double value = 0.0;
  //! Observations whose outcome fell outside a map's tabulated domain.
  std::size_t clamped = 0;
  double standard_error = 0.0;
};

//! E[Y_s] = sum_t E[phi_{t,s}(Y) | T = t, Z = z] p_t(z) at one z.
MeanEstimate
potential_mean(Treatment s, const MapFamily& maps, const Dataset& data, std::size_t z);

//! Average over all observations of phi_{T_i,s}(Y_i), which equals the
//! per-z formula averaged with empirical instrument frequencies.
MeanEstimate
potential_mean_pooled(Treatment s, const MapFamily& maps, const Dataset& data);

//! inf-quantile of a CDF tabulated on a window; throws TauOutsideWindow when
//! tau is not reached inside the tabulated range.
QuantileResult
window_quantile(const MonotoneCdf& cdf, double tau);

double
qte(const MonotoneCdf& cdf_s, const MonotoneCdf& cdf_t, double tau);

double
ate(const std::vector<double>& means, Treatment s, Treatment t);

//! Units pushed into `sign` at `toward` that choose `own` at `away`:
//! {D^sign_toward = 1, D^own_away = 1} = C^own_{toward, away}.
struct LocalGroup
{
  std::size_t toward = 0;
  std::size_t away = 0;
  Treatment sign = 0;
  Treatment own = 0;
  ComplierTable table;

  std::string label(const std::vector<std::string>& labels) const;
};

//! Every nonempty group of every equation in the system.
std::vector<LocalGroup>
local_groups(const SystemTables& system);

//! Throws NoEligiblePair when no group pairs t with t_prime.
const LocalGroup&
find_group(const std::vector<LocalGroup>& groups, Treatment t, Treatment t_prime);

//! F_{Y_t' | G}(y) = F_{Y_own | G}(phi_{t',own}(y)) on the domain of that map.
MonotoneCdf
local_cdf(Treatment t_prime, const LocalGroup& group, const MapFamily& maps);

//! E[phi_{own,t'}(Y_own) | G] from the two instrument cells of own, with an
//! influence-function standard error.
MeanEstimate
local_mean(Treatment t_prime, const LocalGroup& group, const Dataset& data, const MapFamily& maps);

//! E[Y_t | G] - E[Y_t' | G] on the group pairing t with t_prime.
double
late(Treatment t, Treatment t_prime, const std::vector<LocalGroup>& groups, const Dataset& data,
     const MapFamily& maps);

double
lqte(Treatment t, Treatment t_prime, double tau, const std::vector<LocalGroup>& groups, const MapFamily& maps);

std::vector<double>
default_tau_grid();

} // namespace ivmono
