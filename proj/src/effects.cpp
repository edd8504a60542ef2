#include "ivmono/effects.hpp"

#include "ivmono/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

namespace {

const std::vector<double>&
domain_of(Treatment s, const MapFamily& maps)
{
  return maps.maps[s][s].grid();
}

std::vector<double>
raw_potential_cdf(Treatment s, const MapFamily& maps, const CellTables& tables, std::size_t z)
{
  if (z >= tables.num_instruments())
    throw Error(ErrorKind::config_invalid, fmt::format("instrument index {} out of range", z));
  const auto& grid = domain_of(s, maps);
  std::vector<double> raw(grid.size(), 0.0);
  for (Treatment t = 0; t < tables.num_treatments(); ++t) {
    const double p = tables.propensity(z, t);
    if (p == 0.0)
      continue;
    if (!tables.analytic() && tables.counts[z][t] == 0.0)
      throw Error(ErrorKind::empty_cell, fmt::format("cell (t={}, z={}) is empty", t, tables.labels[z]));
    const CounterfactualMap& phi = maps(s, t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      bool clamped = false;
      const double y = phi.evaluate(grid[i], clamped);
      if (clamped)
        throw Error(ErrorKind::map_range_escape,
                    fmt::format("phi_{},{} evaluated outside its domain at {}", s, t, grid[i]));
      raw[i] += tables.cell_cdf(t, z, y) * p;
    }
  }
  return raw;
}

} // namespace

MonotoneCdf
potential_cdf(Treatment s, const MapFamily& maps, const CellTables& tables, std::size_t z)
{
  return isotonize(domain_of(s, maps), raw_potential_cdf(s, maps, tables, z));
}

MonotoneCdf
potential_cdf_pooled(Treatment s, const MapFamily& maps, const CellTables& tables)
{
  const auto& grid = domain_of(s, maps);
  std::vector<double> raw(grid.size(), 0.0);
  for (std::size_t z = 0; z < tables.num_instruments(); ++z) {
    auto part = raw_potential_cdf(s, maps, tables, z);
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] += tables.weights[z] * part[i];
  }
  return isotonize(grid, raw);
}

double
z_invariance_gap(Treatment s, const MapFamily& maps, const CellTables& tables)
{
  std::vector<MonotoneCdf> per_z;
  for (std::size_t z = 0; z < tables.num_instruments(); ++z)
    per_z.push_back(potential_cdf(s, maps, tables, z));
  double gap = 0.0;
  for (std::size_t a = 0; a < per_z.size(); ++a) {
    for (std::size_t b = a + 1; b < per_z.size(); ++b) {
      for (std::size_t i = 0; i < per_z[a].size(); ++i)
        gap = std::max(gap, std::abs(per_z[a].values()[i] - per_z[b].values()[i]));
    }
  }
  return gap;
}

MeanEstimate
potential_mean(Treatment s, const MapFamily& maps, const Dataset& data, std::size_t z)
{
  const std::size_t nt = data.num_treatments();
  std::vector<double> sum(nt, 0.0);
  std::vector<double> count(nt, 0.0);
  double n_z = 0.0;
  MeanEstimate out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.z[i] != z)
      continue;
    n_z += 1.0;
    bool clamped = false;
    sum[data.t[i]] += maps(data.t[i], s).evaluate(data.y[i], clamped);
    count[data.t[i]] += 1.0;
    out.clamped += clamped;
  }
  if (n_z == 0.0)
    throw Error(ErrorKind::empty_cell, fmt::format("instrument value '{}' has no observations", data.labels.at(z)));
  // sum_t (cell mean) * (cell share) collapses to the plain average at z.
  double total = 0.0;
  for (Treatment t = 0; t < nt; ++t)
    total += sum[t];
  out.value = total / n_z;
  return out;
}

MeanEstimate
potential_mean_pooled(Treatment s, const MapFamily& maps, const Dataset& data)
{
  if (data.size() == 0)
    throw Error(ErrorKind::empty_sample, "dataset has no rows");
  MeanEstimate out;
  double total = 0.0;
  double total_sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool clamped = false;
    const double v = maps(data.t[i], s).evaluate(data.y[i], clamped);
    total += v;
    total_sq += v * v;
    out.clamped += clamped;
  }
  const double n = static_cast<double>(data.size());
  out.value = total / n;
  out.standard_error = std::sqrt(std::max(0.0, total_sq / n - out.value * out.value) / n);
  return out;
}

QuantileResult
window_quantile(const MonotoneCdf& cdf, double tau)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", tau));
  if (cdf.empty())
    throw Error(ErrorKind::empty_sample, "quantile of an empty CDF");
  const auto& v = cdf.values();
  // The CDF is only known on the window, so tau at or below its first value
  // may have its quantile further left.
  if (tau <= v.front() || tau > v.back())
    throw Error(ErrorKind::tau_outside_window,
                fmt::format("tau = {} outside the window's CDF range ({}, {}]", tau, v.front(), v.back()));
  return generalized_inverse(cdf, tau);
}

double
qte(const MonotoneCdf& cdf_s, const MonotoneCdf& cdf_t, double tau)
{
  return window_quantile(cdf_s, tau).value - window_quantile(cdf_t, tau).value;
}

double
ate(const std::vector<double>& means, Treatment s, Treatment t)
{
  return means.at(s) - means.at(t);
}

std::string
LocalGroup::label(const std::vector<std::string>& labels) const
{
  return fmt::format("D^{}_{}=1,D^{}_{}=1", own, labels.at(away), sign, labels.at(toward));
}

std::vector<LocalGroup>
local_groups(const SystemTables& system)
{
  std::vector<LocalGroup> out;
  for (std::size_t m = 1; m <= system.k; ++m) {
    for (std::size_t j = 0; j <= system.k; ++j) {
      const auto& c = system.others[m - 1][j];
      if (!c)
        continue;
      LocalGroup g;
      g.toward = system.oriented[m - 1].first;
      g.away = system.oriented[m - 1].second;
      g.sign = system.original[m];
      g.own = system.original[j];
      g.table = *c;
      out.push_back(std::move(g));
    }
  }
  return out;
}

const LocalGroup&
find_group(const std::vector<LocalGroup>& groups, Treatment t, Treatment t_prime)
{
  for (const auto& g : groups) {
    if ((g.sign == t && g.own == t_prime) || (g.sign == t_prime && g.own == t))
      return g;
  }
  throw Error(ErrorKind::no_eligible_pair,
              fmt::format("no pair with sign treatment {} or {} pairs them in a complier group", t, t_prime));
}

MonotoneCdf
local_cdf(Treatment t_prime, const LocalGroup& group, const MapFamily& maps)
{
  if (t_prime == group.own)
    return group.table.cdf;
  const CounterfactualMap& phi = maps(t_prime, group.own);
  std::vector<double> raw(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i)
    raw[i] = group.table.cdf(phi.images()[i]);
  return isotonize(phi.grid(), raw);
}

MeanEstimate
local_mean(Treatment t_prime, const LocalGroup& group, const Dataset& data, const MapFamily& maps)
{
  if (group.table.treatment != group.own)
    throw Error(ErrorKind::sign_treatment_mismatch, "group table does not describe the group's own treatment");
  const CounterfactualMap& g = maps(group.own, t_prime);
  // A_z = E[g(Y) 1{T = own} | Z = z] and p_z = P(T = own | Z = z) for the
  // two instrument values of the pair.
  double a_sum[2] = { 0.0, 0.0 };
  double p_sum[2] = { 0.0, 0.0 };
  double n[2] = { 0.0, 0.0 };
  MeanEstimate out;
  auto slot = [&](std::size_t z) { return z == group.away ? 0 : (z == group.toward ? 1 : -1); };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int s = slot(data.z[i]);
    if (s < 0)
      continue;
    n[s] += 1.0;
    if (data.t[i] != group.own)
      continue;
    bool clamped = false;
    a_sum[s] += g.evaluate(data.y[i], clamped);
    p_sum[s] += 1.0;
    out.clamped += clamped;
  }
  if (n[0] == 0.0 || n[1] == 0.0)
    throw Error(ErrorKind::empty_cell, "a group instrument value has no observations");
  if (p_sum[0] == 0.0)
    throw Error(ErrorKind::empty_cell,
                fmt::format("cell (t={}, z={}) is empty", group.own, data.labels.at(group.away)));
  const double prob = p_sum[0] / n[0] - p_sum[1] / n[1];
  if (!(prob > 0.0))
    throw Error(ErrorKind::weak_pair, "local group has no estimated mass");
  out.value = (a_sum[0] / n[0] - a_sum[1] / n[1]) / prob;

  double var = 0.0;
  double ss[2] = { 0.0, 0.0 };
  double sx[2] = { 0.0, 0.0 };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int s = slot(data.z[i]);
    if (s < 0)
      continue;
    double x = 0.0;
    if (data.t[i] == group.own)
      x = g(data.y[i]) - out.value;
    sx[s] += x;
    ss[s] += x * x;
  }
  for (int s = 0; s < 2; ++s) {
    const double m = sx[s] / n[s];
    var += std::max(0.0, ss[s] / n[s] - m * m) / n[s];
  }
  out.standard_error = std::sqrt(var) / prob;
  return out;
}

double
late(Treatment t, Treatment t_prime, const std::vector<LocalGroup>& groups, const Dataset& data,
     const MapFamily& maps)
{
  if (t == t_prime)
    return 0.0;
  const LocalGroup& g = find_group(groups, t, t_prime);
  return local_mean(t, g, data, maps).value - local_mean(t_prime, g, data, maps).value;
}

double
lqte(Treatment t, Treatment t_prime, double tau, const std::vector<LocalGroup>& groups, const MapFamily& maps)
{
  if (t == t_prime)
    return 0.0;
  const LocalGroup& g = find_group(groups, t, t_prime);
  return qte(local_cdf(t, g, maps), local_cdf(t_prime, g, maps), tau);
}

std::vector<double>
default_tau_grid()
{
  std::vector<double> out;
  for (int i = 1; i <= 19; ++i)
    out.push_back(0.05 * i);
  return out;
}

} // namespace ivmono
