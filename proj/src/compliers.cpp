#include "ivmono/compliers.hpp"

#include "ivmono/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

PropensityMatrix
propensity_matrix(const Dataset& data)
{
  data.validate();
  const std::size_t nz = data.num_instruments();
  const std::size_t nt = data.num_treatments();
  PropensityMatrix pm;
  pm.p.assign(nz, std::vector<double>(nt, 0.0));
  pm.n_z.assign(nz, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    pm.p[data.z[i]][data.t[i]] += 1.0;
    pm.n_z[data.z[i]] += 1.0;
  }
  for (std::size_t z = 0; z < nz; ++z) {
    if (pm.n_z[z] == 0.0)
      throw Error(ErrorKind::empty_cell, fmt::format("instrument value '{}' has no observations", data.labels[z]));
    for (auto& x : pm.p[z])
      x /= pm.n_z[z];
  }
  return pm;
}

double
complier_probability(const PropensityMatrix& p, std::size_t from, std::size_t to, Treatment t, double eta)
{
  if (from >= p.rows() || to >= p.rows() || t >= p.cols())
    throw Error(ErrorKind::config_invalid, "complier probability index out of range");
  const double d = p(to, t) - p(from, t);
  if (!(d > eta))
    throw Error(ErrorKind::weak_pair,
                fmt::format("p_{}({}) - p_{}({}) = {:.6f} does not exceed {}", t, to, t, from, d, eta));
  return d;
}

ComplierTable
complier_cdf(const CellTables& tables, std::size_t from, std::size_t to, Treatment t, double eta)
{
  const auto& p = tables.propensity;
  ComplierTable out;
  out.from = from;
  out.to = to;
  out.treatment = t;
  out.probability = complier_probability(p, from, to, t, eta);

  const double p_to = p(to, t);
  const double p_from = p(from, t);
  if (!tables.analytic()) {
    if (tables.counts[to][t] == 0.0)
      throw Error(ErrorKind::empty_cell, fmt::format("cell (t={}, z={}) is empty", t, tables.labels[to]));
    double var = p_to / tables.propensity.n_z[to];
    if (p_from > 0.0)
      var += p_from / tables.propensity.n_z[from];
    out.effective_size = out.probability * out.probability / var;
  }

  const auto& hi = tables.cdf[t][to].values();
  const auto& lo = tables.cdf[t][from].values();
  std::vector<double> raw(hi.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (p_from > 0.0)
      raw[i] = (hi[i] * p_to - lo[i] * p_from) / out.probability;
    else
      raw[i] = hi[i];
  }
  out.cdf = isotonize(tables.grid[t], raw);
  const auto& v = out.cdf.values();
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.repair = std::max(out.repair, std::abs(v[i] - raw[i]));
  return out;
}

} // namespace ivmono
