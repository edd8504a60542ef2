#include "ivmono/cells.hpp"

#include "ivmono/error.hpp"
#include "ivmono/types.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

const char*
to_string(Direction d)
{
  switch (d) {
    case Direction::le: return "<=";
    case Direction::ge: return ">=";
    case Direction::both: return "==";
    case Direction::neither: return "none";
  }
  return "?";
}

std::optional<Treatment>
sign_treatment_of(const std::vector<Direction>& directions)
{
  auto opposes = [](Direction mine, Direction other) {
    if (other == Direction::both)
      return true;
    return (mine == Direction::ge && other == Direction::le) ||
           (mine == Direction::le && other == Direction::ge);
  };
  std::vector<Treatment> candidates;
  for (Treatment t = 0; t < directions.size(); ++t) {
    const Direction d = directions[t];
    if (d != Direction::ge && d != Direction::le)
      continue;
    bool ok = true;
    for (Treatment s = 0; s < directions.size() && ok; ++s) {
      if (s != t)
        ok = opposes(d, directions[s]);
    }
    if (ok)
      candidates.push_back(t);
  }
  if (candidates.size() == 1)
    return candidates.front();
  // With two treatments both entries oppose each other; take the one that
  // gains from moving to the first instrument.
  if (candidates.size() == 2 && directions.size() == 2)
    return directions[candidates[0]] == Direction::ge ? candidates[0] : candidates[1];
  return std::nullopt;
}

void
Dataset::validate() const
{
  if (y.size() != t.size() || y.size() != z.size())
    throw Error(ErrorKind::length_mismatch, "y, t and z columns differ in length");
  if (!latent.empty() && latent.size() != y.size())
    throw Error(ErrorKind::length_mismatch, "latent records do not match the observed rows");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]))
      throw Error(ErrorKind::non_finite, fmt::format("row {}: outcome is not finite", i + 1));
    if (t[i] > k)
      throw Error(ErrorKind::config_invalid, fmt::format("row {}: treatment {} exceeds k = {}", i + 1, t[i], k));
    if (z[i] >= labels.size())
      throw Error(ErrorKind::config_invalid, fmt::format("row {}: unknown instrument index {}", i + 1, z[i]));
  }
}

CellTables
tables_from_data(const Dataset& data, double trim_fraction)
{
  data.validate();
  if (data.size() == 0)
    throw Error(ErrorKind::empty_sample, "dataset has no rows");
  const std::size_t nt = data.num_treatments();
  const std::size_t nz = data.num_instruments();

  std::vector<std::vector<std::vector<double>>> cells(nt, std::vector<std::vector<double>>(nz));
  for (std::size_t i = 0; i < data.size(); ++i)
    cells[data.t[i]][data.z[i]].push_back(data.y[i]);

  CellTables tab;
  tab.k = data.k;
  tab.labels = data.labels;
  tab.counts.assign(nz, std::vector<double>(nt, 0.0));
  tab.propensity.p.assign(nz, std::vector<double>(nt, 0.0));
  tab.propensity.n_z.assign(nz, 0.0);
  tab.weights.assign(nz, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    for (Treatment t = 0; t < nt; ++t) {
      tab.counts[z][t] = static_cast<double>(cells[t][z].size());
      tab.propensity.n_z[z] += tab.counts[z][t];
    }
    if (tab.propensity.n_z[z] == 0.0)
      throw Error(ErrorKind::empty_cell, fmt::format("instrument value '{}' has no observations", data.labels[z]));
    for (Treatment t = 0; t < nt; ++t)
      tab.propensity.p[z][t] = tab.counts[z][t] / tab.propensity.n_z[z];
    tab.weights[z] = tab.propensity.n_z[z] / static_cast<double>(data.size());
  }

  tab.grid.resize(nt);
  tab.cdf.resize(nt);
  tab.windows.resize(nt);
  for (Treatment t = 0; t < nt; ++t) {
    std::vector<double> pooled;
    for (std::size_t z = 0; z < nz; ++z)
      pooled.insert(pooled.end(), cells[t][z].begin(), cells[t][z].end());
    if (pooled.empty())
      throw Error(ErrorKind::empty_cell, fmt::format("treatment {} is never observed", t));
    std::sort(pooled.begin(), pooled.end());
    tab.windows[t] = trim_support(pooled, trim_fraction);
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    tab.grid[t] = pooled;

    for (std::size_t z = 0; z < nz; ++z) {
      std::vector<double> values(pooled.size(), 0.0);
      auto& s = cells[t][z];
      if (!s.empty()) {
        std::sort(s.begin(), s.end());
        const double n = static_cast<double>(s.size());
        std::size_t j = 0;
        for (std::size_t g = 0; g < pooled.size(); ++g) {
          while (j < s.size() && s[j] <= pooled[g])
            ++j;
          values[g] = static_cast<double>(j) / n;
        }
      }
      tab.cdf[t].emplace_back(tab.grid[t], std::move(values));
    }
  }
  return tab;
}

} // namespace ivmono
