#include "ivmono/oracle.hpp"

#include "ivmono/error.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono::oracle {

std::vector<std::vector<double>>
outcome_grids(const std::vector<OutcomeModel>& outcomes, std::size_t nodes)
{
  std::vector<std::vector<double>> out;
  for (const auto& o : outcomes)
    out.push_back(uniform_grid(o.quantile(0.001), o.quantile(0.999), nodes));
  return out;
}

GridSolveResult
grid_solve(double tau,
           const CellTables& tables,
           const std::vector<std::vector<double>>& grids,
           double tolerance,
           std::size_t max_candidates,
           std::size_t max_solutions)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", tau));
  const std::size_t nt = tables.num_treatments();
  const std::size_t nz = tables.num_instruments();
  if (grids.size() != nt)
    throw Error(ErrorKind::length_mismatch, "one search grid per treatment is required");
  if (nt > 3)
    throw Error(ErrorKind::grid_too_large, "exhaustive search is limited to k <= 2; use monotone_solve");
  double total = 1.0;
  for (const auto& g : grids)
    total *= static_cast<double>(g.size());
  if (total > static_cast<double>(max_candidates))
    throw Error(ErrorKind::grid_too_large, fmt::format("{} candidates exceed the cap of {}", total, max_candidates));

  // term[t][z][i] = F(grid_t[i] | t, z) p_t(z)
  std::vector<std::vector<std::vector<double>>> term(nt, std::vector<std::vector<double>>(nz));
  double auto_tol = 0.0;
  for (Treatment t = 0; t < nt; ++t) {
    for (std::size_t z = 0; z < nz; ++z) {
      auto& v = term[t][z];
      v.resize(grids[t].size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = tables.cell_cdf(t, z, grids[t][i]) * tables.propensity(z, t);
        if (i > 0)
          auto_tol = std::max(auto_tol, v[i] - v[i - 1]);
      }
    }
  }

  GridSolveResult res;
  res.tolerance = tolerance >= 0.0 ? tolerance : auto_tol;
  res.best_residual = inf;
  std::vector<std::size_t> size(3, 1);
  for (Treatment t = 0; t < nt; ++t)
    size[t] = grids[t].size();
  std::vector<std::size_t> best_idx(nt, 0);
  std::vector<double> partial(nz);
  for (std::size_t a = 0; a < size[0]; ++a) {
    for (std::size_t b = 0; b < size[1]; ++b) {
      for (std::size_t z = 0; z < nz; ++z) {
        partial[z] = term[0][z][a] - tau;
        if (nt > 1)
          partial[z] += term[1][z][b];
      }
      for (std::size_t c = 0; c < size[2]; ++c) {
        double worst = 0.0;
        for (std::size_t z = 0; z < nz; ++z) {
          double r = partial[z];
          if (nt > 2)
            r += term[2][z][c];
          worst = std::max(worst, std::abs(r));
        }
        ++res.candidates;
        if (worst < res.best_residual) {
          res.best_residual = worst;
          best_idx = { a, b, c };
          best_idx.resize(nt);
        }
        if (worst <= res.tolerance) {
          ++res.solution_count;
          if (res.solutions.size() < max_solutions) {
            std::vector<double> y = { grids[0][a] };
            if (nt > 1)
              y.push_back(grids[1][b]);
            if (nt > 2)
              y.push_back(grids[2][c]);
            res.solutions.push_back(std::move(y));
          }
        }
      }
    }
  }
  for (Treatment t = 0; t < nt; ++t) {
    res.best.push_back(grids[t][best_idx[t]]);
    if (best_idx[t] == 0 || best_idx[t] + 1 == grids[t].size())
      res.saturated = true;
  }
  return res;
}

namespace {

struct OrientedPair
{
  std::size_t toward;
  std::size_t away;
};

// Canonical order: the non-sign treatment first, then sign treatments
// ascending, each with its oriented pair.
void
canonical_layout(const CellTables& tables,
                 const MonotonicitySpec& spec,
                 std::vector<Treatment>& order,
                 std::vector<OrientedPair>& pairs)
{
  const std::size_t nt = tables.num_treatments();
  std::vector<std::pair<Treatment, InstrumentPair>> signs;
  for (std::size_t li : spec.lambda_star) {
    const auto& pm = spec.pairs.at(li);
    if (!pm.sign_treatment)
      throw Error(ErrorKind::assumption_three_violated, "selected pair has no sign treatment");
    signs.emplace_back(*pm.sign_treatment, pm.pair);
  }
  std::sort(signs.begin(), signs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (signs.size() != tables.k)
    throw Error(ErrorKind::assumption_three_violated, "lambda_star must hold k pairs");
  std::vector<bool> used(nt, false);
  for (const auto& s : signs)
    used.at(s.first) = true;
  order.clear();
  for (Treatment t = 0; t < nt; ++t) {
    if (!used[t])
      order.push_back(t);
  }
  if (order.size() != 1)
    throw Error(ErrorKind::assumption_three_violated, "sign treatments are not distinct");
  pairs.assign(1, { 0, 0 });
  for (const auto& [s, pair] : signs) {
    order.push_back(s);
    const auto& p = tables.propensity;
    const bool first = p(pair.first, s) > p(pair.second, s);
    pairs.push_back(first ? OrientedPair{ pair.first, pair.second } : OrientedPair{ pair.second, pair.first });
  }
}

class Nested
{
public:
  Nested(const CellTables& tables, const MonotonicitySpec& spec, int iterations)
    : tables_(tables)
    , iterations_(iterations)
  {
    canonical_layout(tables, spec, order_, pairs_);
    k_ = tables.k;
    y_.assign(k_ + 1, 0.0);
  }

  // Pi_toward - Pi_away of equation m at the current y.
  double difference(std::size_t m) const
  {
    double d = 0.0;
    for (std::size_t c = 0; c <= k_; ++c) {
      const Treatment t = order_[c];
      const auto& p = tables_.propensity;
      d += tables_.cell_cdf(t, pairs_[m].toward, y_[c]) * p(pairs_[m].toward, t) -
           tables_.cell_cdf(t, pairs_[m].away, y_[c]) * p(pairs_[m].away, t);
    }
    return d;
  }

  // Sets y_[m-1] (and below) so that equation m holds. The difference falls
  // as y_{m-1} grows, so bisect for its first nonpositive point.
  void level(std::size_t m)
  {
    const auto& grid = tables_.grid[order_[m - 1]];
    double lo = grid.front() - 1.0;
    double hi = grid.back() + 1.0;
    auto eval = [&](double y) {
      y_[m - 1] = y;
      if (m > 1)
        level(m - 1);
      return difference(m);
    };
    for (int it = 0; it < iterations_; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (eval(mid) <= 0.0)
        hi = mid;
      else
        lo = mid;
    }
    eval(hi);
  }

  std::vector<double> solve(double y_f)
  {
    y_[k_] = y_f;
    level(k_);
    std::vector<double> out(k_ + 1);
    for (std::size_t c = 0; c <= k_; ++c)
      out[order_[c]] = y_[c];
    return out;
  }

  Treatment anchor() const { return order_[k_]; }

private:
  const CellTables& tables_;
  int iterations_;
  std::size_t k_ = 0;
  std::vector<Treatment> order_;
  std::vector<OrientedPair> pairs_;
  std::vector<double> y_;
};

} // namespace

std::vector<double>
nested_solve(double y_f, const CellTables& tables, const MonotonicitySpec& spec, int iterations)
{
  Nested n(tables, spec, iterations);
  return n.solve(y_f);
}

std::vector<double>
monotone_solve(double tau, const CellTables& tables, const MonotonicitySpec& spec, int iterations)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", tau));
  Nested n(tables, spec, iterations);
  const auto& grid = tables.grid[n.anchor()];
  double lo = grid.front();
  double hi = grid.back();
  auto pi0 = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (Treatment t = 0; t < y.size(); ++t)
      s += tables.cell_cdf(t, 0, y[t]) * tables.propensity(0, t);
    return s - tau;
  };
  std::vector<double> y;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    y = n.solve(mid);
    if (pi0(y) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return n.solve(hi);
}

double
analytic_phi(const std::vector<OutcomeModel>& outcomes, Treatment s, Treatment t, double y)
{
  if (s >= outcomes.size() || t >= outcomes.size())
    throw Error(ErrorKind::treatment_mismatch, "treatment index out of range");
  if (s == t)
    return y;
  const double u = outcomes[s].cdf(y);
  if (!(u > 0.0 && u < 1.0))
    throw Error(ErrorKind::outside_support, fmt::format("F_{}({}) = {} is not interior", s, y, u));
  return outcomes[t].quantile(u);
}

double
analytic_phi(const DgpConfig& config, Treatment s, Treatment t, double y)
{
  return analytic_phi(config.outcomes, s, t, y);
}

const LatentComplierSet&
LatentComplierStats::find(std::size_t from, std::size_t to, Treatment t) const
{
  for (const auto& s : sets) {
    if (s.from == from && s.to == to && s.treatment == t)
      return s;
  }
  throw Error(ErrorKind::config_invalid, fmt::format("no complier set ({},{},{})", from, to, t));
}

LatentComplierStats
latent_complier_stats(const Dataset& data, const std::vector<PairMonotonicity>& pairs)
{
  if (!data.has_latent())
    throw Error(ErrorKind::no_latent_data, "complier enumeration needs latent records");
  const std::size_t nz = data.num_instruments();
  const std::size_t nt = data.num_treatments();
  const double n = static_cast<double>(data.size());
  LatentComplierStats out;
  for (std::size_t a = 0; a < nz; ++a) {
    for (std::size_t b = 0; b < nz; ++b) {
      if (a == b)
        continue;
      for (Treatment t = 0; t < nt; ++t) {
        LatentComplierSet s;
        s.from = a;
        s.to = b;
        s.treatment = t;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const auto& r = data.latent[i];
          if (r.t_at[a] != t && r.t_at[b] == t)
            s.units.push_back(i);
        }
        s.frequency = static_cast<double>(s.units.size()) / n;
        out.sets.push_back(std::move(s));
      }
    }
  }

  for (const auto& pm : pairs) {
    if (!pm.sign_treatment)
      continue;
    const Treatment s = *pm.sign_treatment;
    const bool ge = pm.directions.at(s) == Direction::ge;
    const std::size_t toward = ge ? pm.pair.first : pm.pair.second;
    const std::size_t away = ge ? pm.pair.second : pm.pair.first;
    const std::string tag = fmt::format("({},{})", data.labels[pm.pair.first], data.labels[pm.pair.second]);

    const auto& lhs = out.find(away, toward, s).units;
    std::vector<std::size_t> merged;
    std::size_t overlap = 0;
    std::vector<int> seen(data.size(), 0);
    for (Treatment j = 0; j < nt; ++j) {
      if (j == s)
        continue;
      for (std::size_t i : out.find(toward, away, j).units) {
        if (seen[i]++)
          ++overlap;
        merged.push_back(i);
      }
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    std::vector<std::size_t> sym;
    std::set_symmetric_difference(lhs.begin(), lhs.end(), merged.begin(), merged.end(), std::back_inserter(sym));
    out.identities.push_back({ "disjoint union " + tag, sym.empty() && overlap == 0, sym.size() + overlap });

    std::size_t group_mismatch = 0;
    for (Treatment j = 0; j < nt; ++j) {
      if (j == s)
        continue;
      const auto& set = out.find(toward, away, j).units;
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.latent[i];
        if (r.t_at[toward] == s && r.t_at[away] == j)
          group.push_back(i);
      }
      std::vector<std::size_t> diff;
      std::set_symmetric_difference(set.begin(), set.end(), group.begin(), group.end(), std::back_inserter(diff));
      group_mismatch += diff.size();
    }
    out.identities.push_back({ "two-way flow groups " + tag, group_mismatch == 0, group_mismatch });

    std::size_t count_mismatch = 0;
    for (int q = 1; q <= 19; ++q) {
      const double tau = 0.05 * q;
      auto count = [&](const std::vector<std::size_t>& units) {
        std::size_t c = 0;
        for (std::size_t i : units)
          c += data.latent[i].u[s] <= tau;
        return c;
      };
      std::size_t right = 0;
      for (Treatment j = 0; j < nt; ++j) {
        if (j != s)
          right += count(out.find(toward, away, j).units);
      }
      const std::size_t left = count(lhs);
      count_mismatch += left > right ? left - right : right - left;
    }
    out.identities.push_back({ "rank count balance " + tag, count_mismatch == 0, count_mismatch });
  }
  return out;
}

std::vector<double>
latent_values(const Dataset& data, const std::vector<std::size_t>& units, Treatment t, bool rank)
{
  if (!data.has_latent())
    throw Error(ErrorKind::no_latent_data, "latent values requested without latent records");
  std::vector<double> out;
  out.reserve(units.size());
  for (std::size_t i : units)
    out.push_back(rank ? data.latent[i].u.at(t) : data.latent[i].y.at(t));
  return out;
}

RankCheck
rank_similarity_check(const Dataset& data, const std::vector<std::size_t>& units, Treatment t, Treatment t_prime)
{
  RankCheck r;
  if (units.empty())
    throw Error(ErrorKind::empty_sample, "rank similarity check on an empty set");
  r.distance = stats::ks_two_sample(latent_values(data, units, t, true), latent_values(data, units, t_prime, true));
  r.bound = 1.36 * std::sqrt(2.0 / static_cast<double>(units.size()));
  r.holds = r.distance < r.bound;
  return r;
}

} // namespace ivmono::oracle
