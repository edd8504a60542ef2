#include "ivmono/counterfactual.hpp"

#include "ivmono/error.hpp"
#include "ivmono/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

std::size_t
SystemTables::canonical(Treatment t) const
{
  auto it = std::find(original.begin(), original.end(), t);
  if (it == original.end())
    throw Error(ErrorKind::treatment_mismatch, fmt::format("treatment {} is not part of the system", t));
  return static_cast<std::size_t>(it - original.begin());
}

SystemTables
build_system(const CellTables& tables, const MonotonicitySpec& spec, double eta)
{
  const std::size_t k = tables.k;
  const std::size_t nt = tables.num_treatments();
  std::vector<std::pair<Treatment, std::size_t>> chosen;
  for (std::size_t li : spec.lambda_star) {
    if (li >= spec.pairs.size())
      throw Error(ErrorKind::config_invalid, "lambda_star references a missing pair");
    const auto& pm = spec.pairs[li];
    if (!pm.sign_treatment)
      throw Error(ErrorKind::assumption_three_violated,
                  fmt::format("pair ({},{}) has no sign treatment", pm.pair.first, pm.pair.second));
    chosen.emplace_back(*pm.sign_treatment, li);
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i = 1; i < chosen.size(); ++i) {
    if (chosen[i].first == chosen[i - 1].first)
      throw Error(ErrorKind::assumption_three_violated,
                  fmt::format("two selected pairs share sign treatment {}", chosen[i].first));
  }
  if (chosen.size() != k)
    throw Error(ErrorKind::assumption_three_violated,
                fmt::format("{} pairs with distinct sign treatments selected; {} needed", chosen.size(), k));

  SystemTables sys;
  sys.k = k;
  sys.analytic = tables.analytic();
  std::vector<bool> is_sign(nt, false);
  for (const auto& c : chosen) {
    if (c.first >= nt)
      throw Error(ErrorKind::config_invalid, fmt::format("sign treatment {} exceeds k", c.first));
    is_sign[c.first] = true;
  }
  for (Treatment t = 0; t < nt; ++t) {
    if (!is_sign[t])
      sys.original.push_back(t);
  }
  for (const auto& c : chosen)
    sys.original.push_back(c.first);

  const auto& p = tables.propensity;
  for (std::size_t m = 1; m <= k; ++m) {
    const Treatment s = sys.original[m];
    const InstrumentPair pair = spec.pairs[chosen[m - 1].second].pair;
    const bool first_toward = p(pair.first, s) > p(pair.second, s);
    const std::size_t toward = first_toward ? pair.first : pair.second;
    const std::size_t away = first_toward ? pair.second : pair.first;
    sys.oriented.push_back({ toward, away });
    sys.own.push_back(complier_cdf(tables, away, toward, s, eta));

    std::vector<std::optional<ComplierTable>> row(k + 1);
    double total = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
      if (j == m)
        continue;
      const Treatment tj = sys.original[j];
      const double d = p(away, tj) - p(toward, tj);
      if (d < -eta)
        throw Error(ErrorKind::sign_treatment_mismatch,
                    fmt::format("treatment {} moves with sign treatment {} on pair ({},{})",
                                tj, s, tables.labels[pair.first], tables.labels[pair.second]));
      if (d <= 1e-12)
        continue;
      row[j] = complier_cdf(tables, toward, away, tj, eta);
      total += row[j]->probability;
    }
    if (!row[m - 1])
      throw Error(ErrorKind::weak_pair,
                  fmt::format("pair ({},{}) pushes no units into treatment {}",
                              tables.labels[pair.first], tables.labels[pair.second], sys.original[m - 1]));
    sys.balance.push_back(sys.own.back().probability - total);
    sys.others.push_back(std::move(row));
  }
  return sys;
}

SolverOptions
default_solver_options(const SystemTables& system)
{
  SolverOptions o;
  if (!system.analytic) {
    o.tolerance = 1e-8;
    o.bracket_slack = 0.05;
  }
  return o;
}

namespace {

// The level set {y : F(y) = tau} has more than one point. Estimated CDFs are
// step functions, constant up to the next grid point, so reaching tau
// exactly already spans an interval there.
bool
flat_at(const MonotoneCdf& f, std::size_t i, double tau, bool step)
{
  const auto& v = f.values();
  if (i + 1 >= v.size() || std::abs(v[i] - tau) > 1e-12)
    return false;
  return step || std::abs(v[i + 1] - tau) <= 1e-12;
}

// Extended index domain of one unknown: -1 stands for -inf, size for +inf.
using Index = long;

struct Equation
{
  const MonotoneCdf* own = nullptr;
  double p_own = 0.0;
  std::vector<const MonotoneCdf*> other;
  std::vector<double> p_other;
};

class Recursion
{
public:
  Recursion(const SystemTables& sys, const SolverOptions& opt, double y_f)
    : sys_(sys)
    , opt_(opt)
    , k_(sys.k)
    , y_f_(y_f)
    , eq_(sys.k + 1)
    , idx_(sys.k, 0)
    , size_(sys.k, 0)
    , res_(sys.k + 1, 0.0)
    , bound_(sys.k + 1, 0.0)
  {
    for (std::size_t m = 1; m <= k_; ++m) {
      Equation& e = eq_[m];
      e.own = &sys.own[m - 1].cdf;
      e.p_own = sys.own[m - 1].probability;
      e.other.assign(k_ + 1, nullptr);
      e.p_other.assign(k_ + 1, 0.0);
      for (std::size_t j = 0; j <= k_; ++j) {
        if (const auto& c = sys.others[m - 1][j]) {
          e.other[j] = &c->cdf;
          e.p_other[j] = c->probability;
        }
      }
    }
    for (std::size_t j = 0; j < k_; ++j)
      size_[j] = static_cast<Index>(sys.own.empty() ? 0 : grid_of(j).size());
  }

  const std::vector<double>& grid_of(std::size_t j) const
  {
    // Every table of canonical treatment j shares one grid.
    if (j >= 1)
      return sys_.own[j - 1].cdf.grid();
    return eq_[1].other[0]->grid();
  }

  double value(const MonotoneCdf* f, std::size_t j) const
  {
    if (j == k_)
      return (*f)(y_f_);
    const Index i = idx_[j];
    if (i < 0)
      return 0.0;
    if (i >= size_[j])
      return 1.0;
    return f->values()[static_cast<std::size_t>(i)];
  }

  double g(std::size_t m) const
  {
    const Equation& e = eq_[m];
    double s = 0.0;
    for (std::size_t j = 0; j <= k_; ++j) {
      if (j != m && e.other[j])
        s += e.p_other[j] * value(e.other[j], j);
    }
    return s / e.p_own;
  }

  void level_one()
  {
    const Equation& e = eq_[1];
    double rest = 0.0;
    for (std::size_t j = 2; j <= k_; ++j) {
      if (e.other[j])
        rest += e.p_other[j] * value(e.other[j], j);
    }
    const double tau = (value(e.own, 1) * e.p_own - rest) / e.p_other[0];
    const MonotoneCdf& f0 = *e.other[0];
    Index i;
    if (tau <= 0.0) {
      i = -1;
    } else {
      std::size_t r = first_index_reaching(f0, tau);
      i = r == npos ? size_[0] : static_cast<Index>(r);
    }
    idx_[0] = i;
    const auto& v = f0.values();
    flat_ = false;
    if (i >= 0 && i < size_[0]) {
      const double prev = i == 0 ? 0.0 : v[static_cast<std::size_t>(i - 1)];
      bound_[1] = (v[static_cast<std::size_t>(i)] - prev) * e.p_other[0] / e.p_own;
      flat_ = flat_at(f0, static_cast<std::size_t>(i), tau, !sys_.analytic);
    } else {
      bound_[1] = inf;
    }
    res_[1] = value(e.own, 1) - g(1);
  }

  void level(std::size_t m)
  {
    if (m == 1) {
      level_one();
      return;
    }
    const std::size_t var = m - 1;
    const double target = value(eq_[m].own, m);
    auto eval = [&](Index i) {
      idx_[var] = i;
      level(m - 1);
      return g(m);
    };
    Index lo = -1;
    Index hi = size_[var];
    double g_hi = eval(hi);
    Index final_idx;
    double jump;
    if (g_hi < target) {
      final_idx = hi;
      jump = inf;
      saturated_ = true;
    } else {
      double g_lo = eval(lo);
      if (g_lo >= target) {
        final_idx = lo;
        jump = inf;
        saturated_ = true;
      } else {
        while (hi - lo > 1) {
          const Index mid = lo + (hi - lo) / 2;
          const double gm = eval(mid);
          if (gm < g_lo - opt_.bracket_slack || gm > g_hi + opt_.bracket_slack)
            throw Error(ErrorKind::bracketing_violation,
                        fmt::format("equation {} at y_f = {}: G({}) = {} outside [{}, {}]",
                                    m, y_f_, mid, gm, g_lo, g_hi));
          if (gm >= target) {
            hi = mid;
            g_hi = gm;
          } else {
            lo = mid;
            g_lo = gm;
          }
        }
        final_idx = hi;
        jump = g_hi - g_lo;
      }
    }
    // Re-solve at the answer so every nested unknown matches it.
    eval(final_idx);
    bound_[m] = jump;
    res_[m] = target - g(m);
  }

  Solution run()
  {
    saturated_ = false;
    level(k_);
    Solution s;
    s.y_f = y_f_;
    s.images.assign(k_ + 1, 0.0);
    bool finite = true;
    for (std::size_t j = 0; j < k_; ++j) {
      const Index i = idx_[j];
      double y;
      if (i < 0) {
        y = -inf;
        finite = false;
      } else if (i >= size_[j]) {
        y = inf;
        finite = false;
      } else {
        y = grid_of(j)[static_cast<std::size_t>(i)];
      }
      s.images[sys_.original[j]] = y;
    }
    s.images[sys_.original[k_]] = y_f_;
    s.residuals.assign(res_.begin() + 1, res_.end());
    s.bounds.assign(bound_.begin() + 1, bound_.end());
    s.saturated = saturated_ || !finite;
    s.flat = flat_;
    s.certified = finite;
    for (std::size_t m = 0; m < k_; ++m) {
      if (!(std::abs(s.residuals[m]) <= std::max(opt_.tolerance, s.bounds[m])))
        s.certified = false;
    }
    return s;
  }

private:
  const SystemTables& sys_;
  SolverOptions opt_;
  std::size_t k_;
  double y_f_;
  std::vector<Equation> eq_;
  std::vector<Index> idx_;
  std::vector<Index> size_;
  std::vector<double> res_;
  std::vector<double> bound_;
  bool saturated_ = false;
  bool flat_ = false;
};

} // namespace

Solution
solve_binary(const SystemTables& system, double y_f)
{
  if (system.k != 1)
    throw Error(ErrorKind::config_invalid, "binary solver needs exactly two treatments");
  const ComplierTable& c1 = system.own[0];
  const ComplierTable& c0 = *system.others[0][0];
  Solution s;
  s.y_f = y_f;
  s.images.assign(2, 0.0);
  s.images[system.original[1]] = y_f;
  const double tau = c1.cdf(y_f);
  const auto& grid = c0.cdf.grid();
  const auto& v = c0.cdf.values();
  double y0;
  double bound = inf;
  if (tau <= 0.0) {
    y0 = -inf;
  } else {
    std::size_t i = first_index_reaching(c0.cdf, tau);
    if (i == npos) {
      y0 = inf;
    } else {
      y0 = grid[i];
      bound = v[i] - (i == 0 ? 0.0 : v[i - 1]);
      s.flat = flat_at(c0.cdf, i, tau, !system.analytic);
    }
  }
  s.images[system.original[0]] = y0;
  s.residuals = { tau - c0.cdf(y0) };
  s.bounds = { bound };
  s.saturated = !std::isfinite(y0);
  s.certified = std::isfinite(y0) && std::abs(s.residuals[0]) <= std::max(1e-8, bound);
  return s;
}

CounterfactualMap
solve_binary_map(const SystemTables& system, const std::vector<double>& grid)
{
  std::vector<double> g;
  std::vector<double> images;
  for (double y : grid) {
    Solution s = solve_binary(system, y);
    const double img = s.images[system.original[0]];
    if (std::isfinite(img)) {
      g.push_back(y);
      images.push_back(img);
    }
  }
  if (g.empty())
    throw Error(ErrorKind::no_solution_on_grid, "binary map has no finite image on the grid");
  return CounterfactualMap(system.original[1], system.original[0], std::move(g), std::move(images));
}

Solution
solve_k2(const SystemTables& system, double y_f, const SolverOptions& options)
{
  if (system.k != 2)
    throw Error(ErrorKind::config_invalid, "solve_k2 needs exactly three treatments");
  // Canonical labels: y_2 = y_f is given, y_1 is scanned, y_0 follows from
  // the first equation through the quantile of F_{1,0}.
  const ComplierTable& own1 = system.own[0];
  const ComplierTable& own2 = system.own[1];
  const ComplierTable* f10 = system.others[0][0] ? &*system.others[0][0] : nullptr;
  const ComplierTable* f12 = system.others[0][2] ? &*system.others[0][2] : nullptr;
  const ComplierTable* f20 = system.others[1][0] ? &*system.others[1][0] : nullptr;
  const ComplierTable* f21 = system.others[1][1] ? &*system.others[1][1] : nullptr;
  if (!f10 || !f21)
    throw Error(ErrorKind::weak_pair, "system lacks the compliers the explicit formula divides by");

  const auto& g0 = f10->cdf.grid();
  const auto& g1 = own1.cdf.grid();
  const long n0 = static_cast<long>(g0.size());
  const long n1 = static_cast<long>(g1.size());
  auto at = [](const MonotoneCdf& f, long i, long n) {
    if (i < 0)
      return 0.0;
    if (i >= n)
      return 1.0;
    return f.values()[static_cast<std::size_t>(i)];
  };

  const double target = own2.cdf(y_f);
  double rest = 0.0;
  if (f12)
    rest += f12->probability * f12->cdf(y_f);

  struct Step
  {
    long i0;
    double g;
    double tau;
  };
  auto step = [&](long i1) {
    Step st;
    st.tau = (at(own1.cdf, i1, n1) * own1.probability - rest) / f10->probability;
    if (st.tau <= 0.0) {
      st.i0 = -1;
    } else {
      std::size_t r = first_index_reaching(f10->cdf, st.tau);
      st.i0 = r == npos ? n0 : static_cast<long>(r);
    }
    double s = 0.0;
    if (f20)
      s += f20->probability * at(f20->cdf, st.i0, n0);
    s += f21->probability * at(f21->cdf, i1, n1);
    st.g = s / own2.probability;
    return st;
  };

  bool domain_hit = false;
  long found = n1;
  Step chosen{};
  double g_prev = 0.0;
  double jump = inf;
  bool have_prev = false;
  for (long i1 = -1; i1 <= n1; ++i1) {
    Step st = step(i1);
    if (i1 >= 0 && i1 < n1 && st.tau > 0.0 && st.tau <= 1.0)
      domain_hit = true;
    if (st.g >= target) {
      found = i1;
      chosen = st;
      jump = have_prev && i1 >= 0 ? st.g - g_prev : inf;
      break;
    }
    g_prev = st.g;
    have_prev = true;
    if (i1 == n1)
      chosen = st;
  }
  if (!domain_hit && found == n1)
    throw Error(ErrorKind::domain_empty,
                fmt::format("first-equation quantile argument leaves (0, 1] on the whole grid at y_f = {}", y_f));
  if (found == n1)
    jump = inf;

  Solution s;
  s.y_f = y_f;
  s.images.assign(3, 0.0);
  auto image = [](const std::vector<double>& g, long i, long n) {
    if (i < 0)
      return -inf;
    if (i >= n)
      return inf;
    return g[static_cast<std::size_t>(i)];
  };
  s.images[system.original[0]] = image(g0, chosen.i0, n0);
  s.images[system.original[1]] = image(g1, found, n1);
  s.images[system.original[2]] = y_f;

  // Residual of the first equation, in the same arithmetic as the general
  // solver.
  double b1 = inf;
  if (chosen.i0 >= 0 && chosen.i0 < n0) {
    const auto& v = f10->cdf.values();
    const double prev = chosen.i0 == 0 ? 0.0 : v[static_cast<std::size_t>(chosen.i0 - 1)];
    b1 = (v[static_cast<std::size_t>(chosen.i0)] - prev) * f10->probability / own1.probability;
    s.flat = flat_at(f10->cdf, static_cast<std::size_t>(chosen.i0), chosen.tau, !system.analytic);
  }
  double g1v = 0.0;
  g1v += f10->probability * at(f10->cdf, chosen.i0, n0);
  if (f12)
    g1v += f12->probability * f12->cdf(y_f);
  g1v /= own1.probability;
  s.residuals = { at(own1.cdf, found, n1) - g1v, target - chosen.g };
  s.bounds = { b1, jump };
  const bool finite = std::isfinite(s.images[system.original[0]]) && std::isfinite(s.images[system.original[1]]);
  s.saturated = !finite;
  s.certified = finite;
  for (std::size_t m = 0; m < 2; ++m) {
    if (!(std::abs(s.residuals[m]) <= std::max(options.tolerance, s.bounds[m])))
      s.certified = false;
  }
  return s;
}

Solution
solve_general(const SystemTables& system, double y_f, const SolverOptions& options)
{
  if (system.k == 0 || system.own.size() != system.k)
    throw Error(ErrorKind::assumption_three_violated, "system has no equations");
  if (system.k == 1)
    return solve_binary(system, y_f);
  Recursion r(system, options, y_f);
  return r.run();
}

void
require_certified(const Solution& s)
{
  if (s.certified)
    return;
  std::string res;
  for (std::size_t m = 0; m < s.residuals.size(); ++m)
    res += fmt::format("{}{:.3g} (bound {:.3g})", m ? ", " : "", s.residuals[m], s.bounds[m]);
  throw Error(ErrorKind::no_solution_on_grid,
              fmt::format("no certified solution at y_f = {}; residuals {}", s.y_f, res));
}

std::vector<double>
default_map_grid(const CellTables& tables, const SystemTables& system, std::size_t nodes)
{
  const SupportWindow& w = tables.windows.at(system.anchor());
  return uniform_grid(w.lower, w.upper, nodes);
}

MapFamily
build_all_maps(const SystemTables& system, const std::vector<double>& grid, const SolverOptions& options)
{
  const std::size_t nt = system.k + 1;
  const Treatment anchor = system.anchor();
  MapFamily fam;
  fam.k = system.k;
  fam.anchor = anchor;

  std::vector<Solution> sols(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { sols[i] = solve_general(system, grid[i], options); });

  std::vector<double> kept;
  std::vector<std::vector<double>> images(nt);
  for (const auto& s : sols) {
    bool finite = std::all_of(s.images.begin(), s.images.end(), [](double x) { return std::isfinite(x); });
    if (!finite) {
      ++fam.dropped_nodes;
      continue;
    }
    if (!s.certified)
      ++fam.uncertified;
    kept.push_back(s.y_f);
    for (Treatment t = 0; t < nt; ++t)
      images[t].push_back(s.images[t]);
  }
  fam.solutions = std::move(sols);
  if (kept.size() < 2)
    throw Error(ErrorKind::no_solution_on_grid, "fewer than two grid nodes have finite solutions");
  if (fam.dropped_nodes > 0)
    fam.warnings.push_back(fmt::format("Saturated: {} map grid node(s) without a finite solution were dropped",
                                       fam.dropped_nodes));
  if (fam.uncertified > 0)
    fam.warnings.push_back(fmt::format("Uncertified: {} node(s) exceed the residual tolerance", fam.uncertified));
  std::size_t flats = 0;
  for (const auto& s : fam.solutions)
    flats += s.flat;
  if (flats > 0)
    fam.warnings.push_back(fmt::format("FlatRegion: {} node(s) hit a flat complier CDF", flats));

  fam.maps.assign(nt, std::vector<CounterfactualMap>(nt));
  for (Treatment t = 0; t < nt; ++t) {
    if (t == anchor) {
      fam.maps[anchor][anchor] = identity_map(anchor, kept);
      continue;
    }
    fam.repaired += make_strictly_increasing(images[t]);
    fam.maps[anchor][t] = CounterfactualMap(anchor, t, kept, images[t]);
  }
  if (fam.repaired > 0)
    fam.warnings.push_back(
      fmt::format("NonMonotoneSolution: {} tabulated image(s) repaired to be strictly increasing", fam.repaired));

  for (Treatment t = 0; t < nt; ++t) {
    if (t != anchor)
      fam.maps[t][anchor] = invert_map(fam.maps[anchor][t]);
  }
  for (Treatment s = 0; s < nt; ++s) {
    if (s == anchor)
      continue;
    fam.maps[s][s] = identity_map(s, fam.maps[anchor][s].images());
    for (Treatment t = 0; t < nt; ++t) {
      if (t != s && t != anchor)
        fam.maps[s][t] = compose_maps(fam.maps[s][anchor], fam.maps[anchor][t]);
    }
  }
  return fam;
}

} // namespace ivmono
