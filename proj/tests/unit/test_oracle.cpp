#include "ivmono/analytic.hpp"
#include "ivmono/diagnostics.hpp"
#include "ivmono/dgp.hpp"
#include "ivmono/error.hpp"
#include "ivmono/oracle.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <doctest.h>

using namespace ivmono;

namespace {

ErrorKind
kind_of(auto&& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ivmono::Error");
  return ErrorKind::io_error;
}

const std::vector<std::vector<double>> golden{ { 0.3125, 0.4375, 0.25 },
                                              { 0.25, 0.375, 0.375 },
                                              { 0.125, 0.3125, 0.5625 } };

std::vector<OutcomeModel>
shifted_normals(std::size_t n)
{
  std::vector<OutcomeModel> out;
  for (std::size_t t = 0; t < n; ++t)
    out.push_back({ OutcomeFamily::gaussian, static_cast<double>(t), 1.0 });
  return out;
}

double
step_of(const std::vector<double>& g)
{
  double s = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i)
    s = std::max(s, g[i] - g[i - 1]);
  return s;
}

} // namespace

TEST_CASE("outcome grids span the central quantiles")
{
  const auto grids = oracle::outcome_grids(shifted_normals(3), 101);
  REQUIRE(grids.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    REQUIRE(grids[t].size() == 101);
    CHECK(grids[t].front() == doctest::Approx(t + stats::normal_quantile(0.001)));
    CHECK(grids[t].back() == doctest::Approx(t + stats::normal_quantile(0.999)));
  }
}

TEST_CASE("exhaustive grid search on the golden propensity tables")
{
  const auto outcomes = shifted_normals(3);
  const auto tables = fixed_propensity_tables(golden, outcomes, { "0", "1", "2" });
  const auto grids = oracle::outcome_grids(outcomes, 101);
  const auto r = oracle::grid_solve(0.5, tables, grids);
  CHECK(r.candidates == 101u * 101u * 101u);
  CHECK(r.solution_count >= 1);
  CHECK_FALSE(r.saturated);
  const double step = step_of(grids[0]);
  for (Treatment t = 0; t < 3; ++t)
    CHECK(std::abs(r.best[t] - double(t)) <= step);
  // Every accepted candidate passes the tolerance.
  for (const auto& s : r.solutions) {
    for (double v : moment_residual(tables, s, 0.5))
      REQUIRE(std::abs(v) <= r.tolerance + 1e-12);
  }

  CHECK(kind_of([&] { oracle::grid_solve(0.5, tables, grids, -1.0, 1000); }) == ErrorKind::grid_too_large);
  CHECK(kind_of([&] { oracle::grid_solve(1.5, tables, grids); }) == ErrorKind::tau_out_of_range);
}

TEST_CASE("grid search refuses k above two")
{
  const auto outcomes = shifted_normals(4);
  const std::vector<std::vector<double>> p{
    { 0.4, 0.2, 0.2, 0.2 }, { 0.2, 0.4, 0.2, 0.2 }, { 0.2, 0.2, 0.4, 0.2 }, { 0.2, 0.2, 0.2, 0.4 }
  };
  const auto tables = fixed_propensity_tables(p, outcomes, { "0", "1", "2", "3" });
  CHECK(kind_of([&] { oracle::grid_solve(0.5, tables, oracle::outcome_grids(outcomes, 5)); }) ==
        ErrorKind::grid_too_large);
}

TEST_CASE("analytic counterfactual maps")
{
  const auto outcomes = shifted_normals(3);
  for (double y : { -1.0, 0.0, 2.5 }) {
    CHECK(oracle::analytic_phi(outcomes, 0, 2, y) == doctest::Approx(y + 2.0));
    CHECK(oracle::analytic_phi(outcomes, 2, 1, y) == doctest::Approx(y - 1.0));
  }
  const std::vector<OutcomeModel> expo{ { OutcomeFamily::exponential, 1.0, 0.0 },
                                        { OutcomeFamily::exponential, 2.0, 0.0 } };
  // Rate 1 to rate 2 halves every quantile.
  CHECK(oracle::analytic_phi(expo, 0, 1, 1.0) == doctest::Approx(0.5));
  CHECK(kind_of([&] { oracle::analytic_phi(expo, 0, 1, -1.0); }) == ErrorKind::outside_support);
  CHECK(kind_of([&] { oracle::analytic_phi(expo, 0, 5, 1.0); }) == ErrorKind::treatment_mismatch);
}

TEST_CASE("continuous solvers agree on Example I")
{
  const auto c = preset("example_I", 2);
  const auto tables = AnalyticDesign(c).tables();
  const auto det = detect_sign_treatments(tables.propensity, all_pairs(3), 1e-12);
  const auto spec = spec_from_detections(det, check_assumption3(det, 2));
  for (double tau : { 0.2, 0.5, 0.8 }) {
    const auto y = oracle::monotone_solve(tau, tables, spec);
    const double q = stats::normal_quantile(tau);
    for (Treatment t = 0; t < 3; ++t)
      CHECK(std::abs(y[t] - (q + double(t))) < 0.01);
    const auto nested = oracle::nested_solve(y[2], tables, spec);
    for (Treatment t = 0; t < 3; ++t)
      CHECK(std::abs(nested[t] - y[t]) < 1e-6);
  }
}

TEST_CASE("latent complier identities hold exactly")
{
  for (const auto& [name, k] : { std::pair{ "example_I", 2 }, std::pair{ "example_II", 3 }, std::pair{ "mto", 0 } }) {
    auto c = preset(name, static_cast<std::size_t>(k));
    c.seed = 17;
    const auto data = simulate(c, 5000);
    const auto stats_latent = oracle::latent_complier_stats(data, c.lambda());
    REQUIRE_FALSE(stats_latent.identities.empty());
    for (const auto& id : stats_latent.identities) {
      INFO(name << ": " << id.name);
      CHECK(id.holds);
      CHECK(id.mismatches == 0);
    }
    // Frequencies are shares of the population.
    for (const auto& s : stats_latent.sets)
      REQUIRE(s.frequency == doctest::Approx(double(s.units.size()) / data.size()));
  }

  auto c = preset("example_I", 2);
  const auto bare = simulate(c, 10, false);
  CHECK(kind_of([&] { oracle::latent_complier_stats(bare, c.lambda()); }) == ErrorKind::no_latent_data);
  CHECK(kind_of([&] { oracle::latent_complier_stats(simulate(c, 10), c.lambda()).find(0, 0, 0); }) ==
        ErrorKind::config_invalid);
}

TEST_CASE("excluded complier union for Example I")
{
  auto c = preset("example_I", 2);
  c.seed = 23;
  const auto data = simulate(c, 20000);
  const auto st = oracle::latent_complier_stats(data, c.lambda());
  // C^1_{0,1} is the disjoint union of C^0_{1,0} and C^2_{1,0}.
  const auto& whole = st.find(0, 1, 1).units;
  auto a = st.find(1, 0, 0).units;
  const auto& b = st.find(1, 0, 2).units;
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  CHECK(common.empty());
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  CHECK(a == whole);
}

TEST_CASE("rank similarity check")
{
  auto c = preset("example_I", 2);
  c.seed = 29;
  const auto inv = simulate(c, 20000);
  const auto st = oracle::latent_complier_stats(inv, c.lambda());
  const auto& set = st.find(0, 1, 1);
  const auto r = oracle::rank_similarity_check(inv, set.units, 1, 0);
  CHECK(r.distance == 0.0);
  CHECK(r.holds);
  CHECK(r.bound == doctest::Approx(1.36 * std::sqrt(2.0 / set.units.size())));

  c.rank_mode = RankMode::similarity;
  c.rho = 0.5;
  const auto sim = simulate(c, 20000);
  const auto st2 = oracle::latent_complier_stats(sim, c.lambda());
  const auto& set2 = st2.find(0, 1, 1);
  const auto r2 = oracle::rank_similarity_check(sim, set2.units, 1, 0);
  CHECK(r2.distance > 0.0);
  CHECK(r2.holds);

  CHECK(kind_of([&] { oracle::rank_similarity_check(sim, {}, 1, 0); }) == ErrorKind::empty_sample);
  const auto ranks = oracle::latent_values(sim, set2.units, 1, true);
  CHECK(std::all_of(ranks.begin(), ranks.end(), [](double u) { return u > 0.0 && u < 1.0; }));
}
