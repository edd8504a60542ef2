#include "ivmono/analytic.hpp"
#include "ivmono/compliers.hpp"
#include "ivmono/dgp.hpp"
#include "ivmono/error.hpp"
#include "ivmono/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdlib>
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

std::vector<Direction>
observed(const std::vector<DirectionReport>& r)
{
  std::vector<Direction> out;
  for (const auto& d : r)
    out.push_back(d.observed);
  return out;
}

} // namespace

TEST_CASE("choice function")
{
  const std::vector<std::vector<double>> discount{ { 0, 0, 0 }, { 0, 1.5, 0 }, { 0, 0, 1.5 } };
  // Values house 1 far above the rest.
  CHECK(choice_function({ 0.0, 5.0, 0.0 }, discount, 1) == 1);
  // Indifferent everywhere with equal budgets.
  CHECK(choice_function({ 1.0, 1.0, 1.0 }, { { 0, 0, 0 } }, 0) == 0);
  // A unit buying house 2 under voucher 1 buys it under no voucher too.
  const std::vector<double> u{ 0.0, 0.2, 2.0 };
  CHECK(choice_function(u, discount, 1) == 2);
  CHECK(choice_function(u, discount, 0) == 2);
}

TEST_CASE("presets declare the expected pairs")
{
  const auto e1 = preset("example_I", 2);
  const auto l1 = e1.lambda();
  REQUIRE(l1.size() == 2);
  CHECK(l1[0].pair == InstrumentPair{ 1, 0 });
  CHECK(*l1[0].sign_treatment == 1);
  CHECK(l1[1].pair == InstrumentPair{ 2, 0 });
  CHECK(*l1[1].sign_treatment == 2);

  const auto e2 = preset("example_II", 4);
  const auto l2 = e2.lambda();
  REQUIRE(l2.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(l2[i - 1].pair == InstrumentPair{ i, i + 1 });
    CHECK(*l2[i - 1].sign_treatment == i);
  }
  CHECK(l2[3].pair == InstrumentPair{ 4, 0 });
  CHECK(*l2[3].sign_treatment == 4);

  const auto mto = preset("mto", 0);
  const auto lm = mto.lambda();
  REQUIRE(lm.size() == 2);
  CHECK(mto.labels[lm[0].pair.first] == "c");
  CHECK(mto.labels[lm[0].pair.second] == "a");
  CHECK(*lm[0].sign_treatment == 2);
  CHECK(mto.labels[lm[1].pair.first] == "b");
  CHECK(mto.labels[lm[1].pair.second] == "c");
  CHECK(*lm[1].sign_treatment == 1);

  CHECK(kind_of([] { preset("nope", 2); }) == ErrorKind::unknown_preset);
}

TEST_CASE("config validation")
{
  auto c = preset("example_I", 2);
  c.assignment_probs = { 0.5, 0.5, 0.5 };
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::config_invalid);

  auto d = preset("example_I", 2);
  // Declaring the opposite direction for the sign treatment is rejected.
  d.declared[0].directions[1] = Direction::le;
  CHECK(kind_of([&] { d.validate(); }) == ErrorKind::config_invalid);

  auto e = preset("example_I", 2);
  e.labels = { "x", "x", "y" };
  CHECK(kind_of([&] { e.validate(); }) == ErrorKind::config_invalid);

  auto f = preset("example_I", 2);
  f.discount[1][1] = 0.001;
  CHECK(kind_of([&] { check_relevance(f); }) == ErrorKind::config_invalid);
  CHECK_NOTHROW(check_relevance(preset("example_I", 2)));
  CHECK_NOTHROW(check_relevance(preset("mto", 0)));
}

TEST_CASE("simulate is deterministic and total")
{
  auto c = preset("example_I", 2);
  c.seed = 11;
  const auto a = simulate(c, 2000);
  const auto b = simulate(c, 2000);
  CHECK(a.y == b.y);
  CHECK(a.t == b.t);
  CHECK(a.z == b.z);
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(a.latent[i].u == b.latent[i].u);

  // Thread count does not change the draws.
  setenv("IVMONO_THREADS", "3", 1);
  const auto threaded = simulate(c, 2000);
  unsetenv("IVMONO_THREADS");
  CHECK(threaded.y == a.y);

  const auto one = simulate(c, 1);
  REQUIRE(one.size() == 1);
  CHECK(one.latent[0].t_at.size() == 3);
  CHECK(one.y[0] == one.latent[0].y[one.t[0]]);
  CHECK(one.t[0] == one.latent[0].t_at[one.z[0]]);

  CHECK(kind_of([&] { simulate(c, 0); }) == ErrorKind::config_invalid);
}

TEST_CASE("simulated outcomes follow the outcome model")
{
  auto c = preset("example_I", 2);
  c.seed = 5;
  const auto d = simulate(c, 10000);
  double sum = 0.0;
  std::vector<double> u;
  for (const auto& r : d.latent) {
    sum += r.y[2];
    u.push_back(r.u[0]);
    REQUIRE(r.u[0] == r.u[1]);
    REQUIRE(r.u[1] == r.u[2]);
  }
  CHECK(std::abs(sum / d.size() - 2.0) < 0.05);
  CHECK(stats::ks_uniform(u) < 1.36 / std::sqrt(static_cast<double>(d.size())));
}

TEST_CASE("rank similarity keeps uniform marginals with distinct ranks")
{
  auto c = preset("example_I", 2);
  c.rank_mode = RankMode::similarity;
  c.rho = 0.6;
  c.seed = 2;
  const auto d = simulate(c, 10000);
  std::vector<double> u0, u2;
  std::size_t equal = 0;
  for (const auto& r : d.latent) {
    u0.push_back(r.u[0]);
    u2.push_back(r.u[2]);
    equal += r.u[0] == r.u[2];
  }
  CHECK(equal == 0);
  const double bound = 1.36 / std::sqrt(static_cast<double>(d.size()));
  CHECK(stats::ks_uniform(u0) < bound);
  CHECK(stats::ks_uniform(u2) < bound);
}

TEST_CASE("instrument is independent of the rank variable")
{
  auto c = preset("mto", 0);
  c.seed = 3;
  const auto d = simulate(c, 20000);
  const std::size_t bins = 10;
  const std::size_t nz = d.num_instruments();
  std::vector<std::vector<double>> count(nz, std::vector<double>(bins, 0.0));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(d.latent[i].u[0] * bins));
    count[d.z[i]][b] += 1.0;
  }
  std::vector<double> row(nz, 0.0), col(bins, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t b = 0; b < bins; ++b) {
      row[z] += count[z][b];
      col[b] += count[z][b];
    }
  }
  const double n = static_cast<double>(d.size());
  double chi2 = 0.0;
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double e = row[z] * col[b] / n;
      chi2 += (count[z][b] - e) * (count[z][b] - e) / e;
    }
  }
  boost::math::chi_squared dist(static_cast<double>((nz - 1) * (bins - 1)));
  CHECK(chi2 < boost::math::quantile(dist, 0.999));
}

TEST_CASE("verify monotonicity against the inequality tables")
{
  auto c = preset("example_I", 2);
  c.seed = 8;
  const auto d = simulate(c, 20000);
  CHECK(observed(verify_monotonicity(d, { 1, 0 })) ==
        std::vector<Direction>{ Direction::le, Direction::ge, Direction::le });
  // Pair (1, 2): treatment 0 moves both ways in a mixed population.
  const auto r12 = verify_monotonicity(d, { 1, 2 });
  CHECK(r12[0].observed == Direction::neither);
  CHECK(r12[1].observed == Direction::ge);
  CHECK(r12[2].observed == Direction::le);
  CHECK(count_declared_violations(c, d) == 0);

  auto m = preset("mto", 0);
  m.seed = 9;
  const auto dm = simulate(m, 20000);
  CHECK(observed(verify_monotonicity(dm, { 2, 0 })) ==
        std::vector<Direction>{ Direction::le, Direction::le, Direction::ge });
  CHECK(count_declared_violations(m, dm) == 0);

  const auto bare = simulate(c, 100, false);
  CHECK(kind_of([&] { verify_monotonicity(bare, { 1, 0 }); }) == ErrorKind::no_latent_data);
}

TEST_CASE("analytic design matches simulation")
{
  for (auto mode : { RankMode::invariance, RankMode::similarity }) {
    auto c = preset("example_II", 2);
    c.rank_mode = mode;
    c.seed = 1234;
    const AnalyticDesign design(c);
    const auto d = simulate(c, 60000);
    const auto p = propensity_matrix(d);
    for (std::size_t z = 0; z < 3; ++z) {
      double total = 0.0;
      for (Treatment t = 0; t < 3; ++t) {
        total += design.propensity(t, z);
        CHECK(std::abs(p(z, t) - design.propensity(t, z)) < 0.015);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Conditional CDF of Y in cell (t = 2, z = 2) at a few points.
    std::vector<double> cell;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.t[i] == 2 && d.z[i] == 2)
        cell.push_back(d.y[i]);
    }
    for (double y : { 1.0, 2.0, 3.0 }) {
      double below = 0.0;
      for (double v : cell)
        below += v <= y;
      CHECK(std::abs(below / cell.size() - design.cell_cdf(2, 2, y)) < 0.03);
    }
  }
}
