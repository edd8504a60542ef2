#include "ivmono/core.hpp"
#include "ivmono/error.hpp"
#include "ivmono/rational.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <random>

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

// Sorted grid of n distinct points with random gaps.
std::vector<double>
random_grid(std::mt19937_64& rng, std::size_t n)
{
  std::uniform_real_distribution<double> gap(0.01, 1.0);
  std::vector<double> g(n);
  double x = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
  for (auto& v : g) {
    v = x;
    x += gap(rng);
  }
  return g;
}

// Raw CDF-like values, deliberately noisy and sometimes outside [0, 1].
std::vector<double>
random_raw(std::mt19937_64& rng, std::size_t n)
{
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  std::vector<double> v(n);
  for (auto& x : v)
    x = u(rng);
  return v;
}

// Strictly increasing images built from positive slopes.
CounterfactualMap
random_map(std::mt19937_64& rng, Treatment s, Treatment t, const std::vector<double>& grid)
{
  std::uniform_real_distribution<double> slope(0.2, 3.0);
  std::vector<double> img(grid.size());
  img[0] = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
  for (std::size_t i = 1; i < grid.size(); ++i)
    img[i] = img[i - 1] + slope(rng) * (grid[i] - grid[i - 1]);
  return CounterfactualMap(s, t, grid, img);
}

} // namespace

TEST_CASE("ecdf steps and ties")
{
  const std::vector<double> a{ 1, 2, 3 };
  Ecdf f(a);
  CHECK(f(2) == doctest::Approx(2.0 / 3.0));
  CHECK(f(0.5) == 0.0);
  CHECK(f(3) == 1.0);

  const std::vector<double> b{ 5 };
  Ecdf g(b);
  CHECK(g(5) == 1.0);
  CHECK(g(4.9) == 0.0);

  const std::vector<double> c{ 2, 2, 4 };
  Ecdf h(c);
  CHECK(h.support_points().size() == 2);
  CHECK(h(2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ecdf rejects bad samples")
{
  CHECK(kind_of([] { build_ecdf(std::vector<double>{}); }) == ErrorKind::empty_sample);
  CHECK(kind_of([] { build_ecdf(std::vector<double>{ 1.0, NAN }); }) == ErrorKind::non_finite);
  CHECK(kind_of([] { build_ecdf(std::vector<double>{ 1.0, inf }); }) == ErrorKind::non_finite);
}

TEST_CASE("generalized inverse uses the inf convention")
{
  const auto cdf = Ecdf(std::vector<double>{ 1, 2, 3 }).to_monotone();
  CHECK(generalized_inverse(cdf, 0.5).value == 2.0);
  CHECK(generalized_inverse(cdf, 2.0 / 3.0).value == 2.0);

  MonotoneCdf flat({ 0, 1, 2 }, { 0.2, 0.2, 0.9 });
  const auto q = generalized_inverse(flat, 0.2);
  CHECK(q.value == 0.0);
  CHECK(q.flat);
  CHECK(q.flat_width == 1.0);

  MonotoneCdf short_cdf({ 0, 1 }, { 0.1, 0.6 });
  const auto s = generalized_inverse(short_cdf, 0.9);
  CHECK(s.saturated);
  CHECK(s.value == 1.0);

  CHECK(kind_of([&] { generalized_inverse(cdf, 0.0); }) == ErrorKind::tau_out_of_range);
  CHECK(kind_of([&] { generalized_inverse(cdf, 1.0); }) == ErrorKind::tau_out_of_range);
}

TEST_CASE("isotonize running max and clip")
{
  auto a = isotonize({ 0, 1, 2 }, std::vector<double>{ 0.1, 0.05, 0.3 });
  CHECK(a.values() == std::vector<double>{ 0.1, 0.1, 0.3 });
  auto b = isotonize({ 0, 1, 2 }, std::vector<double>{ -0.02, 0.5, 1.03 });
  CHECK(b.values() == std::vector<double>{ 0.0, 0.5, 1.0 });
  auto c = isotonize({ 0, 1, 2 }, std::vector<double>{ 0.2, 0.4, 0.9 });
  CHECK(c.values() == std::vector<double>{ 0.2, 0.4, 0.9 });
  CHECK(kind_of([] { isotonize({ 0, 1 }, std::vector<double>{ 0.1 }); }) == ErrorKind::length_mismatch);
}

TEST_CASE("trim support")
{
  std::vector<double> s(100);
  for (int i = 0; i < 100; ++i)
    s[i] = i + 1;
  auto w = trim_support(s, 0.01);
  CHECK(w.lower == 1.0);
  CHECK(w.upper == 99.0);
  auto full = trim_support(s, 0.0);
  CHECK(full.lower == 1.0);
  CHECK(full.upper == 100.0);
  CHECK(kind_of([] { trim_support(std::vector<double>{ 3, 3, 3 }, 0.01); }) == ErrorKind::degenerate_support);
  CHECK(kind_of([] { trim_support(std::vector<double>{}, 0.01); }) == ErrorKind::empty_sample);
}

TEST_CASE("compose and invert")
{
  const auto grid = uniform_grid(0.0, 1.0, 11);
  std::vector<double> plus1, plus2;
  for (double y : grid) {
    plus1.push_back(y + 1);
    plus2.push_back(y + 2);
  }
  CounterfactualMap a(0, 1, grid, plus1);
  CounterfactualMap b(1, 2, plus1, plus2);
  auto c = compose_maps(a, b);
  CHECK(c.source() == 0);
  CHECK(c.target() == 2);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(c.images()[i] == doctest::Approx(grid[i] + 2));

  auto id = identity_map(0, grid);
  auto same = compose_maps(id, a);
  CHECK(same.images() == a.images());

  auto inv = invert_map(a);
  CHECK(inv.source() == 1);
  CHECK(inv(1.5) == doctest::Approx(0.5));

  CHECK(kind_of([&] { compose_maps(a, a); }) == ErrorKind::treatment_mismatch);
  CounterfactualMap narrow(1, 2, uniform_grid(1.0, 1.5, 5), uniform_grid(0, 1, 5));
  CHECK(kind_of([&] { compose_maps(a, narrow); }) == ErrorKind::range_escape);
  CounterfactualMap flat(0, 1, { 0, 1, 2 }, { 0, 0, 1 });
  CHECK(kind_of([&] { invert_map(flat); }) == ErrorKind::not_strictly_increasing);
}

TEST_CASE("compose matches analytic composition at nodes")
{
  const auto grid = uniform_grid(0.0, 1.0, 201);
  std::vector<double> twice;
  for (double y : grid)
    twice.push_back(2 * y);
  const auto bgrid = uniform_grid(0.0, 2.0, 401);
  std::vector<double> sq;
  for (double y : bgrid)
    sq.push_back(y * y);
  auto c = compose_maps(CounterfactualMap(0, 1, grid, twice), CounterfactualMap(1, 2, bgrid, sq));
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(c.images()[i] == doctest::Approx(4 * grid[i] * grid[i]).epsilon(1e-12));

  const auto cgrid = uniform_grid(-1.0, 1.0, 201);
  std::vector<double> cube;
  for (double y : cgrid)
    cube.push_back(y * y * y);
  auto inv = invert_map(CounterfactualMap(0, 1, cgrid, cube));
  for (std::size_t i = 0; i < inv.size(); ++i)
    CHECK(inv.images()[i] == doctest::Approx(std::cbrt(inv.grid()[i])).epsilon(1e-12));
}

TEST_CASE("map evaluation clamps and reports")
{
  CounterfactualMap m(0, 1, { 0, 1, 2 }, { 10, 11, 13 });
  bool clamped = false;
  CHECK(m.evaluate(1.5, clamped) == doctest::Approx(12));
  CHECK_FALSE(clamped);
  CHECK(m.evaluate(-1, clamped) == 10);
  CHECK(clamped);
  CHECK(m.evaluate(3, clamped) == 13);
  CHECK(clamped);
  CHECK(kind_of([] { CounterfactualMap(0, 0, { 0, 1 }, { 0, 2 }); }) == ErrorKind::treatment_mismatch);
}

TEST_CASE("strict increase repair")
{
  std::vector<double> v{ 0, 1, 1, 1, 2 };
  CHECK(make_strictly_increasing(v) == 2);
  for (std::size_t i = 1; i < v.size(); ++i)
    CHECK(v[i] > v[i - 1]);
  CHECK(v.front() == 0);
  CHECK(v.back() == 2);
  std::vector<double> tail{ 0, 1, 2, 2 };
  make_strictly_increasing(tail);
  CHECK(tail[2] < tail[3]);
  CHECK(tail[3] == 2);
}

TEST_CASE("rational arithmetic")
{
  CHECK(Rational::parse("0.3125") == Rational(5, 16));
  CHECK(Rational::parse("-7/14") == Rational(-1, 2));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK((Rational(3, 4) * Rational(2, 3)).to_string() == "1/2");
  std::vector<std::vector<Rational>> m{ { 1, 2 }, { 3, 4 } };
  CHECK(determinant(m) == Rational(-2));
  CHECK(kind_of([] { Rational(1, 0); }) == ErrorKind::range_escape);
}

TEST_CASE("stats helpers")
{
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054));
  CHECK(stats::dkw_bound(1000, 0.05) == doctest::Approx(std::sqrt(std::log(40.0) / 2000.0)));
  const std::vector<double> a{ 1, 2, 3 }, b{ 4, 5, 6 };
  CHECK(stats::ks_two_sample(a, b) == 1.0);
  CHECK(stats::ks_two_sample(a, a) == 0.0);
}

// Property suites: fixed seeds, hand-rolled generators.

TEST_CASE("property: isotonize is idempotent, monotone and dominates raw")
{
  std::mt19937_64 rng(20240601);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng() % 60;
    const auto grid = random_grid(rng, n);
    const auto raw = random_raw(rng, n);
    const auto once = isotonize(grid, raw);
    const auto twice = isotonize(grid, once.values());
    REQUIRE(once.values() == twice.values());
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(once.values()[i] >= 0.0);
      REQUIRE(once.values()[i] <= 1.0);
      if (i > 0)
        REQUIRE(once.values()[i] >= once.values()[i - 1]);
      if (raw[i] >= 0.0 && raw[i] <= 1.0)
        REQUIRE(once.values()[i] >= raw[i]);
    }
  }
}

TEST_CASE("property: generalized inverse Galois connection")
{
  // F(Q(tau)) >= tau, and Q(tau) <= y whenever F(y) >= tau.
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> sample(n);
    std::normal_distribution<double> nd(0.0, 2.0);
    for (auto& x : sample)
      x = std::round(nd(rng) * 4.0) / 4.0; // ties on purpose
    const auto cdf = build_ecdf(sample).to_monotone();
    for (int k = 1; k < 200; ++k) {
      const double tau = k / 200.0;
      const auto q = generalized_inverse(cdf, tau);
      REQUIRE_FALSE(q.saturated);
      REQUIRE(cdf(q.value) >= tau);
      for (double y : cdf.grid()) {
        if (cdf(y) >= tau)
          REQUIRE(q.value <= y);
      }
    }
  }
}

TEST_CASE("property: ecdf invariants")
{
  std::mt19937_64 rng(4242);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> sample(n);
    std::uniform_int_distribution<int> d(-10, 10);
    for (auto& x : sample)
      x = d(rng) * 0.5;
    Ecdf f(sample);
    const auto& s = f.support_points();
    REQUIRE(f.values().back() == 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      REQUIRE(s[i] > s[i - 1]);
      REQUIRE(f.values()[i] >= f.values()[i - 1]);
    }
    for (double y : s) {
      // Right-continuous: the value at a support point counts the point.
      const auto count = std::count_if(sample.begin(), sample.end(), [&](double x) { return x <= y; });
      REQUIRE(f(y) == doctest::Approx(static_cast<double>(count) / n));
    }
  }
}

TEST_CASE("property: map laws")
{
  std::mt19937_64 rng(9001);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 80;
    const auto grid = random_grid(rng, n);
    const auto a = random_map(rng, 0, 1, grid);

    // Identity law, exact at nodes.
    const auto right = compose_maps(a, identity_map(1, a.images()));
    REQUIRE(right.images() == a.images());
    const auto left = compose_maps(identity_map(0, grid), a);
    REQUIRE(left.images() == a.images());

    // Inversion round trip at nodes.
    const auto inv = invert_map(a);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(inv(a.images()[i]) == doctest::Approx(grid[i]).epsilon(1e-12));
      REQUIRE(a(inv.images()[i]) == doctest::Approx(inv.grid()[i]).epsilon(1e-12));
    }
    const auto round = compose_maps(a, inv);
    REQUIRE(round.is_identity());

    // Associativity at grid nodes: (c o b) o a = c o (b o a).
    const auto b = random_map(rng, 1, 2, a.images());
    const auto c = random_map(rng, 2, 3, b.images());
    const auto lhs = compose_maps(compose_maps(a, b), c);
    const auto rhs = compose_maps(a, compose_maps(b, c));
    for (std::size_t i = 0; i < n; ++i)
      REQUIRE(lhs.images()[i] == doctest::Approx(rhs.images()[i]).epsilon(1e-12));
  }
}
