#include "ivmono/analytic.hpp"
#include "ivmono/diagnostics.hpp"
#include "ivmono/dgp.hpp"
#include "ivmono/error.hpp"
#include "ivmono/stats.hpp"

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

const std::vector<std::vector<double>> golden{ { 0.3125, 0.4375, 0.25 },
                                              { 0.25, 0.375, 0.375 },
                                              { 0.125, 0.3125, 0.5625 } };
const std::vector<std::vector<std::string>> golden_text{ { "0.3125", "0.4375", "0.25" },
                                                        { "0.25", "0.375", "0.375" },
                                                        { "0.125", "0.3125", "0.5625" } };

} // namespace

TEST_CASE("all ordered pairs")
{
  const auto p = all_pairs(3);
  REQUIRE(p.size() == 3);
  CHECK(p[0] == InstrumentPair{ 1, 0 });
  CHECK(p[1] == InstrumentPair{ 2, 0 });
  CHECK(p[2] == InstrumentPair{ 2, 1 });
  CHECK(all_pairs(1).empty());
}

TEST_CASE("the golden propensity matrix has one shared sign treatment")
{
  const PropensityMatrix p{ golden, {} };
  const auto det = detect_sign_treatments(p, all_pairs(3), 0.01);
  REQUIRE(det.size() == 3);
  for (const auto& d : det) {
    CHECK(d.status == SignStatus::found);
    CHECK(d.treatment == 2);
    CHECK(d.directions[2] == Direction::ge);
  }
  const auto a3 = check_assumption3(det, 2);
  CHECK_FALSE(a3.satisfied);
  CHECK(a3.reason == "all pairs share one sign treatment (2)");
  CHECK(a3.lambda_star.empty());
}

TEST_CASE("exact and floating determinants of the golden propensity matrix")
{
  const Rational exact = exact_propensity_determinant(golden_text);
  CHECK(exact == Rational(-1, 256));
  CHECK(exact.to_string() == "-1/256");
  CHECK(std::abs(determinant(golden) + 0.00390625) < 1e-12);

  CHECK(Rational::parse("7/16") == Rational(7, 16));
  CHECK(Rational::parse("-0.3125") == Rational(-5, 16));
  CHECK(kind_of([] { determinant(std::vector<std::vector<double>>{ { 1.0, 2.0 } }); }) == ErrorKind::not_square);
}

TEST_CASE("property: the Jacobian factorizes and stays negative")
{
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> scale(0.2, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> sd{ scale(rng), scale(rng), scale(rng) };
    JacobianInput in;
    in.propensity = PropensityMatrix{ golden, {} };
    // Instrument-independent densities, as under independent outcomes.
    in.density = [&](Treatment t, std::size_t, double y) { return stats::normal_pdf(y / sd[t]) / sd[t]; };
    const std::vector<double> y{ u(rng), u(rng), u(rng) };
    const auto r = jacobian_determinant(in, y);
    CHECK(r.instrument_independent);
    REQUIRE(r.direct < 0.0);
    REQUIRE(std::abs(r.direct - r.factored) <= 1e-12 * std::max(1.0, std::abs(r.direct)));
    REQUIRE(std::abs(r.propensity_determinant + 0.00390625) < 1e-12);
  }
}

TEST_CASE("moment residual vanishes at the true quantiles")
{
  const auto tables = fixed_propensity_tables(golden,
                                              { { OutcomeFamily::gaussian, 0.0, 1.0 },
                                                { OutcomeFamily::gaussian, 1.0, 1.0 },
                                                { OutcomeFamily::gaussian, 2.0, 1.0 } },
                                              { "0", "1", "2" });
  const std::vector<double> y{ 0.0, 1.0, 2.0 };
  for (double r : moment_residual(tables, y, 0.5))
    CHECK(std::abs(r) < 1e-3);
  const std::vector<double> off{ 0.5, 1.0, 2.0 };
  for (double r : moment_residual(tables, off, 0.5))
    CHECK(r > 0.0);
  CHECK(kind_of([&] { moment_residual(tables, y, 0.0); }) == ErrorKind::tau_out_of_range);
  CHECK(kind_of([&] { moment_residual(tables, std::vector<double>{ 0.0 }, 0.5); }) == ErrorKind::length_mismatch);
}

TEST_CASE("detection on Example I picks two distinct sign treatments")
{
  const auto p = AnalyticDesign(preset("example_I", 2)).propensity_matrix();
  const auto det = detect_sign_treatments(p, all_pairs(3), 0.01);
  const auto a3 = check_assumption3(det, 2);
  REQUIRE(a3.satisfied);
  REQUIRE(a3.lambda_star.size() == 2);
  CHECK(det[a3.lambda_star[0]].treatment == 1);
  CHECK(det[a3.lambda_star[1]].treatment == 2);
  const auto spec = spec_from_detections(det, a3);
  CHECK(spec.pairs.size() == 3);
  CHECK(spec.lambda_star == a3.lambda_star);
}

TEST_CASE("estimated matrices widen the zero band")
{
  // Differences of 0.02 at 100 draws per row are noise.
  const PropensityMatrix p{ { { 0.50, 0.50 }, { 0.48, 0.52 } }, { 100.0, 100.0 } };
  const auto det = detect_sign_treatments(p, all_pairs(2), 0.01);
  CHECK(det[0].status == SignStatus::ambiguous);
  CHECK(det[0].thresholds[0] > 0.1);

  const PropensityMatrix big{ { { 0.50, 0.50 }, { 0.40, 0.60 } }, { 1e5, 1e5 } };
  const auto d2 = detect_sign_treatments(big, all_pairs(2), 0.01);
  CHECK(d2[0].status == SignStatus::found);
  CHECK(d2[0].treatment == 1);
  CHECK(d2[0].score == doctest::Approx(0.1));
  CHECK(check_assumption3(d2, 1).satisfied);
}

TEST_CASE("kernel density of normal samples")
{
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(20000);
  for (auto& v : x)
    v = n(rng);
  const double h = silverman_bandwidth(x);
  CHECK(h == doctest::Approx(1.06 * std::pow(20000.0, -0.2)).epsilon(0.03));
  for (double y : { -1.0, 0.0, 1.0 })
    CHECK(std::abs(kernel_density(x, y) - stats::normal_pdf(y)) < 0.02);
}
