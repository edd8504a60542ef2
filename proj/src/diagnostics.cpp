#include "ivmono/diagnostics.hpp"

#include "ivmono/error.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>

namespace ivmono {

const char*
to_string(SignStatus s)
{
  switch (s) {
    case SignStatus::found: return "found";
    case SignStatus::none: return "none";
    case SignStatus::ambiguous: return "ambiguous";
  }
  return "?";
}

std::vector<SignDetection>
detect_sign_treatments(const PropensityMatrix& p, const std::vector<InstrumentPair>& pairs, double eta)
{
  std::vector<SignDetection> out;
  const std::size_t nt = p.cols();
  for (const auto& pair : pairs) {
    if (pair.first >= p.rows() || pair.second >= p.rows())
      throw Error(ErrorKind::config_invalid, "pair references a missing propensity row");
    SignDetection det;
    det.pair = pair;
    det.differences.resize(nt);
    det.thresholds.resize(nt);
    det.directions.resize(nt);
    bool has_zero = false;
    double score = inf;
    for (Treatment t = 0; t < nt; ++t) {
      const double a = p(pair.first, t);
      const double b = p(pair.second, t);
      double thr = eta;
      if (!p.analytic()) {
        const double se = std::sqrt(a * (1.0 - a) / p.n_z[pair.first] + b * (1.0 - b) / p.n_z[pair.second]);
        thr = std::max(eta, 3.0 * se);
      }
      const double d = a - b;
      det.differences[t] = d;
      det.thresholds[t] = thr;
      if (d > thr) {
        det.directions[t] = Direction::ge;
      } else if (d < -thr) {
        det.directions[t] = Direction::le;
      } else {
        det.directions[t] = Direction::both;
        has_zero = true;
      }
      if (std::abs(d) > thr)
        score = std::min(score, std::abs(d));
    }
    det.score = std::isfinite(score) ? score : 0.0;
    if (auto s = sign_treatment_of(det.directions)) {
      det.status = SignStatus::found;
      det.treatment = *s;
    } else {
      det.status = has_zero ? SignStatus::ambiguous : SignStatus::none;
    }
    out.push_back(std::move(det));
  }
  return out;
}

Assumption3Result
check_assumption3(const std::vector<SignDetection>& detections, std::size_t k)
{
  Assumption3Result res;
  // Best-scoring pair per sign treatment.
  std::map<Treatment, std::size_t> best;
  std::size_t found = 0;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    if (d.status != SignStatus::found)
      continue;
    ++found;
    auto it = best.find(d.treatment);
    if (it == best.end() || detections[it->second].score < d.score)
      best[d.treatment] = i;
  }
  if (best.size() < k) {
    if (found >= 2 && best.size() == 1)
      res.reason = fmt::format("all pairs share one sign treatment ({})", best.begin()->first);
    else
      res.reason = fmt::format("only {} distinct sign treatment(s) among {} pair(s) with a sign treatment; {} needed",
                               best.size(), found, k);
    return res;
  }
  std::vector<std::pair<Treatment, std::size_t>> chosen(best.begin(), best.end());
  // With k + 1 distinct sign treatments, drop the weakest so the smallest
  // retained score is as large as possible.
  while (chosen.size() > k) {
    auto weakest = std::min_element(chosen.begin(), chosen.end(), [&](const auto& a, const auto& b) {
      return detections[a.second].score < detections[b.second].score;
    });
    chosen.erase(weakest);
  }
  res.satisfied = true;
  for (const auto& c : chosen)
    res.lambda_star.push_back(c.second);
  return res;
}

MonotonicitySpec
spec_from_detections(const std::vector<SignDetection>& detections, const Assumption3Result& a3)
{
  MonotonicitySpec spec;
  for (const auto& d : detections) {
    PairMonotonicity pm;
    pm.pair = d.pair;
    pm.directions = d.directions;
    if (d.status == SignStatus::found)
      pm.sign_treatment = d.treatment;
    spec.pairs.push_back(std::move(pm));
  }
  spec.lambda_star = a3.lambda_star;
  return spec;
}

std::vector<InstrumentPair>
all_pairs(std::size_t instruments)
{
  std::vector<InstrumentPair> out;
  for (std::size_t a = 1; a < instruments; ++a) {
    for (std::size_t b = 0; b < a; ++b)
      out.push_back({ a, b });
  }
  return out;
}

std::vector<double>
moment_residual(const CellTables& tables, std::span<const double> y, double tau)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", tau));
  if (y.size() != tables.num_treatments())
    throw Error(ErrorKind::length_mismatch, "moment residual needs one outcome per treatment");
  std::vector<double> out(tables.num_instruments());
  for (std::size_t z = 0; z < out.size(); ++z) {
    double s = 0.0;
    for (Treatment t = 0; t < y.size(); ++t) {
      const double p = tables.propensity(z, t);
      if (p == 0.0)
        continue;
      if (!tables.analytic() && tables.counts[z][t] == 0.0)
        throw Error(ErrorKind::empty_cell, fmt::format("cell (t={}, z={}) is empty", t, tables.labels[z]));
      s += tables.cell_cdf(t, z, y[t]) * p;
    }
    out[z] = s - tau;
  }
  return out;
}

double
determinant(std::vector<std::vector<double>> m)
{
  const std::size_t n = m.size();
  for (const auto& r : m) {
    if (r.size() != n)
      throw Error(ErrorKind::not_square, "determinant of a non-square matrix");
  }
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c]))
        piv = r;
    }
    if (m[piv][c] == 0.0)
      return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j < n; ++j)
        m[r][j] -= f * m[c][j];
    }
  }
  return det;
}

JacobianResult
jacobian_determinant(const JacobianInput& input, std::span<const double> y)
{
  const auto& p = input.propensity;
  const std::size_t nz = p.rows();
  const std::size_t nt = p.cols();
  if (nz != nt)
    throw Error(ErrorKind::not_square,
                fmt::format("{} instrument values for {} treatments", nz, nt));
  if (y.size() != nt)
    throw Error(ErrorKind::length_mismatch, "jacobian needs one outcome per treatment");

  JacobianResult res;
  std::vector<std::vector<double>> m(nz, std::vector<double>(nt));
  res.instrument_independent = true;
  double product = 1.0;
  for (Treatment t = 0; t < nt; ++t) {
    const double f0 = input.density(t, 0, y[t]);
    product *= f0;
    for (std::size_t z = 0; z < nz; ++z) {
      const double f = z == 0 ? f0 : input.density(t, z, y[t]);
      if (f < 0.0)
        throw Error(ErrorKind::config_invalid, "negative density");
      if (std::abs(f - f0) > 1e-12 * std::max(1.0, std::abs(f0)))
        res.instrument_independent = false;
      m[z][t] = f * p(z, t);
    }
  }
  res.direct = determinant(m);
  res.propensity_determinant = determinant(p.p);
  res.factored = product * res.propensity_determinant;
  return res;
}

Rational
exact_propensity_determinant(const std::vector<std::vector<std::string>>& entries)
{
  std::vector<std::vector<Rational>> m;
  for (const auto& row : entries) {
    std::vector<Rational> r;
    for (const auto& e : row)
      r.push_back(Rational::parse(e));
    m.push_back(std::move(r));
  }
  return determinant(std::move(m));
}

double
silverman_bandwidth(std::span<const double> samples)
{
  if (samples.size() < 2)
    throw Error(ErrorKind::too_few_samples, "kernel density needs at least two samples");
  const double sd = stats::stddev(samples);
  if (!(sd > 0.0))
    throw Error(ErrorKind::degenerate_support, "kernel density of a constant sample");
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

double
kernel_density(std::span<const double> samples, double y)
{
  const double h = silverman_bandwidth(samples);
  double s = 0.0;
  for (double x : samples)
    s += stats::normal_pdf((y - x) / h);
  return s / (static_cast<double>(samples.size()) * h);
}

} // namespace ivmono
