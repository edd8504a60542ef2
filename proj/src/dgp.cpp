#include "ivmono/dgp.hpp"

#include "ivmono/error.hpp"
#include "ivmono/parallel.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <random>

namespace ivmono {

double
OutcomeModel::cdf(double y) const
{
  switch (family) {
    case OutcomeFamily::gaussian: return stats::normal_cdf((y - a) / b);
    case OutcomeFamily::exponential: return y <= 0.0 ? 0.0 : -std::expm1(-a * y);
  }
  return 0.0;
}

double
OutcomeModel::pdf(double y) const
{
  switch (family) {
    case OutcomeFamily::gaussian: return stats::normal_pdf((y - a) / b) / b;
    case OutcomeFamily::exponential: return y < 0.0 ? 0.0 : a * std::exp(-a * y);
  }
  return 0.0;
}

double
OutcomeModel::quantile(double u) const
{
  switch (family) {
    case OutcomeFamily::gaussian: return a + b * stats::normal_quantile(u);
    case OutcomeFamily::exponential:
      if (u <= 0.0)
        return 0.0;
      return -std::log1p(-u) / a;
  }
  return 0.0;
}

namespace {

std::vector<Direction>
row(std::size_t treatments, Treatment up)
{
  std::vector<Direction> d(treatments, Direction::le);
  d[up] = Direction::ge;
  return d;
}

PairMonotonicity
declared_pair(std::size_t first, std::size_t second, std::vector<Direction> dirs)
{
  PairMonotonicity p;
  p.pair = { first, second };
  p.sign_treatment = sign_treatment_of(dirs);
  p.directions = std::move(dirs);
  return p;
}

std::vector<std::string>
numeric_labels(std::size_t m)
{
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m; ++i)
    out.push_back(std::to_string(i));
  return out;
}

DgpConfig
common(std::string name, std::size_t k, std::size_t instruments)
{
  DgpConfig c;
  c.preset = std::move(name);
  c.k = k;
  c.labels = numeric_labels(instruments);
  c.assignment_probs.assign(instruments, 1.0 / static_cast<double>(instruments));
  for (std::size_t t = 0; t <= k; ++t) {
    c.outcomes.push_back({ OutcomeFamily::gaussian, static_cast<double>(t), 1.0 });
    c.base_utility.push_back(0.0);
    c.loading.push_back(static_cast<double>(t) / static_cast<double>(k));
  }
  c.discount.assign(instruments, std::vector<double>(k + 1, 0.0));
  return c;
}

constexpr double voucher_discount = 1.5;

// Draws from (0, 1), never hitting either endpoint.
double
open_uniform(std::mt19937_64& rng)
{
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

void
DgpConfig::validate() const
{
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); };
  const std::size_t nt = num_treatments();
  const std::size_t nz = num_instruments();
  if (k < 1)
    fail("k must be at least 1");
  if (nz < 1)
    fail("at least one instrument value is required");
  if (assignment_probs.size() != nz)
    fail(fmt::format("{} assignment probabilities for {} instrument values", assignment_probs.size(), nz));
  double total = 0.0;
  for (double p : assignment_probs) {
    if (!(p >= 0.0))
      fail("assignment probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail(fmt::format("assignment probabilities sum to {}", total));
  if (outcomes.size() != nt || base_utility.size() != nt || loading.size() != nt)
    fail(fmt::format("outcome and utility vectors need {} entries", nt));
  for (const auto& o : outcomes) {
    if (o.family == OutcomeFamily::gaussian && !(o.b > 0.0))
      fail("gaussian outcome needs a positive standard deviation");
    if (o.family == OutcomeFamily::exponential && !(o.a > 0.0))
      fail("exponential outcome needs a positive rate");
  }
  if (!(taste_scale > 0.0))
    fail("taste_scale must be positive");
  if (rank_mode == RankMode::similarity && !(rho > -1.0 && rho < 1.0))
    fail("rho must lie in (-1, 1)");
  if (discount.size() != nz)
    fail("discount table needs one row per instrument value");
  for (const auto& r : discount) {
    if (r.size() != nt)
      fail("discount rows need one entry per treatment");
    for (double d : r) {
      if (!std::isfinite(d))
        fail("discount entries must be finite");
    }
  }
  std::vector<std::string> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail("instrument labels must be distinct");

  // The discount table must actually produce every declared inequality.
  for (const auto& pm : declared) {
    if (pm.pair.first >= nz || pm.pair.second >= nz || pm.pair.first == pm.pair.second)
      fail("declared pair references an invalid instrument value");
    if (pm.directions.size() != nt)
      fail("declared pair needs one direction per treatment");
    for (Treatment t = 0; t < nt; ++t) {
      Direction want = pm.directions[t];
      Direction have = implied_direction(*this, pm.pair, t);
      bool ok = want == Direction::neither || have == want || have == Direction::both;
      if (!ok)
        fail(fmt::format("discounts do not imply D^{}_{} {} D^{}_{}",
                         t, labels[pm.pair.first], to_string(want), t, labels[pm.pair.second]));
    }
  }
}

std::vector<PairMonotonicity>
DgpConfig::lambda() const
{
  std::vector<PairMonotonicity> out;
  for (const auto& p : declared) {
    if (p.sign_treatment)
      out.push_back(p);
  }
  return out;
}

DgpConfig
preset(const std::string& name, std::size_t k)
{
  if (name == "example_I") {
    if (k < 1)
      throw Error(ErrorKind::config_invalid, "example_I needs k >= 1");
    // Voucher i discounts house i only. Staying put is the default choice,
    // so every voucher moves a large share of its group.
    DgpConfig c = common(name, k, k + 1);
    c.base_utility[0] = 1.5;
    for (std::size_t i = 1; i <= k; ++i)
      c.discount[i][i] = 2.0 * voucher_discount;
    for (std::size_t i = 1; i <= k; ++i)
      c.declared.push_back(declared_pair(i, 0, row(k + 1, i)));
    if (k == 2)
      c.declared.push_back(declared_pair(1, 2, { Direction::neither, Direction::ge, Direction::le }));
    return c;
  }
  if (name == "example_II") {
    if (k < 1)
      throw Error(ErrorKind::config_invalid, "example_II needs k >= 1");
    // Voucher i discounts houses i..k.
    DgpConfig c = common(name, k, k + 1);
    for (std::size_t i = 1; i <= k; ++i) {
      for (std::size_t t = i; t <= k; ++t)
        c.discount[i][t] = voucher_discount;
    }
    for (std::size_t i = 1; i < k; ++i)
      c.declared.push_back(declared_pair(i, i + 1, row(k + 1, i)));
    c.declared.push_back(declared_pair(k, 0, row(k + 1, k)));
    return c;
  }
  if (name == "mto") {
    // a: no voucher; b: Section 8 housing voucher, usable in medium and low poverty areas;
    // c: experimental, usable in low poverty areas only.
    DgpConfig c = common(name, 2, 3);
    c.labels = { "a", "b", "c" };
    c.assignment_probs = { 0.3, 0.3, 0.4 };
    c.discount[1][1] = 1.2;
    c.discount[1][2] = voucher_discount;
    c.discount[2][2] = voucher_discount;
    c.declared.push_back(declared_pair(2, 0, row(3, 2)));
    c.declared.push_back(declared_pair(1, 2, row(3, 1)));
    return c;
  }
  if (name == "shared_sign") {
    // Every voucher only makes treatment 2 cheaper, by increasing amounts, so
    // all pairs share the sign treatment 2.
    DgpConfig c = common(name, 2, 3);
    c.discount[1][2] = 0.75;
    c.discount[2][2] = voucher_discount;
    c.declared.push_back(declared_pair(1, 0, row(3, 2)));
    c.declared.push_back(declared_pair(2, 0, row(3, 2)));
    c.declared.push_back(declared_pair(2, 1, row(3, 2)));
    return c;
  }
  throw Error(ErrorKind::unknown_preset, fmt::format("unknown preset '{}'", name));
}

Treatment
choice_function(const std::vector<double>& utilities,
                const std::vector<std::vector<double>>& discount,
                std::size_t z)
{
  Treatment best = 0;
  double best_value = utilities[0] + discount[z][0];
  for (Treatment t = 1; t < utilities.size(); ++t) {
    double v = utilities[t] + discount[z][t];
    if (v > best_value) {
      best = t;
      best_value = v;
    }
  }
  return best;
}

Direction
implied_direction(const DgpConfig& config, InstrumentPair pair, Treatment t)
{
  const auto& a = config.discount[pair.first];
  const auto& b = config.discount[pair.second];
  std::vector<double> gain(config.num_treatments());
  for (std::size_t s = 0; s < gain.size(); ++s)
    gain[s] = a[s] - b[s];
  const double hi = *std::max_element(gain.begin(), gain.end());
  const double lo = *std::min_element(gain.begin(), gain.end());
  if (hi == lo)
    return Direction::both;
  if (gain[t] == hi)
    return Direction::ge;
  if (gain[t] == lo)
    return Direction::le;
  return Direction::neither;
}

Dataset
simulate(const DgpConfig& config, std::size_t n, bool with_latent)
{
  config.validate();
  if (n < 1)
    throw Error(ErrorKind::config_invalid, "sample size must be at least 1");

  const std::size_t nt = config.num_treatments();
  const std::size_t nz = config.num_instruments();
  Dataset data;
  data.k = config.k;
  data.labels = config.labels;
  data.y.resize(n);
  data.t.resize(n);
  data.z.resize(n);
  std::vector<LatentRecord> latent(n);

  std::vector<double> cumulative(nz);
  std::partial_sum(config.assignment_probs.begin(), config.assignment_probs.end(), cumulative.begin());
  const double rho_c = std::sqrt(1.0 - config.rho * config.rho);

  parallel_for(n, [&](std::size_t i) {
    const std::uint64_t s = config.seed;
    const std::uint64_t idx = i;
    std::seed_seq seq{ static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                       static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32) };
    std::mt19937_64 rng(seq);

    const double v = open_uniform(rng);
    std::vector<double> utility(nt);
    for (Treatment t = 0; t < nt; ++t) {
      const double gumbel = -std::log(-std::log(open_uniform(rng)));
      utility[t] = config.base_utility[t] + config.loading[t] * v + config.taste_scale * gumbel;
    }
    const double uz = open_uniform(rng);
    std::size_t z = static_cast<std::size_t>(
      std::upper_bound(cumulative.begin(), cumulative.end(), uz) - cumulative.begin());
    z = std::min(z, nz - 1);

    LatentRecord& rec = latent[i];
    rec.u.resize(nt);
    rec.y.resize(nt);
    rec.t_at.resize(nz);
    if (config.rank_mode == RankMode::invariance) {
      std::fill(rec.u.begin(), rec.u.end(), v);
    } else {
      const double w = stats::normal_quantile(v);
      for (Treatment t = 0; t < nt; ++t) {
        const double xi = stats::normal_quantile(open_uniform(rng));
        rec.u[t] = stats::normal_cdf(config.rho * w + rho_c * xi);
      }
    }
    for (Treatment t = 0; t < nt; ++t)
      rec.y[t] = config.outcomes[t].quantile(rec.u[t]);
    for (std::size_t zz = 0; zz < nz; ++zz)
      rec.t_at[zz] = choice_function(utility, config.discount, zz);

    data.z[i] = z;
    data.t[i] = rec.t_at[z];
    data.y[i] = rec.y[data.t[i]];
  });

  if (with_latent)
    data.latent = std::move(latent);
  return data;
}

std::vector<DirectionReport>
verify_monotonicity(const Dataset& data, InstrumentPair pair)
{
  if (!data.has_latent())
    throw Error(ErrorKind::no_latent_data, "monotonicity check needs latent records");
  if (pair.first >= data.num_instruments() || pair.second >= data.num_instruments())
    throw Error(ErrorKind::config_invalid, "pair references an unknown instrument value");
  std::vector<DirectionReport> out(data.num_treatments());
  for (Treatment t = 0; t < out.size(); ++t)
    out[t].treatment = t;
  for (const auto& rec : data.latent) {
    const Treatment a = rec.t_at[pair.first];
    const Treatment b = rec.t_at[pair.second];
    if (a == b)
      continue;
    // D^a_first = 1 > D^a_second = 0, and D^b_first = 0 < D^b_second = 1.
    ++out[a].le_violations;
    ++out[b].ge_violations;
  }
  for (auto& r : out) {
    if (r.le_violations == 0 && r.ge_violations == 0)
      r.observed = Direction::both;
    else if (r.le_violations == 0)
      r.observed = Direction::le;
    else if (r.ge_violations == 0)
      r.observed = Direction::ge;
    else
      r.observed = Direction::neither;
  }
  return out;
}

std::size_t
count_declared_violations(const DgpConfig& config, const Dataset& data)
{
  std::size_t total = 0;
  for (const auto& pm : config.declared) {
    auto report = verify_monotonicity(data, pm.pair);
    for (Treatment t = 0; t < report.size(); ++t) {
      switch (pm.directions[t]) {
        case Direction::le: total += report[t].le_violations; break;
        case Direction::ge: total += report[t].ge_violations; break;
        case Direction::both: total += report[t].le_violations + report[t].ge_violations; break;
        case Direction::neither: break;
      }
    }
  }
  return total;
}

} // namespace ivmono
