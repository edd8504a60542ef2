#include "ivmono/analytic.hpp"

#include "ivmono/error.hpp"
#include "ivmono/parallel.hpp"
#include "ivmono/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

namespace {

constexpr std::size_t invariance_panels = 2048;
constexpr std::size_t similarity_panels = 170;
constexpr double similarity_span = 8.5;

using GL = stats::GaussLegendre5;

std::vector<double>
softmax(const DgpConfig& c, std::size_t z, double v)
{
  const std::size_t nt = c.num_treatments();
  std::vector<double> out(nt);
  double hi = -inf;
  for (Treatment t = 0; t < nt; ++t) {
    out[t] = (c.base_utility[t] + c.loading[t] * v + c.discount[z][t]) / c.taste_scale;
    hi = std::max(hi, out[t]);
  }
  double total = 0.0;
  for (auto& x : out) {
    x = std::exp(x - hi);
    total += x;
  }
  for (auto& x : out)
    x /= total;
  return out;
}

std::vector<SupportWindow>
pooled_windows(const CellTables& tab, double trim)
{
  std::vector<SupportWindow> out;
  for (Treatment t = 0; t < tab.num_treatments(); ++t) {
    // Mixture over z of F(. | t, z) weighted by each z's share of treatment t.
    std::vector<double> raw(tab.grid[t].size(), 0.0);
    double mass = 0.0;
    for (std::size_t z = 0; z < tab.num_instruments(); ++z) {
      const double w = tab.weights[z] * tab.propensity(z, t);
      mass += w;
      const auto& v = tab.cdf[t][z].values();
      for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] += w * v[i];
    }
    if (mass <= 0.0)
      throw Error(ErrorKind::empty_cell, fmt::format("treatment {} has zero probability", t));
    for (auto& r : raw)
      r /= mass;
    MonotoneCdf pooled = isotonize(tab.grid[t], raw);
    SupportWindow w;
    w.trim_fraction = trim;
    w.lower = trim > 0.0 ? generalized_inverse(pooled, trim).value : tab.grid[t].front();
    w.upper = trim > 0.0 ? generalized_inverse(pooled, 1.0 - trim).value : tab.grid[t].back();
    out.push_back(w);
  }
  return out;
}

} // namespace

struct AnalyticDesign::Impl
{
  // Invariance: cumulative integral of P(T_z = t | v) at panel edges.
  std::vector<std::vector<std::vector<double>>> cumulative; // [t][z][panel edge]
  // Similarity: quadrature nodes w (standard normal scale) with weights
  // that already include phi(w) and P(T_z = t | Phi(w)).
  std::vector<double> w_nodes;
  std::vector<std::vector<std::vector<double>>> w_weights; // [t][z][node]
  std::vector<std::vector<double>> mass;                   // [z][t]
};

AnalyticDesign::AnalyticDesign(DgpConfig config)
  : config_(std::move(config))
  , impl_(std::make_unique<Impl>())
{
  config_.validate();
  const std::size_t nt = config_.num_treatments();
  const std::size_t nz = config_.num_instruments();
  auto& im = *impl_;
  im.mass.assign(nz, std::vector<double>(nt, 0.0));

  if (config_.rank_mode == RankMode::invariance) {
    im.cumulative.assign(nt, std::vector<std::vector<double>>(nz, std::vector<double>(invariance_panels + 1, 0.0)));
    const double h = 1.0 / static_cast<double>(invariance_panels);
    for (std::size_t z = 0; z < nz; ++z) {
      for (std::size_t j = 0; j < invariance_panels; ++j) {
        std::vector<double> panel(nt, 0.0);
        const double mid = (static_cast<double>(j) + 0.5) * h;
        for (std::size_t q = 0; q < GL::nodes.size(); ++q) {
          auto p = softmax(config_, z, mid + 0.5 * h * GL::nodes[q]);
          for (Treatment t = 0; t < nt; ++t)
            panel[t] += 0.5 * h * GL::weights[q] * p[t];
        }
        for (Treatment t = 0; t < nt; ++t)
          im.cumulative[t][z][j + 1] = im.cumulative[t][z][j] + panel[t];
      }
      for (Treatment t = 0; t < nt; ++t)
        im.mass[z][t] = im.cumulative[t][z].back();
    }
  } else {
    const double h = 2.0 * similarity_span / static_cast<double>(similarity_panels);
    std::vector<double> base_weight;
    for (std::size_t j = 0; j < similarity_panels; ++j) {
      const double mid = -similarity_span + (static_cast<double>(j) + 0.5) * h;
      for (std::size_t q = 0; q < GL::nodes.size(); ++q) {
        const double w = mid + 0.5 * h * GL::nodes[q];
        im.w_nodes.push_back(w);
        base_weight.push_back(0.5 * h * GL::weights[q] * stats::normal_pdf(w));
      }
    }
    im.w_weights.assign(nt, std::vector<std::vector<double>>(nz, std::vector<double>(im.w_nodes.size())));
    for (std::size_t z = 0; z < nz; ++z) {
      for (std::size_t i = 0; i < im.w_nodes.size(); ++i) {
        auto p = softmax(config_, z, stats::normal_cdf(im.w_nodes[i]));
        for (Treatment t = 0; t < nt; ++t) {
          im.w_weights[t][z][i] = base_weight[i] * p[t];
          im.mass[z][t] += im.w_weights[t][z][i];
        }
      }
    }
  }
  // Quadrature leaves rows summing to 1 up to rounding; normalize exactly.
  for (auto& r : im.mass) {
    double total = 0.0;
    for (double x : r)
      total += x;
    for (double& x : r)
      x /= total;
  }
}

AnalyticDesign::~AnalyticDesign() = default;
AnalyticDesign::AnalyticDesign(AnalyticDesign&&) noexcept = default;
AnalyticDesign& AnalyticDesign::operator=(AnalyticDesign&&) noexcept = default;

double
AnalyticDesign::choice_probability(Treatment t, std::size_t z, double v) const
{
  return softmax(config_, z, v)[t];
}

double
AnalyticDesign::propensity(Treatment t, std::size_t z) const
{
  return impl_->mass[z][t];
}

double
AnalyticDesign::joint_cdf(Treatment t, std::size_t z, double y) const
{
  const double u = config_.outcomes[t].cdf(y);
  if (u <= 0.0)
    return 0.0;
  const auto& im = *impl_;
  if (config_.rank_mode == RankMode::invariance) {
    if (u >= 1.0)
      return im.mass[z][t];
    const double h = 1.0 / static_cast<double>(invariance_panels);
    const std::size_t j = std::min(static_cast<std::size_t>(u / h), invariance_panels - 1);
    const double a = static_cast<double>(j) * h;
    double partial = 0.0;
    for (std::size_t q = 0; q < GL::nodes.size(); ++q) {
      const double v = a + 0.5 * (u - a) * (1.0 + GL::nodes[q]);
      partial += 0.5 * (u - a) * GL::weights[q] * softmax(config_, z, v)[t];
    }
    return std::min(im.cumulative[t][z][j] + partial, im.mass[z][t]);
  }
  if (u >= 1.0)
    return im.mass[z][t];
  const double qu = stats::normal_quantile(u);
  const double rho = config_.rho;
  const double s = std::sqrt(1.0 - rho * rho);
  double total = 0.0;
  const auto& wt = im.w_weights[t][z];
  for (std::size_t i = 0; i < im.w_nodes.size(); ++i)
    total += wt[i] * stats::normal_cdf((qu - rho * im.w_nodes[i]) / s);
  return std::min(total, im.mass[z][t]);
}

double
AnalyticDesign::cell_cdf(Treatment t, std::size_t z, double y) const
{
  const double m = propensity(t, z);
  if (m <= 0.0)
    return 0.0;
  return std::clamp(joint_cdf(t, z, y) / m, 0.0, 1.0);
}

double
AnalyticDesign::cell_density(Treatment t, std::size_t z, double y) const
{
  const double m = propensity(t, z);
  const double u = config_.outcomes[t].cdf(y);
  const double f = config_.outcomes[t].pdf(y);
  if (m <= 0.0 || f <= 0.0 || u <= 0.0 || u >= 1.0)
    return 0.0;
  if (config_.rank_mode == RankMode::invariance)
    return f * choice_probability(t, z, u) / m;
  const auto& im = *impl_;
  const double qu = stats::normal_quantile(u);
  const double rho = config_.rho;
  const double s = std::sqrt(1.0 - rho * rho);
  double total = 0.0;
  const auto& wt = im.w_weights[t][z];
  for (std::size_t i = 0; i < im.w_nodes.size(); ++i)
    total += wt[i] * stats::normal_pdf((qu - rho * im.w_nodes[i]) / s) / s;
  return f / stats::normal_pdf(qu) * total / m;
}

PropensityMatrix
AnalyticDesign::propensity_matrix() const
{
  PropensityMatrix pm;
  pm.p = impl_->mass;
  return pm;
}

CellTables
AnalyticDesign::tables(const AnalyticOptions& options) const
{
  const std::size_t nt = config_.num_treatments();
  const std::size_t nz = config_.num_instruments();
  CellTables tab;
  tab.k = config_.k;
  tab.labels = config_.labels;
  tab.propensity = propensity_matrix();
  tab.weights = config_.assignment_probs;
  tab.grid.resize(nt);
  tab.cdf.resize(nt);
  for (Treatment t = 0; t < nt; ++t) {
    const auto& o = config_.outcomes[t];
    tab.grid[t] = uniform_grid(o.quantile(options.tail), o.quantile(1.0 - options.tail), options.nodes);
    std::vector<std::vector<double>> raw(nz, std::vector<double>(options.nodes));
    parallel_for(options.nodes, [&](std::size_t i) {
      for (std::size_t z = 0; z < nz; ++z)
        raw[z][i] = cell_cdf(t, z, tab.grid[t][i]);
    });
    for (std::size_t z = 0; z < nz; ++z)
      tab.cdf[t].push_back(isotonize(tab.grid[t], raw[z]));
  }
  tab.windows = pooled_windows(tab, options.trim_fraction);
  return tab;
}

CellTables
fixed_propensity_tables(const std::vector<std::vector<double>>& propensity,
                        const std::vector<OutcomeModel>& outcomes,
                        std::vector<std::string> labels,
                        const AnalyticOptions& options)
{
  const std::size_t nz = propensity.size();
  const std::size_t nt = outcomes.size();
  if (nz == 0 || nt < 2 || labels.size() != nz)
    throw Error(ErrorKind::config_invalid, "propensity matrix, outcomes and labels disagree in size");
  for (const auto& r : propensity) {
    if (r.size() != nt)
      throw Error(ErrorKind::config_invalid, "propensity rows need one entry per treatment");
    double total = 0.0;
    for (double x : r) {
      if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorKind::config_invalid, "propensities must lie in [0, 1]");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw Error(ErrorKind::config_invalid, fmt::format("propensity row sums to {}", total));
  }
  CellTables tab;
  tab.k = nt - 1;
  tab.labels = std::move(labels);
  tab.propensity.p = propensity;
  tab.weights.assign(nz, 1.0 / static_cast<double>(nz));
  tab.grid.resize(nt);
  tab.cdf.resize(nt);
  for (Treatment t = 0; t < nt; ++t) {
    const auto& o = outcomes[t];
    tab.grid[t] = uniform_grid(o.quantile(options.tail), o.quantile(1.0 - options.tail), options.nodes);
    std::vector<double> raw(options.nodes);
    for (std::size_t i = 0; i < options.nodes; ++i)
      raw[i] = o.cdf(tab.grid[t][i]);
    MonotoneCdf cdf = isotonize(tab.grid[t], raw);
    tab.cdf[t].assign(nz, cdf);
  }
  tab.windows = pooled_windows(tab, options.trim_fraction);
  return tab;
}

void
check_relevance(const DgpConfig& config, double min_mass)
{
  AnalyticDesign design(config);
  for (const auto& pm : config.declared) {
    if (!pm.sign_treatment)
      continue;
    const auto [a, b] = pm.pair;
    for (Treatment t = 0; t < config.num_treatments(); ++t) {
      const double d = std::abs(design.propensity(t, a) - design.propensity(t, b));
      if (pm.directions[t] != Direction::both && pm.directions[t] != Direction::neither && d < min_mass)
        throw Error(ErrorKind::config_invalid,
                    fmt::format("pair ({},{}) moves only {:.4f} of the population for treatment {}",
                                config.labels[a], config.labels[b], d, t));
    }
  }
}

} // namespace ivmono
