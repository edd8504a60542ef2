#include "ivmono/pipeline.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace ivmono {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

bool
is_identification_failure(ErrorKind k)
{
  switch (k) {
    case ErrorKind::assumption_three_violated:
    case ErrorKind::weak_pair:
    case ErrorKind::sign_treatment_mismatch:
    case ErrorKind::no_solution_on_grid:
    case ErrorKind::bracketing_violation:
    case ErrorKind::domain_empty: return true;
    default: return false;
  }
}

} // namespace

int
exit_code_for(ErrorKind kind)
{
  if (is_identification_failure(kind))
    return 3;
  switch (kind) {
    case ErrorKind::empty_cell:
    case ErrorKind::empty_sample:
    case ErrorKind::io_error:
    case ErrorKind::non_finite:
    case ErrorKind::no_latent_data:
    case ErrorKind::degenerate_support:
    case ErrorKind::too_few_samples: return 4;
    default: return 2;
  }
}

Identification
identify(const CellTables& tables, const EstimateOptions& options)
{
  Identification id;
  std::vector<InstrumentPair> pairs = options.pairs;
  if (pairs.empty())
    pairs = all_pairs(tables.num_instruments());
  const double eta = tables.analytic() ? 1e-12 : options.eta;
  id.detections = detect_sign_treatments(tables.propensity, pairs, eta);
  id.assumption3 = check_assumption3(id.detections, tables.k);
  id.spec = spec_from_detections(id.detections, id.assumption3);
  if (!id.assumption3.satisfied) {
    id.failure = ErrorKind::assumption_three_violated;
    id.failure_message = id.assumption3.reason;
    return id;
  }
  try {
    id.system = build_system(tables, id.spec, options.eta);
    const auto grid = default_map_grid(tables, *id.system, options.grid_nodes);
    id.maps = build_all_maps(*id.system, grid, default_solver_options(*id.system));
    id.warnings = id.maps->warnings;
  } catch (const Error& e) {
    if (!is_identification_failure(e.kind()))
      throw;
    id.failure = e.kind();
    id.failure_message = e.what();
    return id;
  }

  const std::size_t nt = tables.num_treatments();
  for (Treatment s = 0; s < nt; ++s) {
    id.potential.push_back(potential_cdf_pooled(s, *id.maps, tables));
    id.z_gap.push_back(z_invariance_gap(s, *id.maps, tables));
  }
  for (Treatment s = 0; s < nt; ++s) {
    for (Treatment t = 0; t < nt; ++t) {
      if (s == t)
        continue;
      QteCurve c;
      c.s = s;
      c.t = t;
      for (double tau : options.tau_grid) {
        c.tau.push_back(tau);
        try {
          c.value.push_back(qte(id.potential[s], id.potential[t], tau));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::tau_outside_window)
            throw;
          c.value.push_back(nan);
        }
      }
      id.qte.push_back(std::move(c));
    }
  }
  for (double tau : options.tau_grid) {
    std::vector<double> y(nt);
    bool ok = true;
    for (Treatment t = 0; t < nt && ok; ++t) {
      try {
        y[t] = window_quantile(id.potential[t], tau).value;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::tau_outside_window)
          throw;
        ok = false;
      }
    }
    double worst = nan;
    if (ok) {
      worst = 0.0;
      for (double r : moment_residual(tables, y, tau))
        worst = std::max(worst, std::abs(r));
    }
    id.moment_check.push_back(worst);
  }
  return id;
}

Estimate
estimate(const Dataset& data, const EstimateOptions& options)
{
  Estimate est;
  est.tables = tables_from_data(data, options.trim_fraction);
  est.id = identify(est.tables, options);
  if (est.id.failure)
    return est;

  const MapFamily& maps = *est.id.maps;
  const std::size_t nt = data.num_treatments();
  std::size_t clamped = 0;
  for (Treatment s = 0; s < nt; ++s) {
    est.means.push_back(potential_mean_pooled(s, maps, data));
    clamped += est.means.back().clamped;
  }
  if (clamped > 0)
    est.id.warnings.push_back(
      fmt::format("Clamped: {} map evaluation(s) outside the tabulated window used endpoint images", clamped));
  est.ate.assign(nt, std::vector<double>(nt, 0.0));
  for (Treatment s = 0; s < nt; ++s) {
    for (Treatment t = 0; t < nt; ++t)
      est.ate[s][t] = ate({ est.means[s].value, est.means[t].value }, 0, 1);
  }

  for (const auto& g : local_groups(*est.id.system)) {
    LocalEffect le;
    le.group = g;
    le.label = g.label(data.labels);
    for (Treatment t = 0; t < nt; ++t)
      le.means.push_back(local_mean(t, g, data, maps));
    le.late = le.means[g.sign].value - le.means[g.own].value;
    const MonotoneCdf a = local_cdf(g.sign, g, maps);
    const MonotoneCdf b = local_cdf(g.own, g, maps);
    for (double tau : options.tau_grid) {
      try {
        le.lqte.push_back(qte(a, b, tau));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::tau_outside_window)
          throw;
        le.lqte.push_back(nan);
      }
    }
    est.local.push_back(std::move(le));
  }
  return est;
}

} // namespace ivmono
