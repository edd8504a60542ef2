#include "ivmono/reports.hpp"

#include "ivmono/analytic.hpp"
#include "ivmono/error.hpp"
#include "ivmono/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>

namespace ivmono {

namespace {

double
max_gap(const std::vector<double>& grid, double lo, double hi)
{
  double gap = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < lo || grid[i - 1] > hi)
      continue;
    gap = std::max(gap, grid[i] - grid[i - 1]);
  }
  return gap;
}

} // namespace

std::vector<std::vector<std::string>>
parse_matrix(const std::string& text)
{
  std::vector<std::vector<std::string>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    std::string row = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    std::vector<std::string> cells;
    std::size_t a = 0;
    while (a <= row.size()) {
      std::size_t b = row.find(',', a);
      std::string cell = row.substr(a, b == std::string::npos ? std::string::npos : b - a);
      cell.erase(std::remove(cell.begin(), cell.end(), ' '), cell.end());
      if (!cell.empty())
        cells.push_back(cell);
      if (b == std::string::npos)
        break;
      a = b + 1;
    }
    if (!cells.empty())
      out.push_back(std::move(cells));
    if (end == std::string::npos)
      break;
    start = end + 1;
  }
  if (out.empty())
    throw Error(ErrorKind::config_invalid, "empty propensity matrix");
  for (const auto& r : out) {
    if (r.size() != out.front().size())
      throw Error(ErrorKind::config_invalid, "propensity rows differ in length");
  }
  return out;
}

DiagnoseInput
diagnose_input_from_data(const Dataset& data, double trim_fraction)
{
  DiagnoseInput in;
  in.tables = tables_from_data(data, trim_fraction);
  const std::size_t nt = data.num_treatments();
  const std::size_t nz = data.num_instruments();
  auto cells = std::make_shared<std::vector<std::vector<std::vector<double>>>>(
    nt, std::vector<std::vector<double>>(nz));
  auto pooled = std::make_shared<std::vector<std::vector<double>>>(nt);
  for (std::size_t i = 0; i < data.size(); ++i) {
    (*cells)[data.t[i]][data.z[i]].push_back(data.y[i]);
    (*pooled)[data.t[i]].push_back(data.y[i]);
  }
  for (auto& v : *pooled)
    std::sort(v.begin(), v.end());
  in.density = [cells](Treatment t, std::size_t z, double y) {
    const auto& s = (*cells)[t][z];
    if (s.size() < 2)
      return 0.0;
    return kernel_density(s, y);
  };
  in.sweep_point = [pooled](Treatment t, double tau) { return sorted_quantile((*pooled)[t], tau); };
  return in;
}

DiagnoseInput
diagnose_input_from_design(const DgpConfig& config)
{
  auto design = std::make_shared<AnalyticDesign>(config);
  DiagnoseInput in;
  in.tables = design->tables();
  in.density = [design](Treatment t, std::size_t z, double y) { return design->cell_density(t, z, y); };
  in.sweep_point = [design](Treatment t, double tau) { return design->config().outcomes[t].quantile(tau); };
  return in;
}

DiagnoseInput
diagnose_input_from_propensity(const std::vector<std::vector<std::string>>& entries,
                               const std::vector<OutcomeModel>& outcomes)
{
  std::vector<std::vector<double>> p;
  for (const auto& row : entries) {
    std::vector<double> r;
    for (const auto& e : row)
      r.push_back(Rational::parse(e).to_double());
    p.push_back(std::move(r));
  }
  std::vector<std::string> labels;
  for (std::size_t z = 0; z < p.size(); ++z)
    labels.push_back(std::to_string(z));
  DiagnoseInput in;
  in.tables = fixed_propensity_tables(p, outcomes, labels);
  in.density = [outcomes](Treatment t, std::size_t, double y) { return outcomes[t].pdf(y); };
  in.sweep_point = [outcomes](Treatment t, double tau) { return outcomes[t].quantile(tau); };
  in.exact_entries = entries;
  return in;
}

io::json
diagnose_report(const DiagnoseInput& input, const EstimateOptions& options)
{
  const CellTables& tables = input.tables;
  Identification id = identify(tables, options);
  io::json j;
  j["schema_version"] = io::schema_version;
  j["command"] = "diagnose";
  j["options"] = io::options_to_json(options, tables.labels);
  j["propensity"] = io::propensity_to_json(tables.propensity);
  j["sign_treatments"] = io::detections_to_json(id.detections, tables.labels);
  io::json verdict;
  verdict["satisfied"] = id.assumption3.satisfied;
  verdict["reason"] = id.assumption3.reason;
  j["assumption3"] = verdict;
  if (id.failure)
    j["failure"] = { { "kind", std::string(to_string(*id.failure)) }, { "message", id.failure_message } };
  else
    j["failure"] = nullptr;

  if (input.exact_entries) {
    const Rational det = exact_propensity_determinant(*input.exact_entries);
    j["propensity_determinant_exact"] = det.to_string();
  }

  const std::size_t nt = tables.num_treatments();
  if (tables.num_instruments() == nt) {
    JacobianInput jin{ input.density, tables.propensity };
    io::json sweep = io::json::array();
    for (double tau : options.tau_grid) {
      std::vector<double> y(nt);
      for (Treatment t = 0; t < nt; ++t)
        y[t] = input.sweep_point(t, tau);
      const JacobianResult r = jacobian_determinant(jin, y);
      double product = 1.0;
      for (Treatment t = 0; t < nt; ++t)
        product *= input.density(t, 0, y[t]);
      sweep.push_back({ { "tau", tau },
                        { "y", y },
                        { "direct", io::number(r.direct) },
                        { "factored", io::number(r.factored) },
                        { "density_product", io::number(product) },
                        { "ratio", io::number(product > 0.0 ? r.direct / product : NAN) },
                        { "instrument_independent", r.instrument_independent } });
    }
    j["propensity_determinant"] = determinant(tables.propensity.p);
    j["determinant_sweep"] = sweep;
  } else {
    j["determinant_sweep"] = nullptr;
    j["determinant_note"] = fmt::format("the Jacobian is {}x{} and has no determinant", tables.num_instruments(), nt);
  }

  if (!id.failure) {
    io::json curves = io::json::array();
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
      if (!ok) {
        curves.push_back({ { "tau", tau }, { "y", nullptr }, { "residuals", nullptr } });
        continue;
      }
      curves.push_back({ { "tau", tau }, { "y", y }, { "residuals", moment_residual(tables, y, tau) } });
    }
    j["residual_curves"] = curves;
    j["z_invariance_gap"] = id.z_gap;
  }
  j["warnings"] = id.warnings;
  return j;
}

io::json
oracle_report(const DgpConfig& config,
              const EstimateOptions& options,
              const OracleOptions& oracle_options,
              const Dataset* data)
{
  const AnalyticDesign design(config);
  const CellTables analytic_tables = design.tables();
  std::optional<Estimate> est;
  Identification id_local;
  const Identification* id = nullptr;
  const CellTables* tables = &analytic_tables;
  if (data) {
    est = estimate(*data, options);
    id = &est->id;
    tables = &est->tables;
  } else {
    id_local = identify(analytic_tables, options);
    id = &id_local;
  }

  io::json j;
  j["schema_version"] = io::schema_version;
  j["command"] = "oracle";
  j["source"] = data ? "estimated" : "analytic";
  j["config"] = io::config_to_json(config);
  if (id->failure) {
    j["failure"] = { { "kind", std::string(to_string(*id->failure)) }, { "message", id->failure_message } };
    return j;
  }
  const MapFamily& maps = *id->maps;
  const std::size_t nt = config.num_treatments();

  // Pipeline maps against Q_t(F_s(y)) on the central 99.8% of Y_s, measured
  // in steps of the anchor's map grid.
  const auto& anchor_grid = maps(maps.anchor, maps.anchor).grid();
  const double anchor_step = max_gap(anchor_grid, anchor_grid.front(), anchor_grid.back());
  io::json dist = io::json::array();
  bool all_within = true;
  for (Treatment s = 0; s < nt; ++s) {
    for (Treatment t = 0; t < nt; ++t) {
      if (s == t)
        continue;
      const auto& m = maps(s, t);
      const double lo = config.outcomes[s].quantile(0.001);
      const double hi = config.outcomes[s].quantile(0.999);
      double sup = 0.0;
      std::size_t checked = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double y = m.grid()[i];
        if (y < lo || y > hi)
          continue;
        sup = std::max(sup, std::abs(m.images()[i] - oracle::analytic_phi(config, s, t, y)));
        ++checked;
      }
      const double step = anchor_step;
      const bool within = sup <= step;
      all_within = all_within && within;
      dist.push_back({ { "s", s },
                       { "t", t },
                       { "sup_distance", sup },
                       { "grid_step", step },
                       { "nodes_checked", checked },
                       { "within_one_step", within } });
    }
  }
  j["analytic_phi"] = dist;

  if (!data) {
    const SystemTables& sys = *id->system;
    const Treatment anchor = sys.anchor();
    const auto grids = oracle::outcome_grids(config.outcomes, oracle_options.grid_nodes);
    double oracle_step = 0.0;
    for (const auto& g : grids)
      oracle_step = std::max(oracle_step, max_gap(g, g.front(), g.back()));
    const SolverOptions so = default_solver_options(sys);
    io::json points = io::json::array();
    bool agree = true;
    const std::size_t m = oracle_options.check_points;
    for (std::size_t i = 1; i <= m; ++i) {
      const double tau = static_cast<double>(i) / static_cast<double>(m + 1);
      const double y_f = config.outcomes[anchor].quantile(tau);
      const Solution sol = solve_general(sys, y_f, so);
      io::json point;
      point["tau"] = tau;
      point["y_f"] = y_f;
      point["pipeline"] = sol.images;
      bool ok = false;
      if (config.k <= 2) {
        // The grid argmin of the sup residual can sit a few steps away along
        // poorly conditioned directions, so agreement is measured against
        // the whole accepted set and the oracle's own residual test.
        const auto gs = oracle::grid_solve(tau, *tables, grids);
        double to_set = inf;
        for (const auto& cand : gs.solutions) {
          double d = 0.0;
          for (Treatment t = 0; t < nt; ++t)
            d = std::max(d, std::abs(cand[t] - sol.images[t]));
          to_set = std::min(to_set, d);
        }
        double to_best = 0.0;
        for (Treatment t = 0; t < nt; ++t)
          to_best = std::max(to_best, std::abs(gs.best[t] - sol.images[t]));
        double own = 0.0;
        for (double r : moment_residual(*tables, sol.images, tau))
          own = std::max(own, std::abs(r));
        ok = to_set <= oracle_step && own <= gs.tolerance;
        point["method"] = "grid_solve";
        point["oracle_best"] = gs.best;
        point["solution_count"] = gs.solution_count;
        point["distance_to_solution_set"] = io::number(to_set);
        point["distance_to_best"] = to_best;
        point["pipeline_residual"] = own;
        point["oracle_tolerance"] = gs.tolerance;
      } else {
        const auto ref = oracle::monotone_solve(tau, *tables, id->spec);
        double diff = 0.0;
        for (Treatment t = 0; t < nt; ++t)
          diff = std::max(diff, std::abs(ref[t] - sol.images[t]));
        ok = diff <= oracle_step;
        point["method"] = "monotone_solve";
        point["oracle"] = ref;
        point["max_difference"] = diff;
      }
      point["within_one_step"] = ok;
      agree = agree && ok;
      points.push_back(std::move(point));
    }
    j["solver_check"] = { { "oracle_grid_step", oracle_step }, { "points", points }, { "all_within", agree } };
    all_within = all_within && agree;
  }
  j["all_within"] = all_within;
  return j;
}

} // namespace ivmono
