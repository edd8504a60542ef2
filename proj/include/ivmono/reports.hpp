#pragma once

#include "ivmono/dgp.hpp"
#include "ivmono/io.hpp"
#include "ivmono/pipeline.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ivmono {

struct DiagnoseInput
{
  CellTables tables;
  //! f(y | T = t, Z = z) used by the determinant sweep.
  std::function<double(Treatment, std::size_t, double)> density;
  //! Outcome at which treatment t is read for sweep level tau.
  std::function<double(Treatment, double)> sweep_point;
  //! Propensity entries as written by the user, for the exact determinant.
  std::optional<std::vector<std::vector<std::string>>> exact_entries;
};

//! Sign treatments, distinct-sign verdict, Jacobian determinant sweep over
//! the tau grid, and moment residual curves when identification succeeds.
io::json
diagnose_report(const DiagnoseInput& input, const EstimateOptions& options);

//! Diagnose input for a dataset: cell densities by Gaussian kernels and
//! sweep points at per-treatment sample quantiles.
DiagnoseInput
diagnose_input_from_data(const Dataset& data, double trim_fraction);

//! Diagnose input for a structural design, all exact.
DiagnoseInput
diagnose_input_from_design(const DgpConfig& config);

//! Diagnose input for an explicit propensity matrix with outcomes that do
//! not depend on the potential treatments.
DiagnoseInput
diagnose_input_from_propensity(const std::vector<std::vector<std::string>>& entries,
                               const std::vector<OutcomeModel>& outcomes);

//! Parses "r0;r1;..." with comma-separated entries per row.
std::vector<std::vector<std::string>>
parse_matrix(const std::string& text);

struct OracleOptions
{
  //! Anchor values checked against the exhaustive or nested oracle.
  std::size_t check_points = 9;
  std::size_t grid_nodes = 255;
};

//! Sup-distance between the pipeline's maps and the closed-form maps of the
//! design, plus pointwise agreement with grid_solve (k <= 2) or
//! monotone_solve (k >= 3). With data, the maps come from estimation.
io::json
oracle_report(const DgpConfig& config,
              const EstimateOptions& options,
              const OracleOptions& oracle_options,
              const Dataset* data = nullptr);

} // namespace ivmono
