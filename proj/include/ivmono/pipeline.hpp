#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/counterfactual.hpp"
#include "ivmono/diagnostics.hpp"
#include "ivmono/effects.hpp"
#include "ivmono/error.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivmono {

struct EstimateOptions
{
  double trim_fraction = 0.01;
  double eta = 0.01;
  std::size_t grid_nodes = 512;
  std::vector<double> tau_grid = default_tau_grid();
  //! User-supplied monotonicity subset; detected from all pairs when empty.
  std::vector<InstrumentPair> pairs;
  double dkw_delta = 0.01;
};

struct QteCurve
{
  Treatment s = 0;
  Treatment t = 0;
  std::vector<double> tau;
  std::vector<double> value; //!< NaN where tau fell outside the window
};

struct LocalEffect
{
  std::string label;
  LocalGroup group;
  //! Local means of every potential outcome over the group.
  std::vector<MeanEstimate> means;
  //! E[Y_sign | G] - E[Y_own | G].
  double late = 0.0;
  std::vector<double> lqte; //!< on the tau grid, NaN outside the window
};

//! Everything identification produces from cell tables alone.
struct Identification
{
  std::vector<SignDetection> detections;
  Assumption3Result assumption3;
  MonotonicitySpec spec;
  std::optional<SystemTables> system;
  std::optional<MapFamily> maps;
  std::vector<MonotoneCdf> potential;
  std::vector<double> z_gap;
  std::vector<QteCurve> qte;
  //! Max over z of |Pi_z| at the identified quantile vector, per tau.
  std::vector<double> moment_check;
  std::vector<std::string> warnings;

  //! Set when identification stopped early.
  std::optional<ErrorKind> failure;
  std::string failure_message;
};

Identification
identify(const CellTables& tables, const EstimateOptions& options);

struct Estimate
{
  CellTables tables;
  Identification id;
  std::vector<MeanEstimate> means;
  std::vector<std::vector<double>> ate; //!< ate[s][t]
  std::vector<LocalEffect> local;
};

//! Full plug-in pipeline on data. Identification failures are recorded in
//! id.failure rather than thrown, so callers can still report diagnostics.
Estimate
estimate(const Dataset& data, const EstimateOptions& options);

//! Exit code for an error kind: 2 config, 3 identification, 4 data.
int
exit_code_for(ErrorKind kind);

} // namespace ivmono
