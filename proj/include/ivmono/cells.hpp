#pragma once

#include "ivmono/core.hpp"

#include <string>
#include <vector>

namespace ivmono {

//! Potential quantities of one simulated unit.
struct LatentRecord
{
  std::vector<double> u;        //!< rank variable per treatment
  std::vector<double> y;        //!< potential outcome per treatment
  std::vector<Treatment> t_at;  //!< potential treatment per instrument value
};

//! Observed records (y, t, z) with optional latent companions. Instrument
//! values are stored as indices into labels.
struct Dataset
{
  std::size_t k = 0;
  std::vector<std::string> labels;
  std::vector<double> y;
  std::vector<Treatment> t;
  std::vector<std::size_t> z;
  std::vector<LatentRecord> latent;

  std::size_t size() const { return y.size(); }
  std::size_t num_treatments() const { return k + 1; }
  std::size_t num_instruments() const { return labels.size(); }
  bool has_latent() const { return !latent.empty(); }

  //! Throws ConfigInvalid on out-of-range t or z and NonFinite on bad y.
  void validate() const;
};

//! p[z][t] = P(T = t | Z = z).
struct PropensityMatrix
{
  std::vector<std::vector<double>> p;
  //! Observation counts per instrument value; empty for analytic matrices.
  std::vector<double> n_z;

  std::size_t rows() const { return p.size(); }
  std::size_t cols() const { return p.empty() ? 0 : p.front().size(); }
  double operator()(std::size_t z, Treatment t) const { return p[z][t]; }
  bool analytic() const { return n_z.empty(); }
};

//! Conditional outcome CDFs F(y | T = t, Z = z) tabulated on one grid per
//! treatment, together with the propensity matrix. Built either from data or
//! exactly from a structural design; everything downstream reads only this.
struct CellTables
{
  std::size_t k = 0;
  std::vector<std::string> labels;
  PropensityMatrix propensity;
  //! grid[t]: every point where some F(. | t, z) may jump.
  std::vector<std::vector<double>> grid;
  //! cdf[t][z] on grid[t].
  std::vector<std::vector<MonotoneCdf>> cdf;
  //! Cell sizes n[z][t]; empty for analytic tables.
  std::vector<std::vector<double>> counts;
  //! Weight of each instrument value when pooling over z.
  std::vector<double> weights;
  //! Window of the outcome among units with T = t, trimmed as configured.
  std::vector<SupportWindow> windows;

  std::size_t num_treatments() const { return k + 1; }
  std::size_t num_instruments() const { return labels.size(); }
  bool analytic() const { return counts.empty(); }

  double cell_cdf(Treatment t, std::size_t z, double y) const { return cdf[t][z](y); }
};

//! Cell tables from observed data; grid[t] holds the distinct outcomes with
//! T = t. Empty cells are allowed when the propensity is zero.
CellTables
tables_from_data(const Dataset& data, double trim_fraction);

} // namespace ivmono
