#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/dgp.hpp"

#include <memory>
#include <vector>

namespace ivmono {

struct AnalyticOptions
{
  std::size_t nodes = 4096;
  //! Each treatment's grid spans [Q_t(tail), Q_t(1 - tail)].
  double tail = 1e-5;
  double trim_fraction = 0.01;
};

//! Exact population quantities of a structural design, computed by
//! quadrature over the selection variable V.
class AnalyticDesign
{
public:
  explicit AnalyticDesign(DgpConfig config);
  ~AnalyticDesign();
  AnalyticDesign(AnalyticDesign&&) noexcept;
  AnalyticDesign& operator=(AnalyticDesign&&) noexcept;

  const DgpConfig& config() const { return config_; }

  //! P(T_z = t | V = v).
  double choice_probability(Treatment t, std::size_t z, double v) const;
  //! P(T = t | Z = z).
  double propensity(Treatment t, std::size_t z) const;
  //! P(Y_t <= y, T_z = t).
  double joint_cdf(Treatment t, std::size_t z, double y) const;
  //! F(y | T = t, Z = z); zero when the cell has no mass.
  double cell_cdf(Treatment t, std::size_t z, double y) const;
  //! Density of Y given T = t, Z = z.
  double cell_density(Treatment t, std::size_t z, double y) const;

  PropensityMatrix propensity_matrix() const;
  CellTables tables(const AnalyticOptions& options = {}) const;

private:
  struct Impl;
  DgpConfig config_;
  std::unique_ptr<Impl> impl_;
};

//! Tables for an explicit propensity matrix with potential outcomes
//! independent of the potential treatments, so F(y | t, z) = F_t(y).
CellTables
fixed_propensity_tables(const std::vector<std::vector<double>>& propensity,
                        const std::vector<OutcomeModel>& outcomes,
                        std::vector<std::string> labels,
                        const AnalyticOptions& options = {});

//! Rejects designs whose declared pairs push less than min_mass of the
//! population into some treatment. Throws ConfigInvalid.
void
check_relevance(const DgpConfig& config, double min_mass = 0.01);

} // namespace ivmono
