#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/rational.hpp"
#include "ivmono/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ivmono {

enum class SignStatus
{
  found,
  none,      //!< every difference is clearly signed but no single one opposes the rest
  ambiguous, //!< uniqueness fails because some differences are within the threshold
};

const char* to_string(SignStatus s);

struct SignDetection
{
  InstrumentPair pair;
  SignStatus status = SignStatus::none;
  Treatment treatment = 0; //!< meaningful when status == found
  //! p_t(first) - p_t(second) per treatment.
  std::vector<double> differences;
  std::vector<double> thresholds;
  std::vector<Direction> directions;
  //! Smallest clearly nonzero |difference|; used to rank pairs.
  double score = 0.0;
};

//! Differences within the threshold count as zero. On analytic matrices the
//! threshold is eta itself; on estimated ones it is max(eta, 3 standard
//! errors of the difference).
std::vector<SignDetection>
detect_sign_treatments(const PropensityMatrix& p, const std::vector<InstrumentPair>& pairs, double eta);

struct Assumption3Result
{
  bool satisfied = false;
  //! Indices into the detections, one per distinct sign treatment, ordered
  //! by sign treatment.
  std::vector<std::size_t> lambda_star;
  std::string reason;
};

Assumption3Result
check_assumption3(const std::vector<SignDetection>& detections, std::size_t k);

//! Monotonicity spec carrying the detected directions of every pair.
MonotonicitySpec
spec_from_detections(const std::vector<SignDetection>& detections, const Assumption3Result& a3);

//! All ordered pairs (a, b) with a > b.
std::vector<InstrumentPair>
all_pairs(std::size_t instruments);

//! Pi_z(y) = sum_t F(y_t | t, z) p_t(z) - tau, one entry per z.
std::vector<double>
moment_residual(const CellTables& tables, std::span<const double> y, double tau);

struct JacobianInput
{
  //! f(y | T = t, Z = z).
  std::function<double(Treatment, std::size_t, double)> density;
  PropensityMatrix propensity;
};

struct JacobianResult
{
  double direct = 0.0;
  //! (prod_t f_t(y_t)) * det(P), with f_t read at the first instrument value.
  double factored = 0.0;
  double propensity_determinant = 0.0;
  //! Densities agree across instrument values, so factored is exact.
  bool instrument_independent = false;
};

JacobianResult
jacobian_determinant(const JacobianInput& input, std::span<const double> y);

//! Floating point determinant by partial-pivot elimination.
double
determinant(std::vector<std::vector<double>> m);

//! Exact determinant of a propensity matrix given as decimal strings.
Rational
exact_propensity_determinant(const std::vector<std::vector<std::string>>& entries);

//! Gaussian kernel estimate with bandwidth 1.06 * sd * n^(-1/5).
double
kernel_density(std::span<const double> samples, double y);

double
silverman_bandwidth(std::span<const double> samples);

} // namespace ivmono
