#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ivmono {

using Treatment = std::size_t;

inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

class MonotoneCdf;

//! Empirical distribution function of a finite sample (right-continuous step
//! convention, ties merged into one support point).
class Ecdf
{
public:
  explicit Ecdf(std::span<const double> samples);

  double operator()(double y) const;

  const std::vector<double>& support_points() const { return support_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t sample_size() const { return n_; }

  MonotoneCdf to_monotone() const;

private:
  std::vector<double> support_;
  std::vector<double> values_;
  std::size_t n_ = 0;
};

Ecdf
build_ecdf(std::span<const double> samples);

//! Nondecreasing step CDF tabulated on a sorted grid. Between grid points the
//! value of the nearest grid point to the left is used; below the grid the
//! value is 0, and at +inf it is 1.
class MonotoneCdf
{
public:
  MonotoneCdf() = default;
  MonotoneCdf(std::vector<double> grid, std::vector<double> values);

  double operator()(double y) const;

  //! Index of the last grid point <= y, or npos when y is below the grid.
  std::size_t locate(double y) const;

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return grid_.size(); }
  bool empty() const { return grid_.empty(); }

private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

//! Smallest grid index whose value reaches tau, or npos when none does.
//! No range check on tau: tau <= 0 yields index 0.
std::size_t
first_index_reaching(const MonotoneCdf& cdf, double tau);

struct QuantileResult
{
  double value = 0.0;
  std::size_t index = 0;
  bool saturated = false;
  //! The quantile set {y : F(y) = tau} contains more than one grid point.
  bool flat = false;
  double flat_width = 0.0;
};

//! inf{y on the grid : F(y) >= tau}; falls back to the last grid point with
//! saturated = true when tau is never reached.
QuantileResult
generalized_inverse(const MonotoneCdf& cdf, double tau);

//! Running maximum of raw_values clipped to [0, 1].
MonotoneCdf
isotonize(std::vector<double> grid, std::span<const double> raw_values);

struct SupportWindow
{
  double lower = 0.0;
  double upper = 0.0;
  double trim_fraction = 0.0;

  bool contains(double y) const { return y >= lower && y <= upper; }
};

//! Window between the inf-convention empirical trim and 1 - trim quantiles.
SupportWindow
trim_support(std::span<const double> samples, double trim_fraction);

//! Empirical inf-quantile of an already sorted sample.
double
sorted_quantile(std::span<const double> sorted, double tau);

//! Tabulated map y -> phi_{s,t}(y), piecewise linear between grid nodes.
class CounterfactualMap
{
public:
  CounterfactualMap() = default;
  CounterfactualMap(Treatment source,
                    Treatment target,
                    std::vector<double> grid,
                    std::vector<double> images);

  Treatment source() const { return source_; }
  Treatment target() const { return target_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& images() const { return images_; }
  std::size_t size() const { return grid_.size(); }

  bool is_identity() const { return source_ == target_; }
  bool in_domain(double y) const;

  //! Evaluates the map, clamping to the endpoint images outside the grid.
  double operator()(double y) const;

  //! Same as operator() but reports whether clamping occurred.
  double evaluate(double y, bool& clamped) const;

  bool strictly_increasing() const;

private:
  Treatment source_ = 0;
  Treatment target_ = 0;
  std::vector<double> grid_;
  std::vector<double> images_;
};

CounterfactualMap
identity_map(Treatment treatment, std::vector<double> grid);

//! b o a, tabulated on a's grid. Requires a.target() == b.source().
CounterfactualMap
compose_maps(const CounterfactualMap& a, const CounterfactualMap& b);

//! Swaps grid and images. Requires strictly increasing images.
CounterfactualMap
invert_map(const CounterfactualMap& a);

//! Repairs a nondecreasing sequence into a strictly increasing one by
//! spreading each plateau linearly towards the next distinct value. Returns
//! the number of entries that were changed.
std::size_t
make_strictly_increasing(std::vector<double>& values);

std::vector<double>
uniform_grid(double lower, double upper, std::size_t nodes);

} // namespace ivmono
