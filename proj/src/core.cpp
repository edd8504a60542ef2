#include "ivmono/core.hpp"

#include "ivmono/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ivmono {

namespace {

void
check_finite(std::span<const double> xs, const char* what)
{
  for (double x : xs) {
    if (!std::isfinite(x))
      throw Error(ErrorKind::non_finite, fmt::format("{} contains a non-finite value", what));
  }
}

void
check_sorted(const std::vector<double>& grid, bool strict, const char* what)
{
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (strict ? !(grid[i - 1] < grid[i]) : !(grid[i - 1] <= grid[i]))
      throw Error(ErrorKind::not_strictly_increasing,
                  fmt::format("{} is not sorted at index {}", what, i));
  }
}

} // namespace

Ecdf::Ecdf(std::span<const double> samples)
{
  if (samples.empty())
    throw Error(ErrorKind::empty_sample, "cannot build an ECDF from an empty sample");
  check_finite(samples, "sample");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  n_ = sorted.size();
  const double n = static_cast<double>(n_);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Only the last of a run of ties gets a support point.
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i])
      continue;
    support_.push_back(sorted[i]);
    values_.push_back(static_cast<double>(i + 1) / n);
  }
  values_.back() = 1.0;
}

double
Ecdf::operator()(double y) const
{
  auto it = std::upper_bound(support_.begin(), support_.end(), y);
  if (it == support_.begin())
    return 0.0;
  return values_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

MonotoneCdf
Ecdf::to_monotone() const
{
  return MonotoneCdf(support_, values_);
}

Ecdf
build_ecdf(std::span<const double> samples)
{
  return Ecdf(samples);
}

MonotoneCdf::MonotoneCdf(std::vector<double> grid, std::vector<double> values)
  : grid_(std::move(grid))
  , values_(std::move(values))
{
  if (grid_.size() != values_.size())
    throw Error(ErrorKind::length_mismatch,
                fmt::format("grid has {} points but {} values", grid_.size(), values_.size()));
  check_finite(grid_, "grid");
  check_sorted(grid_, true, "grid");
}

std::size_t
MonotoneCdf::locate(double y) const
{
  auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
  if (it == grid_.begin())
    return npos;
  return static_cast<std::size_t>(it - grid_.begin()) - 1;
}

double
MonotoneCdf::operator()(double y) const
{
  if (y == inf)
    return 1.0;
  std::size_t i = locate(y);
  return i == npos ? 0.0 : values_[i];
}

std::size_t
first_index_reaching(const MonotoneCdf& cdf, double tau)
{
  const auto& v = cdf.values();
  auto it = std::lower_bound(v.begin(), v.end(), tau);
  if (it == v.end())
    return npos;
  return static_cast<std::size_t>(it - v.begin());
}

QuantileResult
generalized_inverse(const MonotoneCdf& cdf, double tau)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", tau));
  if (cdf.empty())
    throw Error(ErrorKind::empty_sample, "quantile of an empty CDF");

  const auto& grid = cdf.grid();
  const auto& v = cdf.values();
  QuantileResult out;
  std::size_t i = first_index_reaching(cdf, tau);
  if (i == npos) {
    out.index = grid.size() - 1;
    out.value = grid.back();
    out.saturated = true;
    return out;
  }
  out.index = i;
  out.value = grid[i];
  if (v[i] == tau) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == tau)
      ++j;
    if (j > i) {
      out.flat = true;
      out.flat_width = grid[j] - grid[i];
    }
  }
  return out;
}

MonotoneCdf
isotonize(std::vector<double> grid, std::span<const double> raw_values)
{
  if (grid.size() != raw_values.size())
    throw Error(ErrorKind::length_mismatch,
                fmt::format("grid has {} points but {} values", grid.size(), raw_values.size()));
  std::vector<double> values(raw_values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < raw_values.size(); ++i) {
    double r = raw_values[i];
    if (std::isnan(r))
      throw Error(ErrorKind::non_finite, fmt::format("raw CDF value {} is NaN", i));
    running = std::max(running, std::clamp(r, 0.0, 1.0));
    values[i] = running;
  }
  return MonotoneCdf(std::move(grid), std::move(values));
}

double
sorted_quantile(std::span<const double> sorted, double tau)
{
  if (sorted.empty())
    throw Error(ErrorKind::empty_sample, "quantile of an empty sample");
  const double n = static_cast<double>(sorted.size());
  // Smallest i (1-based) with i/n >= tau; the slack absorbs 0.99 * 100 = 98.999...
  double i = std::ceil(tau * n - 1e-9);
  std::size_t idx = static_cast<std::size_t>(std::clamp(i, 1.0, n));
  return sorted[idx - 1];
}

SupportWindow
trim_support(std::span<const double> samples, double trim_fraction)
{
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5))
    throw Error(ErrorKind::config_invalid,
                fmt::format("trim fraction {} is outside [0, 0.5)", trim_fraction));
  if (samples.empty())
    throw Error(ErrorKind::empty_sample, "cannot trim an empty sample");
  check_finite(samples, "sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  SupportWindow w;
  w.trim_fraction = trim_fraction;
  w.lower = sorted_quantile(sorted, trim_fraction);
  w.upper = sorted_quantile(sorted, 1.0 - trim_fraction);
  if (!(w.lower < w.upper))
    throw Error(ErrorKind::degenerate_support,
                fmt::format("support window collapses to [{}, {}]", w.lower, w.upper));
  return w;
}

CounterfactualMap::CounterfactualMap(Treatment source,
                                     Treatment target,
                                     std::vector<double> grid,
                                     std::vector<double> images)
  : source_(source)
  , target_(target)
  , grid_(std::move(grid))
  , images_(std::move(images))
{
  if (grid_.size() != images_.size())
    throw Error(ErrorKind::length_mismatch,
                fmt::format("map grid has {} points but {} images", grid_.size(), images_.size()));
  if (grid_.empty())
    throw Error(ErrorKind::empty_sample, "map grid is empty");
  check_finite(grid_, "map grid");
  check_finite(images_, "map images");
  check_sorted(grid_, true, "map grid");
  if (source_ == target_ && images_ != grid_)
    throw Error(ErrorKind::treatment_mismatch,
                fmt::format("map {}->{} must be the identity", source_, target_));
}

bool
CounterfactualMap::in_domain(double y) const
{
  return y >= grid_.front() && y <= grid_.back();
}

double
CounterfactualMap::evaluate(double y, bool& clamped) const
{
  clamped = false;
  if (is_identity())
    return y;
  if (y <= grid_.front()) {
    clamped = y < grid_.front();
    return images_.front();
  }
  if (y >= grid_.back()) {
    clamped = y > grid_.back();
    return images_.back();
  }
  auto it = std::upper_bound(grid_.begin(), grid_.end(), y);
  std::size_t hi = static_cast<std::size_t>(it - grid_.begin());
  std::size_t lo = hi - 1;
  if (grid_[lo] == y)
    return images_[lo];
  double w = (y - grid_[lo]) / (grid_[hi] - grid_[lo]);
  return images_[lo] + w * (images_[hi] - images_[lo]);
}

double
CounterfactualMap::operator()(double y) const
{
  bool clamped = false;
  return evaluate(y, clamped);
}

bool
CounterfactualMap::strictly_increasing() const
{
  for (std::size_t i = 1; i < images_.size(); ++i) {
    if (!(images_[i - 1] < images_[i]))
      return false;
  }
  return true;
}

CounterfactualMap
identity_map(Treatment treatment, std::vector<double> grid)
{
  std::vector<double> images = grid;
  return CounterfactualMap(treatment, treatment, std::move(grid), std::move(images));
}

CounterfactualMap
compose_maps(const CounterfactualMap& a, const CounterfactualMap& b)
{
  if (a.target() != b.source())
    throw Error(ErrorKind::treatment_mismatch,
                fmt::format("cannot compose {}->{} with {}->{}",
                            a.source(), a.target(), b.source(), b.target()));
  if (a.source() == b.target())
    return identity_map(a.source(), a.grid());

  if (!b.is_identity()) {
    const double lo = b.grid().front();
    const double hi = b.grid().back();
    const double slack = 1e-12 * std::max(1.0, hi - lo);
    for (double v : a.images()) {
      if (v < lo - slack || v > hi + slack)
        throw Error(ErrorKind::range_escape,
                    fmt::format("image {} of {}->{} leaves [{}, {}]", v, a.source(), a.target(), lo, hi));
    }
  }
  std::vector<double> images(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    images[i] = b(a.images()[i]);
  return CounterfactualMap(a.source(), b.target(), a.grid(), std::move(images));
}

CounterfactualMap
invert_map(const CounterfactualMap& a)
{
  if (a.is_identity())
    return a;
  if (!a.strictly_increasing())
    throw Error(ErrorKind::not_strictly_increasing,
                fmt::format("map {}->{} has non-increasing images", a.source(), a.target()));
  return CounterfactualMap(a.target(), a.source(), a.images(), a.grid());
}

std::size_t
make_strictly_increasing(std::vector<double>& values)
{
  const std::size_t n = values.size();
  if (n < 2)
    return 0;
  const std::vector<double> before = values;
  for (std::size_t i = 1; i < n; ++i)
    values[i] = std::max(values[i], values[i - 1]);

  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[j + 1] == values[i])
      ++j;
    if (j > i) {
      const std::size_t len = j - i + 1;
      if (j + 1 < n) {
        // Spread the plateau towards the next distinct value.
        const double a = values[i];
        const double b = values[j + 1];
        for (std::size_t m = 1; m < len; ++m)
          values[i + m] = a + (b - a) * static_cast<double>(m) / static_cast<double>(len);
      } else if (i > 0) {
        // Trailing plateau: spread back towards the previous distinct value.
        const double a = values[i - 1];
        const double b = values[j];
        for (std::size_t m = 0; m + 1 < len; ++m)
          values[i + m] = a + (b - a) * static_cast<double>(m + 1) / static_cast<double>(len);
      } else {
        const double step = 1e-9 * std::max(1.0, std::abs(values[i]));
        for (std::size_t m = 1; m < len; ++m)
          values[i + m] = values[i] + step * static_cast<double>(m);
      }
    }
    i = j + 1;
  }
  std::size_t changed = 0;
  for (std::size_t m = 0; m < n; ++m)
    changed += values[m] != before[m];
  return changed;
}

std::vector<double>
uniform_grid(double lower, double upper, std::size_t nodes)
{
  if (nodes < 2 || !(lower < upper))
    throw Error(ErrorKind::config_invalid,
                fmt::format("uniform grid needs >= 2 nodes on a nonempty interval, got {} on [{}, {}]",
                            nodes, lower, upper));
  std::vector<double> grid(nodes);
  const double step = (upper - lower) / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i)
    grid[i] = lower + step * static_cast<double>(i);
  grid.back() = upper;
  return grid;
}

} // namespace ivmono
