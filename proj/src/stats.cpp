#include "ivmono/stats.hpp"

#include "ivmono/error.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

namespace ivmono::stats {

namespace {
const boost::math::normal_distribution<double> standard_normal{};
}

double
normal_cdf(double x)
{
  if (x == -std::numeric_limits<double>::infinity())
    return 0.0;
  if (x == std::numeric_limits<double>::infinity())
    return 1.0;
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double
normal_pdf(double x)
{
  if (!std::isfinite(x))
    return 0.0;
  return boost::math::pdf(standard_normal, x);
}

double
normal_quantile(double p)
{
  if (p <= 0.0)
    return -std::numeric_limits<double>::infinity();
  if (p >= 1.0)
    return std::numeric_limits<double>::infinity();
  return boost::math::quantile(standard_normal, p);
}

double
dkw_bound(double n, double delta)
{
  if (n <= 0.0)
    return 1.0;
  return std::sqrt(std::log(2.0 / delta) / (2.0 * n));
}

double
mean(std::span<const double> xs)
{
  if (xs.empty())
    throw Error(ErrorKind::empty_sample, "mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double
stddev(std::span<const double> xs)
{
  if (xs.size() < 2)
    throw Error(ErrorKind::too_few_samples, "standard deviation needs at least two samples");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs)
    ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double
ks_two_sample(std::span<const double> a, std::span<const double> b)
{
  if (a.empty() || b.empty())
    throw Error(ErrorKind::empty_sample, "KS distance needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j]))
      x = sa[i];
    else
      x = sb[j];
    while (i < sa.size() && sa[i] == x)
      ++i;
    while (j < sb.size() && sb[j] == x)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double
ks_uniform(std::span<const double> xs)
{
  if (xs.empty())
    throw Error(ErrorKind::empty_sample, "KS distance of an empty sample");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double u = std::clamp(s[i], 0.0, 1.0);
    d = std::max({ d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n });
  }
  return d;
}

} // namespace ivmono::stats
