#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ivmono::stats {

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

//! sqrt(log(2/delta) / (2n)): sup-norm deviation bound of an ECDF that holds
//! with probability at least 1 - delta.
double dkw_bound(double n, double delta = 0.01);

double mean(std::span<const double> xs);
//! Sample standard deviation with the n - 1 denominator.
double stddev(std::span<const double> xs);

//! Two-sample Kolmogorov-Smirnov distance. Inputs need not be sorted.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

//! One-sample distance to the Uniform(0, 1) CDF.
double ks_uniform(std::span<const double> xs);

//! Five-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre5
{
  static constexpr std::array<double, 5> nodes{
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640
  };
  static constexpr std::array<double, 5> weights{
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891
  };
};

} // namespace ivmono::stats
