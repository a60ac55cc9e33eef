#pragma once

#include <span>
#include <vector>

namespace homlab {

struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double se_mean = 0.0;
  double se_skewness = 0.0;   // ~ sqrt(6/n)
  double se_kurtosis = 0.0;   // ~ sqrt(24/n)
};
MomentSummary moments(std::span<const double> x);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};
// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov distribution
// for the p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
double ks_asymptotic_pvalue(double lambda);

// Delete-1 jackknife standard error of a statistic of the sample.
double jackknife_se(std::span<const double> x, double (*stat)(std::span<const double>));

double sample_variance(std::span<const double> x);

}  // namespace homlab
