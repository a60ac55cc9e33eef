#include "homlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homlab {

MomentSummary moments(std::span<const double> x) {
  MomentSummary s;
  s.n = x.size();
  if (s.n == 0) return s;
  const double n = static_cast<double>(s.n);
  for (double v : x) s.mean += v;
  s.mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.variance = s.n > 1 ? m2 * n / (n - 1.0) : 0.0;
  s.sd = std::sqrt(s.variance);
  if (m2 > 0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  s.se_mean = s.n > 1 ? s.sd / std::sqrt(n) : 0.0;
  s.se_skewness = std::sqrt(6.0 / n);
  s.se_kurtosis = std::sqrt(24.0 / n);
  return s;
}

double ks_asymptotic_pvalue(double lambda) {
  if (lambda < 0.02) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.d = d;
  r.p_value = ks_asymptotic_pvalue(d * std::sqrt(na * nb / (na + nb)));
  return r;
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0;
  for (double v : x) m2 += (v - mean) * (v - mean);
  return m2 / (static_cast<double>(x.size()) - 1.0);
}

double jackknife_se(std::span<const double> x, double (*stat)(std::span<const double>)) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  std::vector<double> rest(n - 1);
  std::vector<double> theta(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != k) rest[w++] = x[i];
    theta[k] = stat(rest);
  }
  double mean = 0.0;
  for (double t : theta) mean += t;
  mean /= static_cast<double>(n);
  double s = 0.0;
  for (double t : theta) s += (t - mean) * (t - mean);
  return std::sqrt(s * (static_cast<double>(n) - 1.0) / static_cast<double>(n));
}

}  // namespace homlab
