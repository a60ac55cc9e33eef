#include "homlab/field_stats.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "homlab/rng.hpp"

namespace homlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

CorrelationSpec empirical_autocorrelation(const std::vector<LatticeField>& realizations,
                                          int max_lag) {
  if (realizations.size() < 30)
    throw std::invalid_argument("empirical_autocorrelation: need at least 30 realizations");
  const auto& first = realizations.front();
  const int dim = first.dim;
  const int n = first.n;
  if (max_lag < 1 || max_lag > n / 4)
    throw std::invalid_argument(
        "empirical_autocorrelation: max_lag must be in [1, lattice_extent/4]");
  for (const auto& f : realizations)
    if (f.dim != dim || f.n != n || f.spacing != first.spacing)
      throw std::invalid_argument("empirical_autocorrelation: lattice mismatch");

  const int P = 2 * n;  // zero-padded box: circular correlation = linear sums
  std::size_t real_size = 1, base_size = 1;
  for (int a = 0; a < dim; ++a) {
    real_size *= static_cast<std::size_t>(P);
    base_size *= static_cast<std::size_t>(n);
  }
  const std::size_t cplx_size = real_size / P * (P / 2 + 1);

  double* rbuf = fftw_alloc_real(real_size);
  auto* cbuf = fftw_alloc_complex(cplx_size);
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (dim == 2) {
      fwd = fftw_plan_dft_r2c_2d(P, P, rbuf, cbuf, FFTW_ESTIMATE);
      inv = fftw_plan_dft_c2r_2d(P, P, cbuf, rbuf, FFTW_ESTIMATE);
    } else {
      fwd = fftw_plan_dft_r2c_3d(P, P, P, rbuf, cbuf, FFTW_ESTIMATE);
      inv = fftw_plan_dft_c2r_3d(P, P, P, cbuf, rbuf, FFTW_ESTIMATE);
    }
  }

  const int K = max_lag;
  const int W = 2 * K + 1;
  std::size_t box = 1;
  for (int a = 0; a < dim; ++a) box *= static_cast<std::size_t>(W);

  std::vector<double> mean(box, 0.0), m2(box, 0.0), table(box);
  std::vector<double> sig_samples;
  sig_samples.reserve(realizations.size());
  const double cell = std::pow(first.spacing, dim);

  auto padded_index = [&](const std::array<int, 3>& lag) {
    auto wrap = [P](int l) { return l >= 0 ? l : P + l; };
    std::size_t idx = wrap(lag[dim - 1]);
    for (int a = dim - 2; a >= 0; --a) idx = idx * P + wrap(lag[a]);
    return idx;
  };

  std::size_t count = 0;
  for (const auto& f : realizations) {
    ++count;
    std::fill(rbuf, rbuf + real_size, 0.0);
    if (dim == 2) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          rbuf[static_cast<std::size_t>(j) * P + i] =
              f.values[static_cast<std::size_t>(j) * n + i];
    } else {
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i)
            rbuf[(static_cast<std::size_t>(k) * P + j) * P + i] =
                f.values[(static_cast<std::size_t>(k) * n + j) * n + i];
    }
    fftw_execute(fwd);
    for (std::size_t i = 0; i < cplx_size; ++i) {
      const double re = cbuf[i][0], im = cbuf[i][1];
      cbuf[i][0] = re * re + im * im;
      cbuf[i][1] = 0.0;
    }
    fftw_execute(inv);
    const double fft_norm = 1.0 / static_cast<double>(real_size);

    // R_hat for this realization on the lag box, then Welford accumulation.
    double sig = 0.0;
    std::size_t bidx = 0;
    std::array<int, 3> lag{0, 0, 0};
    const int zlo = dim == 3 ? -K : 0, zhi = dim == 3 ? K : 0;
    for (lag[2] = zlo; lag[2] <= zhi; ++lag[2])
      for (lag[1] = -K; lag[1] <= K; ++lag[1])
        for (lag[0] = -K; lag[0] <= K; ++lag[0], ++bidx) {
          double overlap = 1.0, trap_w = 1.0;
          for (int a = 0; a < dim; ++a) {
            overlap *= n - std::abs(lag[a]);
            if (std::abs(lag[a]) == K) trap_w *= 0.5;
          }
          const double r = rbuf[padded_index(lag)] * fft_norm / overlap;
          table[bidx] = r;
          sig += trap_w * r;
          const double delta = r - mean[bidx];
          mean[bidx] += delta / static_cast<double>(count);
          m2[bidx] += delta * (r - mean[bidx]);
        }
    sig_samples.push_back(sig * cell);
  }

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(rbuf);
  fftw_free(cbuf);

  CorrelationSpec spec;
  spec.kind = "empirical";
  spec.max_lag_pts = K;
  spec.spacing = first.spacing;
  spec.r_hat = mean;
  spec.r_hat_se.resize(box);
  const double nr = static_cast<double>(realizations.size());
  for (std::size_t i = 0; i < box; ++i)
    spec.r_hat_se[i] = std::sqrt(m2[i] / (nr - 1.0) / nr);
  spec.variance = mean[spec.lag_index({0, 0, 0}, dim)];

  double sig_mean = 0.0;
  for (double s : sig_samples) sig_mean += s;
  sig_mean /= nr;
  double sig_var = 0.0;
  for (double s : sig_samples) sig_var += (s - sig_mean) * (s - sig_mean);
  spec.sigma2 = sig_mean;
  spec.sigma2_se = std::sqrt(sig_var / (nr - 1.0) / nr);
  return spec;
}

double log_log_slope(const std::vector<double>& dist, const std::vector<double>& value) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!(value[i] > 0) || !(dist[i] > 0)) continue;
    const double x = std::log(dist[i]), y = std::log(value[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  const double dm = static_cast<double>(m);
  return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

TailCheckReport tail_check(const CorrelationSpec& empirical,
                           const std::function<double(double)>& R_g, double V1,
                           double t_min, double c_max) {
  TailCheckReport rep;
  const int K = empirical.max_lag_pts;
  const int dim = empirical.r_hat.size() ==
                          static_cast<std::size_t>(2 * K + 1) * (2 * K + 1) * (2 * K + 1)
                      ? 3
                      : 2;
  std::vector<double> dist, rhat;
  double num = 0.0, den = 0.0;
  std::vector<std::array<double, 3>> pts;  // (|diff|, R_g^2, SE)
  std::array<int, 3> lag{0, 0, 0};
  const int zlo = dim == 3 ? -K : 0, zhi = dim == 3 ? K : 0;
  for (lag[2] = zlo; lag[2] <= zhi; ++lag[2])
    for (lag[1] = -K; lag[1] <= K; ++lag[1])
      for (lag[0] = -K; lag[0] <= K; ++lag[0]) {
        const double mag =
            empirical.spacing * std::sqrt(static_cast<double>(lag[0]) * lag[0] +
                                          static_cast<double>(lag[1]) * lag[1] +
                                          static_cast<double>(lag[2]) * lag[2]);
        if (mag < t_min || mag > K * empirical.spacing) continue;
        const std::size_t idx = empirical.lag_index(lag, dim);
        const double rg = R_g(mag);
        const double diff = std::abs(empirical.r_hat[idx] - V1 * V1 * rg);
        const double w = rg * rg;
        num += diff * w;
        den += w * w;
        pts.push_back({diff, w, std::max(empirical.r_hat_se[idx], 1e-300)});
        dist.push_back(mag);
        rhat.push_back(empirical.r_hat[idx]);
      }
  rep.window_points = static_cast<int>(pts.size());
  if (pts.empty()) {
    rep.message = "tail_check: empty window";
    return rep;
  }
  rep.fitted_C = num / den;
  double worst = -1e300;
  for (const auto& p : pts) worst = std::max(worst, (p[0] - rep.fitted_C * p[1]) / p[2]);
  rep.max_violation_se = worst;
  rep.tail_slope = log_log_slope(dist, rhat);
  rep.pass = rep.fitted_C <= c_max && rep.max_violation_se <= 3.0;
  rep.message = rep.pass ? "tail bound holds within fitted constant"
                         : "tail bound violated: |R_hat - V1^2 R_g| is not O(R_g^2)";
  return rep;
}

FourthMomentReport fourth_moment_check(
    const std::vector<LatticeField>& realizations, int n_quadruples,
    std::uint64_t seed, const std::function<double(double)>& R,
    const std::function<double(double)>& theta, double C) {
  if (realizations.size() < 200)
    throw std::invalid_argument("fourth_moment_check: need at least 200 realizations");
  const auto& first = realizations.front();
  const int dim = first.dim;
  const int n = first.n;

  FourthMomentReport rep;
  Rng rng(seed, {0x4447u});
  auto dist = [&](const std::array<int, 3>& a, const std::array<int, 3>& b) {
    double d2 = 0.0;
    for (int ax = 0; ax < dim; ++ax)
      d2 += first.spacing * first.spacing * (a[ax] - b[ax]) * (a[ax] - b[ax]);
    return std::sqrt(d2);
  };

  for (int qd = 0; qd < n_quadruples; ++qd) {
    QuadrupleStat st;
    for (auto& p : st.points) {
      for (int a = 0; a < dim; ++a)
        p[a] = static_cast<int>(rng.uniform() * n) % n;
      p[2] = dim == 3 ? p[2] : 0;
    }
    std::array<std::size_t, 4> idx{};
    for (int i = 0; i < 4; ++i) idx[i] = first.flat(st.points[i]);

    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (const auto& f : realizations) {
      const double prod = f.values[idx[0]] * f.values[idx[1]] * f.values[idx[2]] *
                          f.values[idx[3]];
      ++count;
      const double delta = prod - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (prod - mean);
    }
    const double nr = static_cast<double>(count);
    st.se = std::sqrt(m2 / (nr - 1.0) / nr);
    const double d12 = dist(st.points[0], st.points[1]);
    const double d34 = dist(st.points[2], st.points[3]);
    const double d13 = dist(st.points[0], st.points[2]);
    const double d24 = dist(st.points[1], st.points[3]);
    const double d14 = dist(st.points[0], st.points[3]);
    const double d23 = dist(st.points[1], st.points[2]);
    st.psi_hat = mean - R(d12) * R(d34);
    st.gauss_value = R(d13) * R(d24) + R(d14) * R(d23);
    st.bound = C * (theta(d13) * theta(d24) + theta(d14) * theta(d23));
    st.violated = std::abs(st.psi_hat) > st.bound + 3.0 * st.se;
    if (st.violated) ++rep.violations;
    rep.quadruples.push_back(st);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace homlab
