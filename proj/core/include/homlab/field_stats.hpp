#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "homlab/potential.hpp"

namespace homlab {

// Empirical autocorrelation over realizations and lattice translations:
//   R_hat(lag) = avg_r avg_y nu(y + lag) nu(y),
// with per-lag standard errors from the across-realization scatter and
// sigma2_hat the trapezoidal integral of R_hat over the max_lag ball.
// Inputs must be mean-zero fields (nu, not q) on a common lattice; at least
// 30 realizations; max_lag (in lattice points) above a quarter of the
// lattice extent is rejected (wraparound contamination).
CorrelationSpec empirical_autocorrelation(const std::vector<LatticeField>& realizations,
                                          int max_lag);

// Heavy-tail inheritance check: fits C in |R_hat - V1^2 R_g| <= C R_g^2 over
// lattice lags |x| in [t_min, extent/4] and reports the worst deviation in SE
// units. Diagnostic only; nothing throws.
struct TailCheckReport {
  double fitted_C = 0.0;
  double max_violation_se = 0.0;  // worst (|diff| - C R_g^2) / SE
  int window_points = 0;
  double tail_slope = 0.0;        // log-log slope of R_hat over the window
  bool pass = false;
  std::string message;
};
TailCheckReport tail_check(const CorrelationSpec& empirical,
                           const std::function<double(double)>& R_g, double V1,
                           double t_min = 5.0, double c_max = 10.0);

// Fourth-moment diagnostic: for random point quadruples, the Monte Carlo
// estimate of Psi = E[nu1 nu2 nu3 nu4] - R(x1-x2) R(x3-x4) is tested against
// the pair bound C (theta13 theta24 + theta14 theta23) + 3 SE.
struct QuadrupleStat {
  std::array<std::array<int, 3>, 4> points{};
  double psi_hat = 0.0;
  double se = 0.0;
  double gauss_value = 0.0;  // R13 R24 + R14 R23 (the Isserlis value)
  double bound = 0.0;
  bool violated = false;
};
struct FourthMomentReport {
  std::vector<QuadrupleStat> quadruples;
  int violations = 0;
  bool pass = false;
};
FourthMomentReport fourth_moment_check(
    const std::vector<LatticeField>& realizations, int n_quadruples,
    std::uint64_t seed, const std::function<double(double)>& R,
    const std::function<double(double)>& theta, double C = 1.0);

// Least-squares slope of log(value) against log(dist); shared by the tail
// validators.
double log_log_slope(const std::vector<double>& dist, const std::vector<double>& value);

}  // namespace homlab
