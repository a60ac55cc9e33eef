#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homlab/corrector.hpp"
#include "homlab/grid.hpp"
#include "homlab/potential.hpp"
#include "homlab/torus_field.hpp"

namespace homlab {

struct SweepConfig {
  Grid grid;
  TorusField A;
  PotentialModel model = PotentialModel::short_range(2, 1.0, 2.0);
  std::vector<double> eps_list;  // descending dyadic, 1/eps integer
  int n_realizations = 50;
  int n_neumann = 100;  // realizations carrying Neumann-term records
  GridFunction source;
  std::vector<GridFunction> test_functions;
  double s_diag = 0.25;
  std::uint64_t base_seed = 1;
  double cg_tol = 1e-10;
  bool common_random_numbers = false;
  int min_cells_per_period = 8;
  int jobs = 1;
  std::optional<EffectiveModel> effective;  // computed from A when absent

  // Enforces the SweepConfig invariants: n_realizations >= 50, descending
  // eps with integer 1/eps aligned to the grid, h <= eps/min_cells_per_period.
  void validate() const;
};

struct EpsRecord {
  double eps = 0.0;
  int n_realizations = 0;
  int n_neumann = 0;
  std::vector<std::uint64_t> seeds;

  double periodic_error = 0.0;   // ||v_eps - u||_L2 (deterministic)
  double mean_error = 0.0;       // ||E_hat u_eps - u||_L2

  double energy_fluct_mean = 0.0;  // E_hat ||u - E_loo u||_L2
  double energy_fluct_se = 0.0;
  double w_norm_mean = 0.0;  // E_hat ||G_eps nu v||_L2
  double w_norm_se = 0.0;
  double second_centered_mean = 0.0;  // E_hat ||t2 - E_loo t2||_L2
  double second_centered_se = 0.0;
  double residual_norm_mean = 0.0;  // E_hat ||(u - v) + t1 - t2||_L2
  double hs_diag_mean = 0.0;        // E_hat ||eps^-gamma G nu v||_{H^s}^2
  double hs_diag_se = 0.0;
  double identity_residual = 0.0;  // Neumann series identity check, scaled

  // Raw pairings (u - E_loo u, phi_i), [phi][realization].
  std::vector<std::vector<double>> pairings;

  bool failed = false;
  std::string error;
};

struct SweepResult {
  int dim = 2;
  double fluct_exponent = 0.0;   // d/2 (short-range) or alpha/2 (long-range)
  double weak_exponent = 0.0;    // d or alpha: variance scaling of pairings
  double s_diag = 0.25;
  double sigma2 = 0.0;           // short-range intensity (0 for long-range)
  double kappa = 0.0;            // long-range constant (0 for short-range)
  std::uint64_t base_seed = 0;
  std::vector<EpsRecord> records;

  std::string to_json() const;              // summary without pairings
  void write_pairings_csv(const std::string& path) const;
};

// Monte-Carlo sweep over eps: per realization samples q, solves the
// oscillatory problem, and accumulates fluctuation statistics. The ensemble
// mean enters through exact leave-one-out averages; all statistics pivot on
// the first realization so that a deterministic potential yields exactly
// zero fluctuations. Solver failures abort the eps level but keep its
// partial record.
SweepResult run_sweep(const SweepConfig& cfg);

// One-realization Neumann decomposition:
//   u - v = -G nu v + G nu G nu v + G nu G nu (u - v).
struct NeumannParts {
  GridFunction v;         // G_eps f (homogenized potential)
  GridFunction w;         // -G_eps nu v (leading corrector term)
  GridFunction second;    // G_eps nu G_eps nu v
  GridFunction residual;  // (u - v) - w - second
  double identity_residual = 0.0;  // ||residual - G nu G nu (u-v)|| / scale
};
NeumannParts neumann_decomposition(const TorusField& A, double eps, double q_bar,
                                   const GridFunction& f, const GridFunction& nu,
                                   double tol = 1e-10);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> points;  // (log eps, log value)
};
// Ordinary least squares on (log eps, log value); requires >= 3 points and
// positive values.
ScalingFit fit_scaling(const std::vector<double>& values,
                       const std::vector<double>& eps_list);

struct TightnessReport {
  double s = 0.0;
  std::vector<double> per_eps;  // E_hat ||eps^-gamma G nu v||_{H^s}^2
  double ratio = 0.0;           // max/min across the sweep
};
TightnessReport tightness_diagnostic(const SweepResult& sweep);

struct WeakPairingStats {
  std::vector<double> variance;         // per eps
  std::vector<double> variance_se;      // jackknife
  std::vector<double> scaled_variance;  // eps^{-weak_exponent} * variance
  std::vector<double> scaled_variance_se;
  std::vector<double> skewness;
  std::vector<double> sd;
};
WeakPairingStats weak_pairing_stats(const SweepResult& sweep, int phi_index);

}  // namespace homlab
