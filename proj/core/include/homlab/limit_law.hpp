#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "homlab/grid.hpp"
#include "homlab/operators.hpp"
#include "homlab/stats.hpp"

namespace homlab {

// Description of the limiting Gaussian field: the homogenized Green operator
// (abar, q_bar on a grid), the homogenized solution u, and either the white
// intensity sigma or the long-range pair (kappa, alpha).
struct LimitLawSpec {
  std::string kind;  // "white" | "long_range"
  Eigen::MatrixXd a_bar;
  double q_bar = 0.0;
  GridFunction u;  // homogenized solution on the sampling grid
  double sigma = 0.0;
  double kappa = 0.0;
  double alpha = 0.0;

  static LimitLawSpec white(const Eigen::MatrixXd& a_bar, double q_bar,
                            GridFunction u, double sigma);
  static LimitLawSpec long_range(const Eigen::MatrixXd& a_bar, double q_bar,
                                 GridFunction u, double kappa, double alpha);
  void validate() const;
};

// Per-realization projections (X, phi_i) of a random field onto the declared
// test functions.
struct ProjectionSample {
  std::string law_tag;  // "empirical_eps" | "limit"
  int n_phi = 0;
  std::vector<std::vector<double>> values;  // [phi][realization]

  void write_csv(const std::string& path) const;
  static ProjectionSample read_csv(const std::string& path);
};

// Samplers for the limiting fields. One homogenized solve per sample:
//   white:      X = sigma * G(u . xi h^{-d/2}),  xi iid standard normal
//   long-range: X = G(u . W),  W stationary Gaussian with covariance
//               kappa |x-y|^{-alpha}, lag-0 regularized by the exact cell
//               average of the kernel.
// Instances cache solver and embedding state; not thread-safe.
class LimitLawSampler {
 public:
  explicit LimitLawSampler(const LimitLawSpec& spec);
  ~LimitLawSampler();

  GridFunction sample(std::uint64_t seed);
  // White-noise sample with caller-provided normals (antithetic tests).
  GridFunction sample_with_noise(std::span<const double> xi);

  const LimitLawSpec& spec() const { return spec_; }

 private:
  LimitLawSpec spec_;
  std::unique_ptr<class HomogenizedOperator> op_;
  std::unique_ptr<class DirichletSolver> solver_;
  std::unique_ptr<class DstSolver> direct_;  // used when a_bar is diagonal
  std::unique_ptr<class CirculantEmbedding> noise_;
  GridFunction solve_source(const GridFunction& src);
};

std::vector<GridFunction> sample_white_limit(const LimitLawSpec& spec, int n_samples,
                                             std::uint64_t seed);
std::vector<GridFunction> sample_longrange_limit(const LimitLawSpec& spec,
                                                 int n_samples, std::uint64_t seed);

// Project fields onto test functions.
ProjectionSample project_fields(const std::vector<GridFunction>& fields,
                                const std::vector<GridFunction>& phis,
                                const std::string& law_tag);

// Limit covariance of projections:
//   white:      sigma^2 sum (u psi_i)(u psi_j) h^d
//   long-range: kappa sum_{y,z} (u psi_i)(y) (u psi_j)(z) |y-z|^{-alpha} h^{2d},
// diagonal cell replaced by its exact cell integral; evaluated with an FFT
// convolution. psi_i = G phi_i via the homogenized solve.
double covariance_quadrature(const LimitLawSpec& spec, const GridFunction& phi_i,
                             const GridFunction& phi_j);
Eigen::MatrixXd covariance_matrix_quadrature(const LimitLawSpec& spec,
                                             const std::vector<GridFunction>& phis);

// Distribution comparison per test function: two-sample KS (asymptotic
// p-values), variance ratio with jackknife CI, standardized skewness and
// excess kurtosis of the empirical sample.
struct ComparisonThresholds {
  double ks_p_min = 0.01;
  double var_ratio_lo = 0.8;
  double var_ratio_hi = 1.25;
  double max_abs_skewness = 0.3;
  double max_abs_kurtosis = 0.6;
};
struct ProjectionComparison {
  int phi_index = 0;
  bool degenerate = false;
  double ks_d = 0.0;
  double ks_p = 0.0;
  double var_ratio = 0.0;
  double var_ratio_lo = 0.0;  // 95% jackknife CI
  double var_ratio_hi = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool pass = false;
};
struct DistributionReport {
  std::vector<ProjectionComparison> entries;
  bool pass = false;
  std::string to_json() const;
};
DistributionReport compare_distributions(const ProjectionSample& empirical,
                                         const ProjectionSample& limit,
                                         const ComparisonThresholds& thresholds = {});

}  // namespace homlab
