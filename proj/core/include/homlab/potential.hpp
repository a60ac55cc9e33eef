#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homlab/grid.hpp"
#include "homlab/hermite.hpp"

namespace homlab {

// Scalar field sampled on a uniform lattice with given spacing, in the
// unit-scale coordinates y = x/eps of the potential law. Used by the field
// diagnostics, which are grid-agnostic.
struct LatticeField {
  int dim = 2;
  int n = 0;          // points per axis
  double spacing = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::size_t flat(const std::array<int, 3>& k) const {
    std::size_t idx = k[dim - 1];
    for (int a = dim - 2; a >= 0; --a) idx = idx * n + k[a];
    return idx;
  }
};

struct CorrelationSpec {
  std::string kind;       // "short_range" | "long_range" | "empirical"
  double variance = 0.0;  // R(0)
  double sigma2 = 0.0;    // int R  (short-range intensity)
  double V1 = 0.0;        // E[g phi(g)]  (long-range)
  double kappa = 0.0;     // V1^2 * kappa_g (long-range tail constant)
  // Empirical table (filled by empirical_autocorrelation): R_hat on the
  // centered lag box [-K..K]^d with the field's spacing.
  int max_lag_pts = 0;
  double spacing = 1.0;
  std::vector<double> r_hat;
  std::vector<double> r_hat_se;
  double sigma2_se = 0.0;

  std::size_t lag_index(const std::array<int, 3>& lag, int dim) const;
  void write_csv(const std::string& path) const;  // columns: lag, R_hat, SE
};

// Declarative description of the random potential law q = q_bar + nu.
class PotentialModel {
 public:
  // Short-range: nu(y) = c * sum_k (U_k - 1/2) B((y-k)/r) over the integer
  // lattice, iid uniform U_k, smooth bump B supported in the unit ball. The
  // default amplitude is the largest c with q = q_bar + nu in [0, M] surely
  // (no clipping); target_sd overrides it, subject to the 0.1% clipping
  // budget at sampling time.
  static PotentialModel short_range(int dim, double q_bar, double M,
                                    double bump_radius = 1.0,
                                    std::optional<double> target_sd = std::nullopt);

  // Long-range: nu = phi(g) with g a unit-variance stationary Gaussian field
  // with covariance R_g(x) = (1 + |x/T|^2)^{-alpha/2}, T = kappa_g^{1/alpha},
  // so the tail is exactly kappa_g |x|^{-alpha}.
  static PotentialModel long_range(int dim, double q_bar, double M, double alpha,
                                   double kappa_g, PhiDescriptor phi);

  const std::string& kind() const { return kind_; }
  bool is_short_range() const { return kind_ == "short_range"; }
  int dim() const { return dim_; }
  double q_bar() const { return q_bar_; }
  double M() const { return M_; }
  double bump_radius() const { return bump_radius_; }
  double amplitude() const { return amplitude_; }
  double alpha() const { return alpha_; }
  double kappa_g() const { return kappa_g_; }
  const PhiDescriptor& phi() const { return phi_; }

  // Analytic statistics of nu.
  double variance() const;
  double sigma2() const;                  // short-range: c^2/12 (int B_r)^2
  double covariance_g(double dist) const; // long-range R_g at lattice distance
  double analytic_R(double dist) const;   // stationary autocorrelation of nu
  CorrelationSpec correlation() const;

  // Gate for use as a potential in solves: bounds inside [0, M]; long-range
  // models must pass the Hermite rank-one gate.
  void validate_for_sampling() const;

 private:
  std::string kind_;
  int dim_ = 2;
  double q_bar_ = 0.0;
  double M_ = 0.0;
  // short-range
  double bump_radius_ = 1.0;
  double amplitude_ = 0.0;
  // long-range
  double alpha_ = 0.0;
  double kappa_g_ = 1.0;
  PhiDescriptor phi_ = PhiDescriptor::make("tanh");
};

// One sampled potential: q(x/eps) at the domain nodes.
struct FieldRealization {
  GridFunction q;
  std::uint64_t seed = 0;
  double eps = 0.0;
  double q_bar = 0.0;
  std::size_t clipped = 0;

  GridFunction nu() const;  // q - q_bar
};

// Samplers. Reproducible: identical (model, grid, eps, seed) gives identical
// values bit for bit; lattice values are derived pointwise from

// counter-style per-site streams, so evaluation order never matters.
FieldRealization sample_short_range(const PotentialModel& model, const Grid& grid,
                                    double eps, std::uint64_t seed);
FieldRealization sample_long_range(const PotentialModel& model, const Grid& grid,
                                   double eps, std::uint64_t seed);
FieldRealization sample_potential(const PotentialModel& model, const Grid& grid,
                                  double eps, std::uint64_t seed);

// nu on an n^d lattice with the given spacing (unit-scale coordinates), for
// the statistical validators.
LatticeField sample_short_range_lattice(const PotentialModel& model, int n,
                                        double spacing, std::uint64_t seed);

// Bump profile helpers (exposed for the self-convolution oracle in tests).
double bump_value(double rho);              // B on [0,1), 0 outside
double bump_integral(int dim);              // int B
double bump_square_integral(int dim);       // int B^2
double bump_overlap_sup(int dim, double r); // sup_y sum_k B((y-k)/r)

}  // namespace homlab
