#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>

#include "homlab/potential.hpp"

namespace homlab {

// Exact synthesis of stationary Gaussian lattice fields by circulant
// embedding: the covariance is periodized onto an enlarged torus, its FFT
// gives the eigenvalues, and one complex FFT of scaled white noise yields two
// independent real fields with that covariance.
//
// Negative eigenvalue mass above `neg_mass_tol` (relative to total) triggers
// a retry with doubled padding; after `max_doublings` failures it is a hard
// error. Surviving negative eigenvalues below tolerance are clipped to zero
// and the clipped mass is reported, not hidden.
class CirculantEmbedding {
 public:
  using CovarianceFn = std::function<double(const std::array<int, 3>&)>;

  CirculantEmbedding(int dim, int base_n, int padding, CovarianceFn cov,
                     double neg_mass_tol = 1e-8, int max_doublings = 3);
  ~CirculantEmbedding();
  CirculantEmbedding(const CirculantEmbedding&) = delete;
  CirculantEmbedding& operator=(const CirculantEmbedding&) = delete;

  int dim() const { return dim_; }
  int base_n() const { return base_n_; }
  int torus_n() const { return torus_n_; }
  double clipped_mass_fraction() const { return clipped_fraction_; }

  // Two independent fields from one FFT (real and imaginary parts).
  void sample_pair(std::uint64_t seed, LatticeField& a, LatticeField& b);
  LatticeField sample(std::uint64_t seed);

  // Clipped eigenvalues on the full torus grid (row-major, first axis
  // fastest); the exact covariance of the sampled field is their inverse DFT.
  std::span<const double> spectrum() const { return spectrum_; }

  // Exact covariance of the synthesized field at a lag, by direct summation
  // over the spectrum. O(N^d) per call; intended for diagnostics.
  double exact_covariance(const std::array<int, 3>& lag) const;

 private:
  void build(int padding, const CovarianceFn& cov, double neg_mass_tol,
             int max_doublings);

  int dim_ = 2;
  int base_n_ = 0;
  int torus_n_ = 0;
  std::size_t torus_size_ = 0;
  double clipped_fraction_ = 0.0;
  std::vector<double> spectrum_;       // clipped eigenvalues
  std::vector<double> sqrt_spectrum_;
  void* cbuf_ = nullptr;               // fftw_complex buffer
  void* plan_ = nullptr;               // backward c2c plan
};

// Unit-variance stationary Gaussian field on the integer lattice with
// covariance R_g(x) = (1 + |x/T|^2)^{-alpha/2}, T = kappa_g^{1/alpha}:
// exact heavy tail kappa_g |x|^{-alpha}.
class GaussianLatticeSampler {
 public:
  GaussianLatticeSampler(int dim, int base_n, double alpha, double kappa_g,
                         int padding = 4);

  LatticeField sample(std::uint64_t seed) { return embedding_->sample(seed); }
  const CirculantEmbedding& embedding() const { return *embedding_; }
  double covariance(double dist) const;

 private:
  int dim_;
  double alpha_;
  double kappa_g_;
  std::unique_ptr<CirculantEmbedding> embedding_;
};

// Long-range potential sampler bound to one (grid, eps); caches the
// embedding spectrum across realizations. Nearest-lattice-node evaluation at
// y = x/eps preserves the stationary lattice law exactly.
class LongRangeSampler {
 public:
  LongRangeSampler(const PotentialModel& model, const Grid& grid, double eps);

  FieldRealization sample(std::uint64_t seed);
  const PotentialModel& model() const { return model_; }

 private:
  PotentialModel model_;
  Grid grid_;
  double eps_;
  GaussianLatticeSampler gauss_;
  std::vector<std::size_t> node_to_lattice_;
};

// int_{[-1/2,1/2]^d} |w|^{-alpha} dw (finite for alpha < d); the grid-cell
// regularization constant of the Riesz kernel.
double riesz_cell_integral(int dim, double alpha);

}  // namespace homlab
