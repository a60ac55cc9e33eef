#pragma once

#include "homlab/grid.hpp"

namespace homlab {

// Fourier-weighted norms of the zero-extension of a Dirichlet grid function
// onto a 2x-padded periodic box:
//   norm(u, t)^2 = (h^d / N^d) * sum_xi (1 + |xi|^2)^t |DFT(u~)(xi)|^2,
// where u~ is u extended by zero. At t = 0 this is the grid L2 norm by
// Parseval. Instances cache the FFTW plan; not thread-safe.
class FourierNormEngine {
 public:
  explicit FourierNormEngine(const Grid& grid);
  ~FourierNormEngine();
  FourierNormEngine(const FourierNormEngine&) = delete;
  FourierNormEngine& operator=(const FourierNormEngine&) = delete;

  const Grid& grid() const { return grid_; }
  double weighted_norm(const GridFunction& u, double t);

 private:
  Grid grid_;
  int pad_n_ = 0;
  std::size_t real_size_ = 0, cplx_size_ = 0;
  std::vector<double> xi2_;  // |xi|^2 per half-spectrum entry
  std::vector<double> mult_;  // conjugate-pair multiplicity (1 or 2)
  double* rbuf_ = nullptr;
  void* cbuf_ = nullptr;
  void* plan_ = nullptr;
};

// Fractional Sobolev norm for s in (-1, 1); |s| >= 1 is rejected.
double sobolev_norm(const GridFunction& u, double s);

// Negative-order norm with weight (1 + |xi|^2)^{-s}, s in (0, 1].
double h_neg_projection_norm(const GridFunction& u, double s);

}  // namespace homlab
