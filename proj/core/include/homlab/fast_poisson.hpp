#pragma once

#include <array>
#include <span>
#include <vector>

#include "homlab/grid.hpp"

namespace homlab {

// Direct solver for  -sum_a c_a d^2_a u + q0 u = b  with zero Dirichlet data,
// diagonalized by the 2d/3d discrete sine transform (DST-I). Exact for
// separable constant coefficients; elsewhere it serves as the SPD
// preconditioner for conjugate gradients.
//
// Instances hold FFTW plans and buffers and are not thread-safe; use one
// instance per thread.
class DstSolver {
 public:
  DstSolver(const Grid& grid, std::array<double, 3> coeff, double q0);
  ~DstSolver();
  DstSolver(const DstSolver&) = delete;
  DstSolver& operator=(const DstSolver&) = delete;

  const Grid& grid() const { return grid_; }
  void solve(std::span<const double> b, std::span<double> x);

 private:
  Grid grid_;
  std::vector<double> eig_inv_;
  double* buf_ = nullptr;
  void* plan_ = nullptr;  // fftw_plan; DST-I is its own inverse up to scaling
};

// Preconditioner for the periodic cell problem: inverts the constant-mean
// coefficient operator on the m^d torus via real FFT, with the constant mode
// projected out (the cell operator is singular on constants).
class PeriodicFftPreconditioner {
 public:
  PeriodicFftPreconditioner(int dim, int m, std::array<double, 3> coeff,
                            double cell_h);
  ~PeriodicFftPreconditioner();
  PeriodicFftPreconditioner(const PeriodicFftPreconditioner&) = delete;
  PeriodicFftPreconditioner& operator=(const PeriodicFftPreconditioner&) = delete;

  void apply(std::span<const double> r, std::span<double> z);

 private:
  int dim_ = 2;
  int m_ = 0;
  std::size_t real_size_ = 0, cplx_size_ = 0;
  std::vector<double> eig_inv_;
  double* rbuf_ = nullptr;
  void* cbuf_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

}  // namespace homlab
