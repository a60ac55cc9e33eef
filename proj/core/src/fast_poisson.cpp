#include "homlab/fast_poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace homlab {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;

// FFTW plan creation/destruction is not thread-safe; execution of distinct
// plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

DstSolver::DstSolver(const Grid& grid, std::array<double, 3> coeff, double q0)
    : grid_(grid) {
  const int n = grid.n;
  const double h = grid.h();
  const std::size_t size = grid.num_nodes();
  eig_inv_.resize(size);

  // 1-d eigenvalues of the second difference under DST-I: index k = 0..n-1
  // maps to mode k+1, eigenvalue (2 - 2 cos(pi (k+1)/(n+1)))/h^2.
  std::vector<double> omega(n);
  for (int k = 0; k < n; ++k)
    omega[k] = (2.0 - 2.0 * std::cos(kPi * (k + 1) / (n + 1))) / (h * h);

  // DST-I applied forward and back multiplies by (2(n+1))^d.
  double norm = 1.0;
  for (int a = 0; a < grid.dim; ++a) norm *= 2.0 * (n + 1);

  if (grid.dim == 2) {
    std::size_t idx = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++idx)
        eig_inv_[idx] = 1.0 / ((coeff[0] * omega[i] + coeff[1] * omega[j] + q0) * norm);
  } else {
    std::size_t idx = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i, ++idx)
          eig_inv_[idx] = 1.0 / ((coeff[0] * omega[i] + coeff[1] * omega[j] +
                                  coeff[2] * omega[k] + q0) *
                                 norm);
  }

  buf_ = fftw_alloc_real(size);
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (grid.dim == 2) {
    plan_ = fftw_plan_r2r_2d(n, n, buf_, buf_, FFTW_RODFT00, FFTW_RODFT00,
                             FFTW_ESTIMATE);
  } else {
    plan_ = fftw_plan_r2r_3d(n, n, n, buf_, buf_, FFTW_RODFT00, FFTW_RODFT00,
                             FFTW_RODFT00, FFTW_ESTIMATE);
  }
  if (!plan_) throw std::runtime_error("DstSolver: FFTW plan creation failed");
}

DstSolver::~DstSolver() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(buf_);
}

void DstSolver::solve(std::span<const double> b, std::span<double> x) {
  const std::size_t size = eig_inv_.size();
  if (b.size() != size || x.size() != size)
    throw std::invalid_argument("DstSolver::solve: size mismatch");
  for (std::size_t i = 0; i < size; ++i) buf_[i] = b[i];
  fftw_execute(static_cast<fftw_plan>(plan_));
  for (std::size_t i = 0; i < size; ++i) buf_[i] *= eig_inv_[i];
  fftw_execute(static_cast<fftw_plan>(plan_));
  for (std::size_t i = 0; i < size; ++i) x[i] = buf_[i];
}

PeriodicFftPreconditioner::PeriodicFftPreconditioner(int dim, int m,
                                                     std::array<double, 3> coeff,
                                                     double cell_h)
    : dim_(dim), m_(m) {
  real_size_ = 1;
  for (int a = 0; a < dim; ++a) real_size_ *= static_cast<std::size_t>(m);
  cplx_size_ = real_size_ / m * (m / 2 + 1);
  const double inv_h2 = 1.0 / (cell_h * cell_h);

  std::vector<double> omega(m);
  for (int k = 0; k < m; ++k)
    omega[k] = (2.0 - 2.0 * std::cos(2.0 * kPi * k / m)) * inv_h2;

  eig_inv_.resize(cplx_size_);
  const double norm = static_cast<double>(real_size_);
  const int mh = m / 2 + 1;
  if (dim == 2) {
    std::size_t idx = 0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < mh; ++i, ++idx) {
        const double lam = coeff[0] * omega[i] + coeff[1] * omega[j];
        eig_inv_[idx] = lam > 0 ? 1.0 / (lam * norm) : 0.0;
      }
  } else {
    std::size_t idx = 0;
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < mh; ++i, ++idx) {
          const double lam =
              coeff[0] * omega[i] + coeff[1] * omega[j] + coeff[2] * omega[k];
          eig_inv_[idx] = lam > 0 ? 1.0 / (lam * norm) : 0.0;
        }
  }

  rbuf_ = fftw_alloc_real(real_size_);
  cbuf_ = fftw_alloc_complex(cplx_size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (dim == 2) {
    plan_fwd_ = fftw_plan_dft_r2c_2d(m, m, rbuf_, static_cast<fftw_complex*>(cbuf_),
                                     FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_2d(m, m, static_cast<fftw_complex*>(cbuf_), rbuf_,
                                     FFTW_ESTIMATE);
  } else {
    plan_fwd_ = fftw_plan_dft_r2c_3d(m, m, m, rbuf_,
                                     static_cast<fftw_complex*>(cbuf_), FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_3d(m, m, m, static_cast<fftw_complex*>(cbuf_),
                                     rbuf_, FFTW_ESTIMATE);
  }
  if (!plan_fwd_ || !plan_inv_)
    throw std::runtime_error("PeriodicFftPreconditioner: FFTW plan creation failed");
}

PeriodicFftPreconditioner::~PeriodicFftPreconditioner() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

void PeriodicFftPreconditioner::apply(std::span<const double> r,
                                      std::span<double> z) {
  for (std::size_t i = 0; i < real_size_; ++i) rbuf_[i] = r[i];
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  auto* c = static_cast<fftw_complex*>(cbuf_);
  for (std::size_t i = 0; i < cplx_size_; ++i) {
    c[i][0] *= eig_inv_[i];
    c[i][1] *= eig_inv_[i];
  }
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  for (std::size_t i = 0; i < real_size_; ++i) z[i] = rbuf_[i];
}

}  // namespace homlab
