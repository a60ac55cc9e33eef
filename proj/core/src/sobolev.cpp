#include "homlab/sobolev.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace homlab {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FourierNormEngine::FourierNormEngine(const Grid& grid) : grid_(grid) {
  pad_n_ = 2 * (grid.n + 1);
  const int N = pad_n_;
  const int Nh = N / 2 + 1;
  real_size_ = 1;
  for (int a = 0; a < grid.dim; ++a) real_size_ *= static_cast<std::size_t>(N);
  cplx_size_ = real_size_ / N * Nh;

  // Continuum wavenumber of padded-box mode k: 2 pi k~ / (2 extent).
  const double base = 2.0 * kPi / (2.0 * grid.extent);
  std::vector<double> xi1(N);
  for (int k = 0; k < N; ++k) {
    const int kt = k <= N / 2 ? k : k - N;
    xi1[k] = base * kt;
  }

  xi2_.resize(cplx_size_);
  mult_.resize(cplx_size_);
  if (grid.dim == 2) {
    std::size_t idx = 0;
    for (int ky = 0; ky < N; ++ky)
      for (int kx = 0; kx < Nh; ++kx, ++idx) {
        xi2_[idx] = xi1[kx] * xi1[kx] + xi1[ky] * xi1[ky];
        mult_[idx] = (kx == 0 || kx == N / 2) ? 1.0 : 2.0;
      }
  } else {
    std::size_t idx = 0;
    for (int kz = 0; kz < N; ++kz)
      for (int ky = 0; ky < N; ++ky)
        for (int kx = 0; kx < Nh; ++kx, ++idx) {
          xi2_[idx] = xi1[kx] * xi1[kx] + xi1[ky] * xi1[ky] + xi1[kz] * xi1[kz];
          mult_[idx] = (kx == 0 || kx == N / 2) ? 1.0 : 2.0;
        }
  }

  rbuf_ = fftw_alloc_real(real_size_);
  cbuf_ = fftw_alloc_complex(cplx_size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (grid.dim == 2) {
    plan_ = fftw_plan_dft_r2c_2d(N, N, rbuf_, static_cast<fftw_complex*>(cbuf_),
                                 FFTW_ESTIMATE);
  } else {
    plan_ = fftw_plan_dft_r2c_3d(N, N, N, rbuf_, static_cast<fftw_complex*>(cbuf_),
                                 FFTW_ESTIMATE);
  }
  if (!plan_) throw std::runtime_error("FourierNormEngine: FFTW plan creation failed");
}

FourierNormEngine::~FourierNormEngine() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

double FourierNormEngine::weighted_norm(const GridFunction& u, double t) {
  if (u.grid() != grid_) throw std::invalid_argument("weighted_norm: grid mismatch");
  const int n = grid_.n;
  const int N = pad_n_;
  std::fill(rbuf_, rbuf_ + real_size_, 0.0);
  // Interior node i sits at padded index i+1.
  if (grid_.dim == 2) {
    for (int j = 0; j < n; ++j) {
      const double* src = &u.values()[static_cast<std::size_t>(j) * n];
      double* dst = &rbuf_[(static_cast<std::size_t>(j) + 1) * N + 1];
      for (int i = 0; i < n; ++i) dst[i] = src[i];
    }
  } else {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        const double* src =
            &u.values()[(static_cast<std::size_t>(k) * n + j) * n];
        double* dst = &rbuf_[((static_cast<std::size_t>(k) + 1) * N +
                              (static_cast<std::size_t>(j) + 1)) *
                                 N +
                             1];
        for (int i = 0; i < n; ++i) dst[i] = src[i];
      }
  }
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* c = static_cast<fftw_complex*>(cbuf_);
  double acc = 0.0;
  for (std::size_t i = 0; i < cplx_size_; ++i) {
    const double p = c[i][0] * c[i][0] + c[i][1] * c[i][1];
    acc += mult_[i] * std::pow(1.0 + xi2_[i], t) * p;
  }
  const double scale = grid_.cell_volume() / static_cast<double>(real_size_);
  return std::sqrt(scale * acc);
}

double sobolev_norm(const GridFunction& u, double s) {
  if (!(std::abs(s) < 1.0))
    throw std::invalid_argument("sobolev_norm: s must lie in (-1, 1)");
  FourierNormEngine engine(u.grid());
  return engine.weighted_norm(u, s);
}

double h_neg_projection_norm(const GridFunction& u, double s) {
  if (!(s > 0.0) || s > 1.0)
    throw std::invalid_argument("h_neg_projection_norm: s must lie in (0, 1]");
  FourierNormEngine engine(u.grid());
  return engine.weighted_norm(u, -s);
}

}  // namespace homlab
