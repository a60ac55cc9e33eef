#include "homlab/gaussian_lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "homlab/rng.hpp"

namespace homlab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

CirculantEmbedding::CirculantEmbedding(int dim, int base_n, int padding,
                                       CovarianceFn cov, double neg_mass_tol,
                                       int max_doublings)
    : dim_(dim), base_n_(base_n) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("CirculantEmbedding: dim must be 2 or 3");
  if (base_n < 2) throw std::invalid_argument("CirculantEmbedding: base_n too small");
  if (padding < 2) throw std::invalid_argument("CirculantEmbedding: padding must be >= 2");
  build(padding, cov, neg_mass_tol, max_doublings);
}

CirculantEmbedding::~CirculantEmbedding() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(cbuf_);
}

void CirculantEmbedding::build(int padding, const CovarianceFn& cov,
                               double neg_mass_tol, int max_doublings) {
  for (int attempt = 0;; ++attempt) {
    const int N = base_n_ * padding;
    torus_n_ = N;
    torus_size_ = 1;
    for (int a = 0; a < dim_; ++a) torus_size_ *= static_cast<std::size_t>(N);

    // Periodized covariance: signed torus distance per axis.
    auto* buf = fftw_alloc_complex(torus_size_);
    auto signed_dist = [N](int k) { return k <= N / 2 ? k : k - N; };
    std::size_t idx = 0;
    if (dim_ == 2) {
      for (int ky = 0; ky < N; ++ky)
        for (int kx = 0; kx < N; ++kx, ++idx) {
          buf[idx][0] = cov({signed_dist(kx), signed_dist(ky), 0});
          buf[idx][1] = 0.0;
        }
    } else {
      for (int kz = 0; kz < N; ++kz)
        for (int ky = 0; ky < N; ++ky)
          for (int kx = 0; kx < N; ++kx, ++idx) {
            buf[idx][0] = cov({signed_dist(kx), signed_dist(ky), signed_dist(kz)});
            buf[idx][1] = 0.0;
          }
    }

    fftw_plan fwd;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fwd = dim_ == 2 ? fftw_plan_dft_2d(N, N, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE)
                      : fftw_plan_dft_3d(N, N, N, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(fwd);
    }

    double total = 0.0, negative = 0.0;
    spectrum_.resize(torus_size_);
    for (std::size_t i = 0; i < torus_size_; ++i) {
      const double lam = buf[i][0];  // even symmetry makes the spectrum real
      spectrum_[i] = lam;
      total += std::abs(lam);
      if (lam < 0) negative += -lam;
    }
    fftw_free(buf);

    if (negative <= neg_mass_tol * total) {
      clipped_fraction_ = total > 0 ? negative / total : 0.0;
      break;
    }
    if (attempt >= max_doublings)
      throw std::runtime_error(
          "CirculantEmbedding: negative eigenvalue mass persists after padding "
          "doublings (insufficient embedding)");
    padding *= 2;
  }

  sqrt_spectrum_.resize(torus_size_);
  for (std::size_t i = 0; i < torus_size_; ++i)
    sqrt_spectrum_[i] = spectrum_[i] > 0 ? std::sqrt(spectrum_[i]) : 0.0;
  for (double& lam : spectrum_)
    if (lam < 0) lam = 0.0;

  cbuf_ = fftw_alloc_complex(torus_size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  const int N = torus_n_;
  plan_ = dim_ == 2
              ? fftw_plan_dft_2d(N, N, static_cast<fftw_complex*>(cbuf_),
                                 static_cast<fftw_complex*>(cbuf_), FFTW_BACKWARD,
                                 FFTW_ESTIMATE)
              : fftw_plan_dft_3d(N, N, N, static_cast<fftw_complex*>(cbuf_),
                                 static_cast<fftw_complex*>(cbuf_), FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
  if (!plan_) throw std::runtime_error("CirculantEmbedding: FFTW plan creation failed");
}

void CirculantEmbedding::sample_pair(std::uint64_t seed, LatticeField& a,
                                     LatticeField& b) {
  auto* c = static_cast<fftw_complex*>(cbuf_);
  Rng rng(seed, {0xC19CUL});
  for (std::size_t i = 0; i < torus_size_; ++i) {
    const double s = sqrt_spectrum_[i];
    c[i][0] = s * rng.normal();
    c[i][1] = s * rng.normal();
  }
  fftw_execute(static_cast<fftw_plan>(plan_));

  const double scale = 1.0 / std::sqrt(static_cast<double>(torus_size_));
  auto extract = [&](LatticeField& f, int comp) {
    f.dim = dim_;
    f.n = base_n_;
    f.spacing = 1.0;
    std::size_t count = 1;
    for (int ax = 0; ax < dim_; ++ax) count *= static_cast<std::size_t>(base_n_);
    f.values.resize(count);
    const int N = torus_n_;
    std::size_t out = 0;
    if (dim_ == 2) {
      for (int j = 0; j < base_n_; ++j)
        for (int i = 0; i < base_n_; ++i, ++out)
          f.values[out] = scale * c[static_cast<std::size_t>(j) * N + i][comp];
    } else {
      const std::size_t NN = static_cast<std::size_t>(N) * N;
      for (int k = 0; k < base_n_; ++k)
        for (int j = 0; j < base_n_; ++j)
          for (int i = 0; i < base_n_; ++i, ++out)
            f.values[out] =
                scale * c[static_cast<std::size_t>(k) * NN + static_cast<std::size_t>(j) * N + i][comp];
    }
  };
  extract(a, 0);
  extract(b, 1);
}

LatticeField CirculantEmbedding::sample(std::uint64_t seed) {
  LatticeField a, b;
  sample_pair(seed, a, b);
  return a;
}

double CirculantEmbedding::exact_covariance(const std::array<int, 3>& lag) const {
  const int N = torus_n_;
  double acc = 0.0;
  std::size_t idx = 0;
  if (dim_ == 2) {
    for (int ky = 0; ky < N; ++ky)
      for (int kx = 0; kx < N; ++kx, ++idx)
        acc += spectrum_[idx] *
               std::cos(kTwoPi * (static_cast<double>(kx) * lag[0] +
                                  static_cast<double>(ky) * lag[1]) /
                        N);
  } else {
    for (int kz = 0; kz < N; ++kz)
      for (int ky = 0; ky < N; ++ky)
        for (int kx = 0; kx < N; ++kx, ++idx)
          acc += spectrum_[idx] *
                 std::cos(kTwoPi * (static_cast<double>(kx) * lag[0] +
                                    static_cast<double>(ky) * lag[1] +
                                    static_cast<double>(kz) * lag[2]) /
                          N);
  }
  return acc / static_cast<double>(torus_size_);
}

GaussianLatticeSampler::GaussianLatticeSampler(int dim, int base_n, double alpha,
                                               double kappa_g, int padding)
    : dim_(dim), alpha_(alpha), kappa_g_(kappa_g) {
  if (!(alpha > 0) || !(alpha < dim))
    throw std::invalid_argument("GaussianLatticeSampler: alpha must lie in (0, d)");
  const double T = std::pow(kappa_g, 1.0 / alpha);
  auto cov = [dim, alpha, T](const std::array<int, 3>& lag) {
    double d2 = 0.0;
    for (int a = 0; a < dim; ++a) d2 += static_cast<double>(lag[a]) * lag[a];
    const double u2 = d2 / (T * T);
    return std::pow(1.0 + u2, -alpha / 2.0);
  };
  embedding_ = std::make_unique<CirculantEmbedding>(dim, base_n, padding, cov);
}

double GaussianLatticeSampler::covariance(double dist) const {
  const double T = std::pow(kappa_g_, 1.0 / alpha_);
  const double u = dist / T;
  return std::pow(1.0 + u * u, -alpha_ / 2.0);
}

LongRangeSampler::LongRangeSampler(const PotentialModel& model, const Grid& grid,
                                   double eps)
    : model_(model),
      grid_(grid),
      eps_(eps),
      gauss_(grid.dim,
             static_cast<int>(std::llround(grid.extent / eps)) + 2,
             model.alpha(), model.kappa_g()) {
  if (!(eps > 0)) throw std::invalid_argument("LongRangeSampler: eps must be > 0");
  model_.validate_for_sampling();
  // Nearest-node map from domain nodes to the unit-scale lattice.
  const int n = grid.n;
  const int L = gauss_.embedding().base_n();
  node_to_lattice_.resize(grid.num_nodes());
  auto nearest = [&](int i) {
    const int k = static_cast<int>(std::llround(grid.coord(i) / eps));
    return std::min(std::max(k, 0), L - 1);
  };
  std::size_t idx = 0;
  const int kmax = grid.dim == 3 ? n : 1;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++idx) {
        std::size_t lat = nearest(i);
        lat += static_cast<std::size_t>(nearest(j)) * L;
        if (grid.dim == 3) lat += static_cast<std::size_t>(nearest(k)) * L * L;
        node_to_lattice_[idx] = lat;
      }
}

FieldRealization LongRangeSampler::sample(std::uint64_t seed) {
  LatticeField g = gauss_.sample(seed);
  FieldRealization out;
  out.seed = seed;
  out.eps = eps_;
  out.q_bar = model_.q_bar();
  out.q = GridFunction(grid_);
  const auto& phi = model_.phi();
  const double M = model_.M();
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    double q = model_.q_bar() + phi(g.values[node_to_lattice_[i]]);
    if (q < 0.0) {
      q = 0.0;
      ++clipped;
    } else if (q > M) {
      q = M;
      ++clipped;
    }
    out.q[i] = q;
  }
  out.clipped = clipped;
  return out;
}

FieldRealization sample_long_range(const PotentialModel& model, const Grid& grid,
                                   double eps, std::uint64_t seed) {
  if (model.is_short_range())
    throw std::invalid_argument("sample_long_range: model kind mismatch");
  LongRangeSampler sampler(model, grid, eps);
  return sampler.sample(seed);
}

double riesz_cell_integral(int dim, double alpha) {
  if (!(alpha > 0) || !(alpha < dim))
    throw std::invalid_argument("riesz_cell_integral: alpha must lie in (0, d)");
  // Disc (ball) of radius 1/4 handled in closed form, remainder by midpoint.
  const double r0 = 0.25;
  double acc;
  if (dim == 2) {
    acc = 2.0 * M_PI * std::pow(r0, 2.0 - alpha) / (2.0 - alpha);
    const int n = 1024;
    const double h = 1.0 / n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = -0.5 + (i + 0.5) * h;
        const double y = -0.5 + (j + 0.5) * h;
        const double r = std::sqrt(x * x + y * y);
        if (r >= r0) acc += std::pow(r, -alpha) * h * h;
      }
  } else {
    acc = 4.0 * M_PI * std::pow(r0, 3.0 - alpha) / (3.0 - alpha);
    const int n = 160;
    const double h = 1.0 / n;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double x = -0.5 + (i + 0.5) * h;
          const double y = -0.5 + (j + 0.5) * h;
          const double z = -0.5 + (k + 0.5) * h;
          const double r = std::sqrt(x * x + y * y + z * z);
          if (r >= r0) acc += std::pow(r, -alpha) * h * h * h;
        }
  }
  return acc;
}

}  // namespace homlab
