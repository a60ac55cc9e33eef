#include "homlab/potential.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "homlab/rng.hpp"

namespace homlab {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

// Radial quadrature of f(rho) rho^{d-1} over [0,1], times the sphere area.
template <class F>
double radial_integral(int dim, F&& f) {
  const int n = 1 << 14;
  const double h = 1.0 / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rho = (i + 0.5) * h;
    acc += f(rho) * std::pow(rho, dim - 1);
  }
  acc *= h;
  return acc * (dim == 2 ? 2.0 * kPi : 4.0 * kPi);
}

// (B * B)(t): correlation of the unit bump with itself at offset t along an
// axis, by midpoint quadrature over the support.
double bump_correlation_unit(int dim, double t) {
  if (t >= 2.0) return 0.0;
  const int n = dim == 2 ? 400 : 120;
  const double h = 2.0 / n;
  double acc = 0.0;
  if (dim == 2) {
    for (int j = 0; j < n; ++j) {
      const double y = -1.0 + (j + 0.5) * h;
      for (int i = 0; i < n; ++i) {
        const double x = -1.0 + (i + 0.5) * h;
        const double b1 = bump_value(std::sqrt(x * x + y * y));
        if (b1 == 0.0) continue;
        const double xs = x + t;
        acc += b1 * bump_value(std::sqrt(xs * xs + y * y));
      }
    }
    return acc * h * h;
  }
  for (int k = 0; k < n; ++k) {
    const double z = -1.0 + (k + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      const double y = -1.0 + (j + 0.5) * h;
      for (int i = 0; i < n; ++i) {
        const double x = -1.0 + (i + 0.5) * h;
        const double b1 = bump_value(std::sqrt(x * x + y * y + z * z));
        if (b1 == 0.0) continue;
        const double xs = x + t;
        acc += b1 * bump_value(std::sqrt(xs * xs + y * y + z * z));
      }
    }
  }
  return acc * h * h * h;
}

double uniform_site(std::uint64_t seed, int dim, const std::array<int, 3>& k) {
  Rng rng(seed, {0x5b07u, static_cast<std::uint64_t>(static_cast<std::int64_t>(k[0])),
                 static_cast<std::uint64_t>(static_cast<std::int64_t>(k[1])),
                 dim == 3 ? static_cast<std::uint64_t>(static_cast<std::int64_t>(k[2]))
                          : 0x77u});
  return rng.uniform();
}

}  // namespace

double bump_value(double rho) {
  const double r2 = rho * rho;
  if (r2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r2));
}

double bump_integral(int dim) {
  static const double i2 = radial_integral(2, [](double r) { return bump_value(r); });
  static const double i3 = radial_integral(3, [](double r) { return bump_value(r); });
  return dim == 2 ? i2 : i3;
}

double bump_square_integral(int dim) {
  static const double i2 = radial_integral(2, [](double r) {
    const double b = bump_value(r);
    return b * b;
  });
  static const double i3 = radial_integral(3, [](double r) {
    const double b = bump_value(r);
    return b * b;
  });
  return dim == 2 ? i2 : i3;
}

double bump_overlap_sup(int dim, double r) {
  const int reach = static_cast<int>(std::ceil(r));
  const int res = dim == 2 ? 160 : 48;
  double sup = 0.0;
  auto sum_at = [&](double y0, double y1, double y2) {
    double s = 0.0;
    for (int k0 = -reach; k0 <= reach + 1; ++k0)
      for (int k1 = -reach; k1 <= reach + 1; ++k1) {
        if (dim == 2) {
          const double dx = y0 - k0, dy = y1 - k1;
          s += bump_value(std::sqrt(dx * dx + dy * dy) / r);
        } else {
          for (int k2 = -reach; k2 <= reach + 1; ++k2) {
            const double dx = y0 - k0, dy = y1 - k1, dz = y2 - k2;
            s += bump_value(std::sqrt(dx * dx + dy * dy + dz * dz) / r);
          }
        }
      }
    return s;
  };
  for (int j = 0; j <= res; ++j)
    for (int i = 0; i <= res; ++i) {
      if (dim == 2) {
        sup = std::max(sup, sum_at(i / static_cast<double>(res),
                                   j / static_cast<double>(res), 0.0));
      } else {
        for (int k = 0; k <= res; ++k)
          sup = std::max(sup, sum_at(i / static_cast<double>(res),
                                     j / static_cast<double>(res),
                                     k / static_cast<double>(res)));
      }
    }
  return sup;
}

std::size_t CorrelationSpec::lag_index(const std::array<int, 3>& lag, int dim) const {
  const int K = max_lag_pts;
  const int w = 2 * K + 1;
  std::size_t idx = static_cast<std::size_t>(lag[dim - 1] + K);
  for (int a = dim - 2; a >= 0; --a) idx = idx * w + (lag[a] + K);
  return idx;
}

void CorrelationSpec::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  const int K = max_lag_pts;
  const int w = 2 * K + 1;
  const bool three = r_hat.size() == static_cast<std::size_t>(w) * w * w;
  os << (three ? "lag_x,lag_y,lag_z,lag_abs,R_hat,SE\n" : "lag_x,lag_y,lag_abs,R_hat,SE\n");
  char buf[160];
  std::size_t idx = 0;
  const int zlo = three ? -K : 0, zhi = three ? K : 0;
  for (int lz = zlo; lz <= zhi; ++lz)
    for (int ly = -K; ly <= K; ++ly)
      for (int lx = -K; lx <= K; ++lx, ++idx) {
        const double mag = spacing * std::sqrt(static_cast<double>(lx) * lx +
                                               static_cast<double>(ly) * ly +
                                               static_cast<double>(lz) * lz);
        if (three) {
          std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g\n", lx, ly, lz,
                        mag, r_hat[idx], r_hat_se[idx]);
        } else {
          std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", lx, ly, mag,
                        r_hat[idx], r_hat_se[idx]);
        }
        os << buf;
      }
}

PotentialModel PotentialModel::short_range(int dim, double q_bar, double M,
                                           double bump_radius,
                                           std::optional<double> target_sd) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("PotentialModel: dim must be 2 or 3");
  if (q_bar < 0 || q_bar > M)
    throw std::invalid_argument("PotentialModel: requires 0 <= q_bar <= M");
  if (!(bump_radius > 0)) throw std::invalid_argument("PotentialModel: bump_radius must be > 0");
  PotentialModel p;
  p.kind_ = "short_range";
  p.dim_ = dim;
  p.q_bar_ = q_bar;
  p.M_ = M;
  p.bump_radius_ = bump_radius;
  if (target_sd) {
    const double rd = std::pow(bump_radius, dim);
    p.amplitude_ = *target_sd * std::sqrt(12.0 / (rd * bump_square_integral(dim)));
  } else {
    // Largest amplitude with |nu| <= min(q_bar, M - q_bar) surely.
    const double sup = bump_overlap_sup(dim, bump_radius);
    p.amplitude_ = 0.999 * 2.0 * std::min(q_bar, M - q_bar) / sup;
  }
  return p;
}

PotentialModel PotentialModel::long_range(int dim, double q_bar, double M,
                                          double alpha, double kappa_g,
                                          PhiDescriptor phi) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("PotentialModel: dim must be 2 or 3");
  if (q_bar < 0 || q_bar > M)
    throw std::invalid_argument("PotentialModel: requires 0 <= q_bar <= M");
  if (!(alpha > 0) || !(alpha < dim))
    throw std::invalid_argument("PotentialModel: long_range requires alpha in (0, d)");
  if (!(kappa_g > 0)) throw std::invalid_argument("PotentialModel: kappa_g must be > 0");
  PotentialModel p;
  p.kind_ = "long_range";
  p.dim_ = dim;
  p.q_bar_ = q_bar;
  p.M_ = M;
  p.alpha_ = alpha;
  p.kappa_g_ = kappa_g;
  p.phi_ = std::move(phi);
  return p;
}

double PotentialModel::variance() const {
  if (is_short_range()) {
    const double rd = std::pow(bump_radius_, dim_);
    return amplitude_ * amplitude_ / 12.0 * rd * bump_square_integral(dim_);
  }
  return bivariate_expectation(phi_, 1.0);
}

double PotentialModel::sigma2() const {
  if (!is_short_range())
    throw std::logic_error("sigma2: defined for the short-range model only");
  const double rd = std::pow(bump_radius_, dim_);
  const double ib = rd * bump_integral(dim_);
  return amplitude_ * amplitude_ / 12.0 * ib * ib;
}

double PotentialModel::covariance_g(double dist) const {
  const double T = std::pow(kappa_g_, 1.0 / alpha_);
  const double u = dist / T;
  return std::pow(1.0 + u * u, -alpha_ / 2.0);
}

double PotentialModel::analytic_R(double dist) const {
  if (is_short_range()) {
    const double rd = std::pow(bump_radius_, dim_);
    return amplitude_ * amplitude_ / 12.0 * rd *
           bump_correlation_unit(dim_, dist / bump_radius_);
  }
  return bivariate_expectation(phi_, covariance_g(dist));
}

CorrelationSpec PotentialModel::correlation() const {
  CorrelationSpec spec;
  spec.kind = kind_;
  spec.variance = variance();
  if (is_short_range()) {
    spec.sigma2 = sigma2();
  } else {
    const auto rep = hermite_coefficients(phi_);
    spec.V1 = rep.v1;
    spec.kappa = rep.v1 * rep.v1 * kappa_g_;
  }
  return spec;
}

void PotentialModel::validate_for_sampling() const {
  if (is_short_range()) return;  // clipping budget enforced per realization
  if (!phi_.bounded())
    throw std::invalid_argument("potential: unbounded phi cannot be sampled as a potential");
  if (phi_.lower_bound() < -q_bar_ - 1e-12 || phi_.upper_bound() > M_ - q_bar_ + 1e-12)
    throw std::invalid_argument("potential: phi range exceeds [-q_bar, M - q_bar]");
  const auto rep = hermite_coefficients(phi_);
  if (!rep.rank_ok)
    throw std::invalid_argument(
        "potential: Hermite gate failed (rank >= 2 or nonzero Gaussian mean)");
}

GridFunction FieldRealization::nu() const {
  GridFunction out = q;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= q_bar;
  return out;
}

namespace {

// Sum of bump contributions at unit-scale point y.
double bump_sum(const std::array<double, 3>& y, int dim, double r,
                std::uint64_t seed) {
  double acc = 0.0;
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    lo[a] = static_cast<int>(std::ceil(y[a] - r));
    hi[a] = static_cast<int>(std::floor(y[a] + r));
  }
  std::array<int, 3> k{0, 0, 0};
  for (k[0] = lo[0]; k[0] <= hi[0]; ++k[0])
    for (k[1] = lo[1]; k[1] <= hi[1]; ++k[1]) {
      if (dim == 2) {
        const double dx = y[0] - k[0], dy = y[1] - k[1];
        const double b = bump_value(std::sqrt(dx * dx + dy * dy) / r);
        if (b != 0.0) acc += (uniform_site(seed, dim, k) - 0.5) * b;
      } else {
        for (k[2] = lo[2]; k[2] <= hi[2]; ++k[2]) {
          const double dx = y[0] - k[0], dy = y[1] - k[1], dz = y[2] - k[2];
          const double b = bump_value(std::sqrt(dx * dx + dy * dy + dz * dz) / r);
          if (b != 0.0) acc += (uniform_site(seed, dim, k) - 0.5) * b;
        }
      }
    }
  return acc;
}

}  // namespace

FieldRealization sample_short_range(const PotentialModel& model, const Grid& grid,
                                    double eps, std::uint64_t seed) {
  if (!model.is_short_range())
    throw std::invalid_argument("sample_short_range: model kind mismatch");
  if (!(eps > 0)) throw std::invalid_argument("sample_short_range: eps must be > 0");
  FieldRealization out;
  out.seed = seed;
  out.eps = eps;
  out.q_bar = model.q_bar();
  out.q = GridFunction(grid);
  const double r = model.bump_radius();
  const double c = model.amplitude();
  const double M = model.M();
  const int n = grid.n;
  std::size_t idx = 0;
  std::size_t clipped = 0;
  const int kmax = grid.dim == 3 ? n : 1;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++idx) {
        const std::array<double, 3> y{grid.coord(i) / eps, grid.coord(j) / eps,
                                      grid.dim == 3 ? grid.coord(k) / eps : 0.0};
        double q = model.q_bar() + c * bump_sum(y, grid.dim, r, seed);
        if (q < 0.0) {
          q = 0.0;
          ++clipped;
        } else if (q > M) {
          q = M;
          ++clipped;
        }
        out.q[idx] = q;
      }
  out.clipped = clipped;
  if (clipped > out.q.size() / 1000)
    throw std::invalid_argument(
        "sample_short_range: clipping budget exceeded (mis-scaled amplitude)");
  return out;
}

LatticeField sample_short_range_lattice(const PotentialModel& model, int n,
                                        double spacing, std::uint64_t seed) {
  if (!model.is_short_range())
    throw std::invalid_argument("sample_short_range_lattice: model kind mismatch");
  LatticeField f;
  f.dim = model.dim();
  f.n = n;
  f.spacing = spacing;
  std::size_t count = 1;
  for (int a = 0; a < f.dim; ++a) count *= static_cast<std::size_t>(n);
  f.values.resize(count);
  const double r = model.bump_radius();
  const double c = model.amplitude();
  std::size_t idx = 0;
  const int kmax = f.dim == 3 ? n : 1;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++idx) {
        const std::array<double, 3> y{i * spacing, j * spacing, k * spacing};
        f.values[idx] = c * bump_sum(y, f.dim, r, seed);
      }
  return f;
}

FieldRealization sample_potential(const PotentialModel& model, const Grid& grid,
                                  double eps, std::uint64_t seed) {
  return model.is_short_range() ? sample_short_range(model, grid, eps, seed)
                                : sample_long_range(model, grid, eps, seed);
}

}  // namespace homlab
