#include "homlab/limit_law.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "homlab/fast_poisson.hpp"
#include "homlab/gaussian_lattice.hpp"
#include "homlab/rng.hpp"
#include "homlab/solver.hpp"

namespace homlab {

namespace {
constexpr std::uint64_t kLimitTag = 0x11417ULL;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

LimitLawSpec LimitLawSpec::white(const Eigen::MatrixXd& a_bar, double q_bar,
                                 GridFunction u, double sigma) {
  LimitLawSpec s;
  s.kind = "white";
  s.a_bar = a_bar;
  s.q_bar = q_bar;
  s.u = std::move(u);
  s.sigma = sigma;
  s.validate();
  return s;
}

LimitLawSpec LimitLawSpec::long_range(const Eigen::MatrixXd& a_bar, double q_bar,
                                      GridFunction u, double kappa, double alpha) {
  LimitLawSpec s;
  s.kind = "long_range";
  s.a_bar = a_bar;
  s.q_bar = q_bar;
  s.u = std::move(u);
  s.kappa = kappa;
  s.alpha = alpha;
  s.validate();
  return s;
}

void LimitLawSpec::validate() const {
  if (kind == "white") {
    if (!(sigma > 0)) throw std::invalid_argument("LimitLawSpec: sigma must be > 0");
  } else if (kind == "long_range") {
    if (!(kappa > 0)) throw std::invalid_argument("LimitLawSpec: kappa must be > 0");
    if (!(alpha > 0) || !(alpha < u.grid().dim))
      throw std::invalid_argument("LimitLawSpec: alpha must lie in (0, d)");
  } else {
    throw std::invalid_argument("LimitLawSpec: unknown kind " + kind);
  }
  if (q_bar < 0) throw std::invalid_argument("LimitLawSpec: q_bar must be >= 0");
}

LimitLawSampler::LimitLawSampler(const LimitLawSpec& spec) : spec_(spec) {
  spec_.validate();
  const Grid& grid = spec_.u.grid();
  op_ = std::make_unique<HomogenizedOperator>(spec_.a_bar, spec_.q_bar, grid);
  if (op_->separable()) {
    direct_ = std::make_unique<DstSolver>(
        grid,
        std::array<double, 3>{spec_.a_bar(0, 0), spec_.a_bar(1, 1),
                              grid.dim == 3 ? spec_.a_bar(2, 2) : 0.0},
        spec_.q_bar);
  } else {
    solver_ = std::make_unique<DirichletSolver>(*op_);
  }
  if (spec_.kind == "long_range") {
    const double h = grid.h();
    const double kappa = spec_.kappa;
    const double alpha = spec_.alpha;
    const double lag0 = kappa * std::pow(h, -alpha) *
                        riesz_cell_integral(grid.dim, alpha);
    const int dim = grid.dim;
    auto cov = [h, kappa, alpha, lag0, dim](const std::array<int, 3>& lag) {
      double d2 = 0.0;
      for (int a = 0; a < dim; ++a) d2 += static_cast<double>(lag[a]) * lag[a];
      if (d2 == 0.0) return lag0;
      return kappa * std::pow(h * std::sqrt(d2), -alpha);
    };
    noise_ = std::make_unique<CirculantEmbedding>(dim, grid.n, 4, cov);
  }
}

LimitLawSampler::~LimitLawSampler() = default;

GridFunction LimitLawSampler::solve_source(const GridFunction& src) {
  GridFunction out(src.grid());
  if (direct_)
    direct_->solve(src.values(), out.values());
  else
    out = solver_->solve(src, 1e-10);
  return out;
}

GridFunction LimitLawSampler::sample(std::uint64_t seed) {
  const Grid& grid = spec_.u.grid();
  GridFunction src(grid);
  if (spec_.kind == "white") {
    Rng rng(seed, {kLimitTag});
    const double scale = spec_.sigma * std::pow(grid.cell_volume(), -0.5);
    for (std::size_t i = 0; i < src.size(); ++i)
      src[i] = scale * spec_.u[i] * rng.normal();
  } else {
    const LatticeField w = noise_->sample(seed);
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = spec_.u[i] * w.values[i];
  }
  return solve_source(src);
}

GridFunction LimitLawSampler::sample_with_noise(std::span<const double> xi) {
  if (spec_.kind != "white")
    throw std::logic_error("sample_with_noise: white-noise sampler only");
  const Grid& grid = spec_.u.grid();
  if (xi.size() != spec_.u.size())
    throw std::invalid_argument("sample_with_noise: noise size mismatch");
  GridFunction src(grid);
  const double scale = spec_.sigma * std::pow(grid.cell_volume(), -0.5);
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = scale * spec_.u[i] * xi[i];
  return solve_source(src);
}

std::vector<GridFunction> sample_white_limit(const LimitLawSpec& spec, int n_samples,
                                             std::uint64_t seed) {
  if (spec.kind != "white")
    throw std::invalid_argument("sample_white_limit: spec kind mismatch");
  LimitLawSampler sampler(spec);
  std::vector<GridFunction> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i)
    out.push_back(sampler.sample(mix_seed({seed, kLimitTag, static_cast<std::uint64_t>(i)})));
  return out;
}

std::vector<GridFunction> sample_longrange_limit(const LimitLawSpec& spec,
                                                 int n_samples, std::uint64_t seed) {
  if (spec.kind != "long_range")
    throw std::invalid_argument("sample_longrange_limit: spec kind mismatch");
  LimitLawSampler sampler(spec);
  std::vector<GridFunction> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i)
    out.push_back(sampler.sample(mix_seed({seed, kLimitTag, static_cast<std::uint64_t>(i)})));
  return out;
}

ProjectionSample project_fields(const std::vector<GridFunction>& fields,
                                const std::vector<GridFunction>& phis,
                                const std::string& law_tag) {
  ProjectionSample out;
  out.law_tag = law_tag;
  out.n_phi = static_cast<int>(phis.size());
  out.values.assign(phis.size(), {});
  for (auto& v : out.values) v.reserve(fields.size());
  for (const auto& f : fields)
    for (std::size_t p = 0; p < phis.size(); ++p)
      out.values[p].push_back(f.inner(phis[p]));
  return out;
}

void ProjectionSample::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "realization,phi_index,value,law_tag\n";
  char buf[96];
  for (std::size_t p = 0; p < values.size(); ++p)
    for (std::size_t r = 0; r < values[p].size(); ++r) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,", r, p, values[p][r]);
      os << buf << law_tag << "\n";
    }
}

ProjectionSample ProjectionSample::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  std::getline(is, line);  // header
  ProjectionSample out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    std::getline(ss, tok, ',');
    const int p = std::stoi(tok);
    std::getline(ss, tok, ',');
    const double v = std::stod(tok);
    std::getline(ss, tok, ',');
    out.law_tag = tok;
    if (p >= static_cast<int>(out.values.size())) out.values.resize(p + 1);
    out.values[p].push_back(v);
  }
  out.n_phi = static_cast<int>(out.values.size());
  return out;
}

namespace {

// Riesz-kernel convolution sum C(y) = sum_z K(y-z) g(z) by zero-padded FFT.
std::vector<double> kernel_convolution(const Grid& grid, double kappa, double alpha,
                                       double lag0, std::span<const double> g) {
  const int n = grid.n;
  const int P = 2 * n;
  const int dim = grid.dim;
  std::size_t real_size = 1;
  for (int a = 0; a < dim; ++a) real_size *= static_cast<std::size_t>(P);
  const std::size_t cplx_size = real_size / P * (P / 2 + 1);
  const double h = grid.h();

  double* rbuf = fftw_alloc_real(real_size);
  auto* kspec = fftw_alloc_complex(cplx_size);
  auto* gspec = fftw_alloc_complex(cplx_size);
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (dim == 2) {
      fwd = fftw_plan_dft_r2c_2d(P, P, rbuf, kspec, FFTW_ESTIMATE);
      inv = fftw_plan_dft_c2r_2d(P, P, kspec, rbuf, FFTW_ESTIMATE);
    } else {
      fwd = fftw_plan_dft_r2c_3d(P, P, P, rbuf, kspec, FFTW_ESTIMATE);
      inv = fftw_plan_dft_c2r_3d(P, P, P, kspec, rbuf, FFTW_ESTIMATE);
    }
  }

  // Kernel on the padded torus (wrapped lags).
  auto signed_lag = [P](int k) { return k <= P / 2 ? k : k - P; };
  std::fill(rbuf, rbuf + real_size, 0.0);
  std::size_t idx = 0;
  if (dim == 2) {
    for (int ky = 0; ky < P; ++ky)
      for (int kx = 0; kx < P; ++kx, ++idx) {
        const double lx = signed_lag(kx), ly = signed_lag(ky);
        const double d = std::sqrt(lx * lx + ly * ly);
        rbuf[idx] = d == 0.0 ? lag0 : kappa * std::pow(h * d, -alpha);
      }
  } else {
    for (int kz = 0; kz < P; ++kz)
      for (int ky = 0; ky < P; ++ky)
        for (int kx = 0; kx < P; ++kx, ++idx) {
          const double lx = signed_lag(kx), ly = signed_lag(ky), lz = signed_lag(kz);
          const double d = std::sqrt(lx * lx + ly * ly + lz * lz);
          rbuf[idx] = d == 0.0 ? lag0 : kappa * std::pow(h * d, -alpha);
        }
  }
  fftw_execute_dft_r2c(fwd, rbuf, kspec);

  std::fill(rbuf, rbuf + real_size, 0.0);
  if (dim == 2) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        rbuf[static_cast<std::size_t>(j) * P + i] = g[static_cast<std::size_t>(j) * n + i];
  } else {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          rbuf[(static_cast<std::size_t>(k) * P + j) * P + i] =
              g[(static_cast<std::size_t>(k) * n + j) * n + i];
  }
  fftw_execute_dft_r2c(fwd, rbuf, gspec);

  for (std::size_t i = 0; i < cplx_size; ++i) {
    const double re = kspec[i][0] * gspec[i][0] - kspec[i][1] * gspec[i][1];
    const double im = kspec[i][0] * gspec[i][1] + kspec[i][1] * gspec[i][0];
    kspec[i][0] = re;
    kspec[i][1] = im;
  }
  fftw_execute(inv);

  std::vector<double> out(g.size());
  const double norm = 1.0 / static_cast<double>(real_size);
  if (dim == 2) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(j) * n + i] =
            rbuf[static_cast<std::size_t>(j) * P + i] * norm;
  } else {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          out[(static_cast<std::size_t>(k) * n + j) * n + i] =
              rbuf[(static_cast<std::size_t>(k) * P + j) * P + i] * norm;
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(rbuf);
  fftw_free(kspec);
  fftw_free(gspec);
  return out;
}

GridFunction homogenized_apply_inverse(const LimitLawSpec& spec,
                                       const GridFunction& phi) {
  HomogenizedOperator op(spec.a_bar, spec.q_bar, phi.grid());
  return solve_dirichlet(op, phi, 1e-10);
}

}  // namespace

double covariance_quadrature(const LimitLawSpec& spec, const GridFunction& phi_i,
                             const GridFunction& phi_j) {
  std::vector<GridFunction> phis{phi_i, phi_j};
  return covariance_matrix_quadrature(spec, phis)(0, 1);
}

Eigen::MatrixXd covariance_matrix_quadrature(const LimitLawSpec& spec,
                                             const std::vector<GridFunction>& phis) {
  const Grid& grid = spec.u.grid();
  const int np = static_cast<int>(phis.size());
  std::vector<GridFunction> g;  // u . psi_i
  g.reserve(np);
  for (const auto& phi : phis) {
    GridFunction psi = homogenized_apply_inverse(spec, phi);
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= spec.u[k];
    g.push_back(std::move(psi));
  }
  Eigen::MatrixXd cov(np, np);
  const double hd = grid.cell_volume();
  if (spec.kind == "white") {
    for (int i = 0; i < np; ++i)
      for (int j = i; j < np; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < g[i].size(); ++k) acc += g[i][k] * g[j][k];
        cov(i, j) = cov(j, i) = spec.sigma * spec.sigma * hd * acc;
      }
    return cov;
  }
  const double lag0 =
      spec.kappa * std::pow(grid.h(), -spec.alpha) * riesz_cell_integral(grid.dim, spec.alpha);
  std::vector<std::vector<double>> conv(np);
  for (int j = 0; j < np; ++j)
    conv[j] = kernel_convolution(grid, spec.kappa, spec.alpha, lag0, g[j].values());
  for (int i = 0; i < np; ++i)
    for (int j = i; j < np; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < g[i].size(); ++k) acc += g[i][k] * conv[j][k];
      cov(i, j) = cov(j, i) = hd * hd * acc;
    }
  return cov;
}

DistributionReport compare_distributions(const ProjectionSample& empirical,
                                         const ProjectionSample& limit,
                                         const ComparisonThresholds& thresholds) {
  if (empirical.values.size() != limit.values.size())
    throw std::invalid_argument("compare_distributions: test-function count mismatch");
  DistributionReport rep;
  rep.pass = true;
  for (std::size_t p = 0; p < empirical.values.size(); ++p) {
    const auto& a = empirical.values[p];
    const auto& b = limit.values[p];
    if (a.size() < 200 || b.size() < 200)
      throw std::invalid_argument("compare_distributions: need at least 200 values per sample");
    ProjectionComparison c;
    c.phi_index = static_cast<int>(p);
    const double va = sample_variance(a);
    const double vb = sample_variance(b);
    if (va == 0.0 || vb == 0.0) {
      c.degenerate = true;
      c.pass = false;
      rep.pass = false;
      rep.entries.push_back(c);
      continue;
    }
    const auto ks = ks_two_sample(a, b);
    c.ks_d = ks.d;
    c.ks_p = ks.p_value;
    c.var_ratio = va / vb;
    const double se_log_a = jackknife_se(a, &sample_variance) / va;
    const double se_log_b = jackknife_se(b, &sample_variance) / vb;
    const double se_log = std::sqrt(se_log_a * se_log_a + se_log_b * se_log_b);
    c.var_ratio_lo = c.var_ratio * std::exp(-1.96 * se_log);
    c.var_ratio_hi = c.var_ratio * std::exp(1.96 * se_log);
    const auto m = moments(a);
    c.skewness = m.skewness;
    c.excess_kurtosis = m.excess_kurtosis;
    c.pass = c.ks_p > thresholds.ks_p_min && c.var_ratio >= thresholds.var_ratio_lo &&
             c.var_ratio <= thresholds.var_ratio_hi &&
             std::abs(c.skewness) < thresholds.max_abs_skewness &&
             std::abs(c.excess_kurtosis) < thresholds.max_abs_kurtosis;
    if (!c.pass) rep.pass = false;
    rep.entries.push_back(c);
  }
  return rep;
}

std::string DistributionReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& c : entries) {
    nlohmann::json e;
    e["phi_index"] = c.phi_index;
    e["degenerate"] = c.degenerate;
    e["ks_d"] = c.ks_d;
    e["ks_p"] = c.ks_p;
    e["var_ratio"] = c.var_ratio;
    e["var_ratio_ci"] = {c.var_ratio_lo, c.var_ratio_hi};
    e["skewness"] = c.skewness;
    e["excess_kurtosis"] = c.excess_kurtosis;
    e["pass"] = c.pass;
    entries_json.push_back(std::move(e));
  }
  j["entries"] = std::move(entries_json);
  return j.dump(2);
}

}  // namespace homlab
