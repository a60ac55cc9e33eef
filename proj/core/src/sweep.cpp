#include "homlab/sweep.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "homlab/gaussian_lattice.hpp"
#include "homlab/operators.hpp"
#include "homlab/rng.hpp"
#include "homlab/sobolev.hpp"
#include "homlab/solver.hpp"
#include "homlab/stats.hpp"

namespace homlab {

namespace {

constexpr std::uint64_t kSweepTag = 0x51EE9ULL;

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b) {
  GridFunction out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> x) {
  MeanSe r;
  if (x.empty()) return r;
  for (double v : x) r.mean += v;
  r.mean /= static_cast<double>(x.size());
  if (x.size() > 1) {
    double m2 = 0.0;
    for (double v : x) m2 += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(m2 / (static_cast<double>(x.size()) - 1.0) /
                     static_cast<double>(x.size()));
  }
  return r;
}

// Run fn(worker, begin, end) over [0, n) split into contiguous chunks.
void parallel_chunks(int n, int jobs,
                     const std::function<void(int, int, int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  const int chunk = (n + jobs - 1) / jobs;
  for (int w = 0; w < jobs; ++w) {
    const int b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    workers.emplace_back([&, w, b, e] {
      try {
        fn(w, b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace

void SweepConfig::validate() const {
  if (grid.extent != 1.0)
    throw std::invalid_argument("SweepConfig: sweeps require the unit box");
  if (n_realizations < 50)
    throw std::invalid_argument("SweepConfig: n_realizations must be >= 50");
  if (eps_list.size() < 1) throw std::invalid_argument("SweepConfig: empty eps list");
  if (model.dim() != grid.dim)
    throw std::invalid_argument("SweepConfig: potential/grid dim mismatch");
  if (source.grid() != grid)
    throw std::invalid_argument("SweepConfig: source grid mismatch");
  for (const auto& phi : test_functions)
    if (phi.grid() != grid)
      throw std::invalid_argument("SweepConfig: test function grid mismatch");
  double prev = 2.0;
  for (double eps : eps_list) {
    if (!(eps > 0) || eps >= prev)
      throw std::invalid_argument("SweepConfig: eps list must be positive and descending");
    prev = eps;
    const double inv = 1.0 / eps;
    if (std::abs(inv - std::round(inv)) > 1e-9)
      throw std::invalid_argument("SweepConfig: 1/eps must be an integer (lattice alignment)");
    const int per = static_cast<int>(std::round(inv));
    if ((grid.n + 1) % per != 0)
      throw std::invalid_argument(
          "SweepConfig: grid does not align with the potential lattice (1/eps must divide n+1)");
    if ((grid.n + 1) / per < min_cells_per_period)
      throw std::invalid_argument(
          "SweepConfig: resolution rule violated (need h <= eps/" +
          std::to_string(min_cells_per_period) + ")");
  }
  model.validate_for_sampling();
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const Grid& grid = cfg.grid;
  const double q_bar = cfg.model.q_bar();

  const EffectiveModel eff =
      cfg.effective ? *cfg.effective : effective_model(cfg.A, q_bar);
  HomogenizedOperator hom_op(eff.a_bar, q_bar, grid);
  DirichletSolver hom_solver(hom_op);
  const GridFunction u_hom = hom_solver.solve(cfg.source, cfg.cg_tol);

  SweepResult result;
  result.dim = grid.dim;
  result.s_diag = cfg.s_diag;
  result.base_seed = cfg.base_seed;
  const auto corr = cfg.model.correlation();
  if (cfg.model.is_short_range()) {
    result.fluct_exponent = grid.dim / 2.0;
    result.weak_exponent = grid.dim;
    result.sigma2 = corr.sigma2;
  } else {
    result.fluct_exponent = cfg.model.alpha() / 2.0;
    result.weak_exponent = cfg.model.alpha();
    result.kappa = corr.kappa;
  }
  const double gamma = result.fluct_exponent;

  for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
    const double eps = cfg.eps_list[e];
    EpsRecord rec;
    rec.eps = eps;
    rec.n_realizations = cfg.n_realizations;
    const int n_real = cfg.n_realizations;
    const int K = std::min(cfg.n_neumann, n_real);
    rec.n_neumann = K;
    try {
      const GridFunction qbar_field(grid, q_bar);
      OscillatoryOperator op_eps(cfg.A, eps, qbar_field, grid);
      DirichletSolver solver_eps(op_eps);
      const GridFunction v = solver_eps.solve(cfg.source, cfg.cg_tol);
      {
        GridFunction diff = v;
        diff -= u_hom;
        rec.periodic_error = diff.l2_norm();
      }

      rec.seeds.resize(n_real);
      for (int r = 0; r < n_real; ++r)
        rec.seeds[r] = mix_seed({cfg.base_seed, kSweepTag,
                                 cfg.common_random_numbers ? 0 : e + 1,
                                 static_cast<std::uint64_t>(r)});

      // Pivot storage: D_r = u_r - u_0 and E_r = t2_r - t2_0, so that a
      // deterministic potential gives exactly zero fluctuation statistics.
      std::vector<GridFunction> D(n_real), E2(K);
      GridFunction u0, t20;
      std::vector<double> w_norms(K), resid_norms(K), hs_vals(K);
      double identity_residual = 0.0;

      std::unique_ptr<LongRangeSampler> lr_shared;
      if (!cfg.model.is_short_range() && cfg.jobs <= 1)
        lr_shared = std::make_unique<LongRangeSampler>(cfg.model, grid, eps);

      // Pass 1 (parallel over realizations): solve and stash fields.
      parallel_chunks(n_real, cfg.jobs, [&](int, int begin, int end) {
        OscillatoryOperator op_rand(cfg.A, eps, qbar_field, grid);
        DirichletSolver solver_rand(op_rand);
        OscillatoryOperator op_fixed(cfg.A, eps, qbar_field, grid);
        DirichletSolver solver_fixed(op_fixed);
        FourierNormEngine norm_engine(grid);
        std::unique_ptr<LongRangeSampler> lr_local;
        LongRangeSampler* lr = lr_shared.get();
        if (!cfg.model.is_short_range() && !lr) {
          lr_local = std::make_unique<LongRangeSampler>(cfg.model, grid, eps);
          lr = lr_local.get();
        }
        for (int r = begin; r < end; ++r) {
          const FieldRealization real =
              cfg.model.is_short_range()
                  ? sample_short_range(cfg.model, grid, eps, rec.seeds[r])
                  : lr->sample(rec.seeds[r]);
          op_rand.set_potential(real.q);
          GridFunction u_r = solver_rand.solve(cfg.source, cfg.cg_tol);
          if (r < K) {
            const GridFunction nu = real.nu();
            const GridFunction t1 =
                solver_fixed.solve(pointwise_product(nu, v), cfg.cg_tol);
            const GridFunction t2 =
                solver_fixed.solve(pointwise_product(nu, t1), cfg.cg_tol);
            w_norms[r] = t1.l2_norm();
            const double hs = norm_engine.weighted_norm(t1, cfg.s_diag);
            hs_vals[r] = std::pow(eps, -2.0 * gamma) * hs * hs;
            GridFunction resid = u_r;
            resid -= v;
            resid += t1;
            resid -= t2;
            resid_norms[r] = resid.l2_norm();
            if (r == 0) {
              // Identity check: residual must equal G nu G nu (u - v).
              GridFunction uv = u_r;
              uv -= v;
              const GridFunction g1 =
                  solver_fixed.solve(pointwise_product(nu, uv), cfg.cg_tol);
              const GridFunction g2 =
                  solver_fixed.solve(pointwise_product(nu, g1), cfg.cg_tol);
              GridFunction check = resid;
              check -= g2;
              const double scale = std::max(uv.l2_norm(), 1e-30);
              identity_residual = check.l2_norm() / scale;
              t20 = t2;
              E2[0] = GridFunction(grid);
            } else {
              E2[r] = t2;
            }
          }
          if (r == 0) {
            u0 = u_r;
            D[0] = GridFunction(grid);
          } else {
            D[r] = std::move(u_r);
          }
        }
      });
      for (int r = 1; r < n_real; ++r) D[r] -= u0;
      for (int r = 1; r < K; ++r) E2[r] -= t20;
      rec.identity_residual = identity_residual;

      // Ensemble statistics from the pivoted fields. Leave-one-out mean:
      // u_r - E_{-r} u = D_r - (S - D_r)/(n-1).
      GridFunction S(grid);
      for (const auto& d : D) S += d;
      {
        GridFunction mean_field = u0;
        GridFunction scaled = S;
        scaled *= 1.0 / n_real;
        mean_field += scaled;
        mean_field -= u_hom;
        rec.mean_error = mean_field.l2_norm();
      }

      std::vector<double> energy(n_real);
      rec.pairings.assign(cfg.test_functions.size(), std::vector<double>(n_real));
      const double loo = 1.0 / (n_real - 1.0);
      GridFunction fluct(grid);
      for (int r = 0; r < n_real; ++r) {
        for (std::size_t i = 0; i < fluct.size(); ++i)
          fluct[i] = D[r][i] - (S[i] - D[r][i]) * loo;
        energy[r] = fluct.l2_norm();
        for (std::size_t p = 0; p < cfg.test_functions.size(); ++p)
          rec.pairings[p][r] = fluct.inner(cfg.test_functions[p]);
      }
      const auto e_stat = mean_se(energy);
      rec.energy_fluct_mean = e_stat.mean;
      rec.energy_fluct_se = e_stat.se;

      if (K > 1) {
        GridFunction S2(grid);
        for (const auto& d : E2) S2 += d;
        std::vector<double> second(K);
        const double loo2 = 1.0 / (K - 1.0);
        for (int r = 0; r < K; ++r) {
          for (std::size_t i = 0; i < fluct.size(); ++i)
            fluct[i] = E2[r][i] - (S2[i] - E2[r][i]) * loo2;
          second[r] = fluct.l2_norm();
        }
        const auto s_stat = mean_se(second);
        rec.second_centered_mean = s_stat.mean;
        rec.second_centered_se = s_stat.se;
      }
      const auto w_stat = mean_se(w_norms);
      rec.w_norm_mean = w_stat.mean;
      rec.w_norm_se = w_stat.se;
      rec.residual_norm_mean = mean_se(resid_norms).mean;
      const auto hs_stat = mean_se(hs_vals);
      rec.hs_diag_mean = hs_stat.mean;
      rec.hs_diag_se = hs_stat.se;
    } catch (const std::exception& ex) {
      rec.failed = true;
      rec.error = ex.what();
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

NeumannParts neumann_decomposition(const TorusField& A, double eps, double q_bar,
                                   const GridFunction& f, const GridFunction& nu,
                                   double tol) {
  const Grid& grid = f.grid();
  GridFunction q(grid, q_bar);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += nu[i];
  OscillatoryOperator op_rand(A, eps, q, grid);
  DirichletSolver solver_rand(op_rand);
  const GridFunction u = solver_rand.solve(f, tol);

  const GridFunction qbar_field(grid, q_bar);
  OscillatoryOperator op_eps(A, eps, qbar_field, grid);
  DirichletSolver solver_eps(op_eps);

  NeumannParts parts;
  parts.v = solver_eps.solve(f, tol);
  const GridFunction t1 = solver_eps.solve(pointwise_product(nu, parts.v), tol);
  parts.w = t1;
  parts.w *= -1.0;
  parts.second = solver_eps.solve(pointwise_product(nu, t1), tol);

  parts.residual = u;
  parts.residual -= parts.v;
  parts.residual -= parts.w;
  parts.residual -= parts.second;

  GridFunction uv = u;
  uv -= parts.v;
  const GridFunction g1 = solver_eps.solve(pointwise_product(nu, uv), tol);
  const GridFunction g2 = solver_eps.solve(pointwise_product(nu, g1), tol);
  GridFunction check = parts.residual;
  check -= g2;
  const double scale = std::max(uv.l2_norm(), 1e-30);
  parts.identity_residual = check.l2_norm() / scale;
  if (parts.identity_residual > 100.0 * tol && uv.l2_norm() > 1e-14)
    throw std::runtime_error(
        "neumann_decomposition: series identity violated beyond 100x solver "
        "tolerance (assembly inconsistency)");
  return parts;
}

ScalingFit fit_scaling(const std::vector<double>& values,
                       const std::vector<double>& eps_list) {
  if (values.size() != eps_list.size())
    throw std::invalid_argument("fit_scaling: size mismatch");
  if (values.size() < 3)
    throw std::invalid_argument("fit_scaling: need at least 3 eps points");
  ScalingFit fit;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0))
      throw std::invalid_argument("fit_scaling: values must be positive");
    fit.points.emplace_back(std::log(eps_list[i]), std::log(values[i]));
  }
  const double m = static_cast<double>(fit.points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : fit.points) {
    sx += x;
    sy += y;
  }
  const double xbar = sx / m, ybar = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - xbar) * (x - xbar);
    sxy += (x - xbar) * (y - ybar);
    syy += (y - ybar) * (y - ybar);
  }
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0;
  for (const auto& [x, y] : fit.points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  fit.stderr_slope =
      m > 2 ? std::sqrt(ss_res / (m - 2.0) / sxx) : 0.0;
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

TightnessReport tightness_diagnostic(const SweepResult& sweep) {
  TightnessReport rep;
  rep.s = sweep.s_diag;
  double lo = 1e300, hi = 0.0;
  for (const auto& rec : sweep.records) {
    if (rec.failed) continue;
    rep.per_eps.push_back(rec.hs_diag_mean);
    lo = std::min(lo, rec.hs_diag_mean);
    hi = std::max(hi, rec.hs_diag_mean);
  }
  rep.ratio = hi == 0.0 ? 0.0 : (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  return rep;
}

WeakPairingStats weak_pairing_stats(const SweepResult& sweep, int phi_index) {
  WeakPairingStats out;
  for (const auto& rec : sweep.records) {
    if (rec.failed) continue;
    if (phi_index < 0 || phi_index >= static_cast<int>(rec.pairings.size()))
      throw std::invalid_argument("weak_pairing_stats: phi_index out of range");
    const auto& vals = rec.pairings[phi_index];
    const double var = sample_variance(vals);
    const double se = jackknife_se(vals, &sample_variance);
    const double scale = std::pow(rec.eps, -sweep.weak_exponent);
    out.variance.push_back(var);
    out.variance_se.push_back(se);
    out.scaled_variance.push_back(scale * var);
    out.scaled_variance_se.push_back(scale * se);
    out.skewness.push_back(moments(vals).skewness);
    out.sd.push_back(std::sqrt(var));
  }
  return out;
}

std::string SweepResult::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["fluct_exponent"] = fluct_exponent;
  j["weak_exponent"] = weak_exponent;
  j["s_diag"] = s_diag;
  j["sigma2"] = sigma2;
  j["kappa"] = kappa;
  j["base_seed"] = base_seed;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json e;
    e["eps"] = r.eps;
    e["n_realizations"] = r.n_realizations;
    e["n_neumann"] = r.n_neumann;
    e["failed"] = r.failed;
    if (r.failed) e["error"] = r.error;
    e["periodic_error"] = r.periodic_error;
    e["mean_error"] = r.mean_error;
    e["energy_fluct_mean"] = r.energy_fluct_mean;
    e["energy_fluct_se"] = r.energy_fluct_se;
    e["w_norm_mean"] = r.w_norm_mean;
    e["w_norm_se"] = r.w_norm_se;
    e["second_centered_mean"] = r.second_centered_mean;
    e["second_centered_se"] = r.second_centered_se;
    e["residual_norm_mean"] = r.residual_norm_mean;
    e["hs_diag_mean"] = r.hs_diag_mean;
    e["hs_diag_se"] = r.hs_diag_se;
    e["identity_residual"] = r.identity_residual;
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  return j.dump(2);
}

void SweepResult::write_pairings_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "eps,realization,phi_index,value\n";
  char buf[96];
  for (const auto& r : records) {
    if (r.failed) continue;
    for (std::size_t p = 0; p < r.pairings.size(); ++p)
      for (std::size_t k = 0; k < r.pairings[p].size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%.17g\n", r.eps, k, p,
                      r.pairings[p][k]);
        os << buf;
      }
  }
}

}  // namespace homlab
