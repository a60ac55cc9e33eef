#include "cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "homlab/config.hpp"
#include "homlab/corrector.hpp"
#include "homlab/field_stats.hpp"
#include "homlab/gaussian_lattice.hpp"
#include "homlab/limit_law.hpp"
#include "homlab/rng.hpp"
#include "homlab/solver.hpp"
#include "homlab/sweep.hpp"
#include "homlab/version.hpp"

namespace homlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct OutputSink {
  fs::path dir;
  std::string tag;  // "<hash>_s<seed>"
  RunManifest manifest;

  fs::path file(const std::string& stem, const std::string& ext) {
    const std::string name = stem + "_" + tag + "." + ext;
    manifest.outputs.push_back(name);
    return dir / name;
  }
  void finish() {
    manifest.finished = timestamp();
    manifest.write((dir / ("manifest_" + tag + ".json")).string());
  }
};

OutputSink make_sink(const ExperimentConfig& cfg) {
  OutputSink sink;
  sink.dir = cfg.out_dir;
  fs::create_directories(sink.dir);
  sink.tag = cfg.hash() + "_s" + std::to_string(cfg.seed);
  sink.manifest.config_hash = cfg.hash();
  sink.manifest.tool_version = kVersion;
  sink.manifest.seed = cfg.seed;
  sink.manifest.started = timestamp();
  return sink;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << text;
  if (text.empty() || text.back() != '\n') os << "\n";
}

void write_cell_field(const fs::path& path, const CellField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  const std::uint32_t m = static_cast<std::uint32_t>(f.m);
  const std::uint32_t d = static_cast<std::uint32_t>(f.dim);
  os.write(reinterpret_cast<const char*>(&m), 4);
  os.write(reinterpret_cast<const char*>(&d), 4);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SlopeVerdict {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  double target = 0.0;
  double lo = 0.0, hi = 0.0;
  bool pass = false;

  json to_json() const {
    return json{{"slope", slope},   {"stderr", stderr_slope}, {"r2", r2},
                {"target", target}, {"window", {lo, hi}},     {"pass", pass}};
  }
};

SlopeVerdict slope_verdict(const ScalingFit& fit, double target, double lo, double hi) {
  SlopeVerdict v;
  v.slope = fit.slope;
  v.stderr_slope = fit.stderr_slope;
  v.r2 = fit.r2;
  v.target = target;
  v.lo = lo;
  v.hi = hi;
  v.pass = fit.slope >= lo && fit.slope <= hi;
  return v;
}

std::vector<double> collect(const SweepResult& res,
                            double (*get)(const EpsRecord&),
                            std::vector<double>& eps_out) {
  std::vector<double> vals;
  eps_out.clear();
  for (const auto& r : res.records) {
    if (r.failed) continue;
    vals.push_back(get(r));
    eps_out.push_back(r.eps);
  }
  return vals;
}

LimitLawSpec build_limit_spec(const ExperimentConfig& cfg, const Grid& grid,
                              const EffectiveModel& eff) {
  HomogenizedOperator op(eff.a_bar, cfg.q_bar, grid);
  const GridFunction u = solve_dirichlet(op, named_source(cfg.source_name, grid), 1e-10);
  const PotentialModel model = cfg.make_model();
  if (model.is_short_range()) {
    double sigma = std::sqrt(model.sigma2());
    if (cfg.sigma_override) sigma = *cfg.sigma_override;
    return LimitLawSpec::white(eff.a_bar, cfg.q_bar, u, sigma);
  }
  double kappa = model.correlation().kappa;
  if (cfg.kappa_override) kappa = *cfg.kappa_override;
  return LimitLawSpec::long_range(eff.a_bar, cfg.q_bar, u, kappa, model.alpha());
}

int cmd_corrector(const ExperimentConfig& cfg) {
  OutputSink sink = make_sink(cfg);
  const TorusField A = cfg.make_coefficients();
  const EffectiveModel eff = effective_model(A, cfg.q_bar);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eff.a_bar, Eigen::EigenvaluesOnly);
  std::printf("effective matrix a_bar:\n");
  for (int i = 0; i < eff.a_bar.rows(); ++i) {
    for (int j = 0; j < eff.a_bar.cols(); ++j) std::printf("  % .10f", eff.a_bar(i, j));
    std::printf("\n");
  }
  std::printf("eigenvalues:");
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    std::printf(" %.10f", es.eigenvalues()(i));
  std::printf("\n");

  json j;
  j["a_bar"] = matrix_json(eff.a_bar);
  json eig = json::array();
  for (int i = 0; i < es.eigenvalues().size(); ++i) eig.push_back(es.eigenvalues()(i));
  j["eigenvalues"] = std::move(eig);
  j["q_bar"] = cfg.q_bar;
  j["cell_resolution"] = A.m();
  j["lambda"] = A.lambda();
  j["Lambda"] = A.Lambda();
  double max_abs = 0.0, max_mean = 0.0;
  for (const auto& chi : eff.correctors) {
    max_abs = std::max(max_abs, chi.max_abs());
    max_mean = std::max(max_mean, std::abs(chi.mean()));
  }
  j["correctors_zero"] = max_abs <= 1e-8;
  j["corrector_max_abs"] = max_abs;
  j["corrector_max_mean"] = max_mean;
  for (std::size_t k = 0; k < eff.correctors.size(); ++k)
    write_cell_field(sink.file("chi" + std::to_string(k + 1), "bin"), eff.correctors[k]);
  write_text(sink.file("abar", "json"), j.dump(2));
  sink.finish();
  if (max_abs <= 1e-8) std::printf("correctors are zero to tolerance\n");
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  OutputSink sink = make_sink(cfg);
  SweepConfig sc = cfg.make_sweep_config();
  sc.effective = effective_model(sc.A, cfg.q_bar);
  const SweepResult res = run_sweep(sc);

  bool any_failed = false;
  for (const auto& r : res.records)
    if (r.failed) {
      any_failed = true;
      std::fprintf(stderr, "eps level %.6g failed: %s\n", r.eps, r.error.c_str());
    }

  std::vector<double> eps;
  const auto periodic = collect(res, [](const EpsRecord& r) { return r.periodic_error; }, eps);
  const auto mean_err = collect(res, [](const EpsRecord& r) { return r.mean_error; }, eps);
  const auto energy = collect(res, [](const EpsRecord& r) { return r.energy_fluct_mean; }, eps);
  const auto wnorm = collect(res, [](const EpsRecord& r) { return r.w_norm_mean; }, eps);
  const auto second = collect(res, [](const EpsRecord& r) { return r.second_centered_mean; }, eps);

  json j;
  j["config_hash"] = cfg.hash();
  j["kind"] = cfg.potential_kind;
  j["summary"] = json::parse(res.to_json());
  json fits;
  json fitpoints;
  const double gamma = res.fluct_exponent;
  const bool short_range = cfg.potential_kind == "short_range";
  const double band = short_range ? 0.2 : 0.15;
  bool all_pass = true;
  double energy_slope = 0.0, w_slope = 0.0;
  if (eps.size() >= 3) {
    const auto f_per = fit_scaling(periodic, eps);
    auto v = slope_verdict(f_per, 1.0, 0.85, 1.15);
    v.pass = v.pass && f_per.r2 > 0.98;
    fits["periodic_rate"] = v.to_json();
    all_pass &= v.pass;

    const auto f_mean = fit_scaling(mean_err, eps);
    fits["mean_error"] = slope_verdict(f_mean, 1.0, 0.8, 1.2).to_json();
    all_pass &= fits["mean_error"]["pass"].get<bool>();

    const auto f_energy = fit_scaling(energy, eps);
    fits["energy_fluct"] = slope_verdict(f_energy, gamma, gamma - band, gamma + band).to_json();
    all_pass &= fits["energy_fluct"]["pass"].get<bool>();
    energy_slope = f_energy.slope;

    const auto f_w = fit_scaling(wnorm, eps);
    fits["leading_term"] = slope_verdict(f_w, gamma, gamma - band, gamma + band).to_json();
    w_slope = f_w.slope;

    const auto f_second = fit_scaling(second, eps);
    SlopeVerdict v2 = slope_verdict(f_second, 2.0 * gamma, 1.6, 1e9);
    v2.pass = f_second.slope >= 1.6 && f_second.slope - w_slope >= 0.5;
    fits["second_term"] = v2.to_json();
    fits["second_term"]["exceeds_leading_by"] = f_second.slope - w_slope;
    if (short_range) all_pass &= v2.pass;

    auto points_json = [&](const char* name, const ScalingFit& f) {
      json arr = json::array();
      for (const auto& [x, y] : f.points) arr.push_back({x, y});
      fitpoints[name] = std::move(arr);
    };
    points_json("periodic_rate", f_per);
    points_json("mean_error", f_mean);
    points_json("energy_fluct", f_energy);
    points_json("leading_term", f_w);
    points_json("second_term", f_second);
  }

  // Weak-topology statistics per test function.
  json weak = json::array();
  for (std::size_t p = 0; p < sc.test_functions.size(); ++p) {
    const auto ws = weak_pairing_stats(res, static_cast<int>(p));
    json entry;
    entry["phi_index"] = p;
    entry["variance"] = ws.variance;
    entry["variance_se"] = ws.variance_se;
    entry["scaled_variance"] = ws.scaled_variance;
    entry["scaled_variance_se"] = ws.scaled_variance_se;
    entry["skewness"] = ws.skewness;
    if (ws.sd.size() >= 3) {
      const auto f_sd = fit_scaling(ws.sd, eps);
      entry["sd_slope"] = slope_verdict(f_sd, gamma, gamma - band, gamma + band).to_json();
      if (p == 0) all_pass &= entry["sd_slope"]["pass"].get<bool>();
    }
    if (ws.scaled_variance.size() >= 2) {
      const std::size_t m = ws.scaled_variance.size();
      const double a = ws.scaled_variance[m - 2], b = ws.scaled_variance[m - 1];
      const double rel = std::abs(a - b) / std::max(std::abs(b), 1e-300);
      entry["plateau_rel_change"] = rel;
      entry["plateau_pass"] = rel < 0.30;
      if (p == 0) all_pass &= rel < 0.30;
    }
    weak.push_back(std::move(entry));
  }
  j["weak_pairings"] = std::move(weak);

  const auto tight = tightness_diagnostic(res);
  j["tightness"] = {{"s", tight.s}, {"per_eps", tight.per_eps}, {"ratio", tight.ratio},
                    {"pass", tight.ratio < 3.0}};
  all_pass &= tight.ratio < 3.0;
  j["fits"] = std::move(fits);
  j["all_pass"] = all_pass;

  write_text(sink.file("sweep_summary", "json"), j.dump(2));
  write_text(sink.file("sweep_fitpoints", "json"), fitpoints.dump(2));
  res.write_pairings_csv(sink.file("sweep_pairings", "csv").string());

  // Scaled projections of the smallest eps level, the empirical side of the
  // limit-law comparison.
  for (auto it = res.records.rbegin(); it != res.records.rend(); ++it) {
    if (it->failed) continue;
    ProjectionSample proj;
    proj.law_tag = "empirical_eps";
    proj.n_phi = static_cast<int>(it->pairings.size());
    proj.values = it->pairings;
    const double scale = std::pow(it->eps, -res.fluct_exponent);
    for (auto& column : proj.values)
      for (double& v : column) v *= scale;
    proj.write_csv(sink.file("sweep_projections", "csv").string());
    break;
  }

  // Per-eps records as a flat CSV for plotting.
  {
    std::ofstream os(sink.file("sweep_records", "csv"));
    os << "eps,periodic_error,mean_error,energy_fluct_mean,energy_fluct_se,"
          "w_norm_mean,second_centered_mean,residual_norm_mean,hs_diag_mean,"
          "identity_residual\n";
    char buf[320];
    for (const auto& r : res.records) {
      if (r.failed) continue;
      std::snprintf(buf, sizeof buf,
                    "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    r.eps, r.periodic_error, r.mean_error, r.energy_fluct_mean,
                    r.energy_fluct_se, r.w_norm_mean, r.second_centered_mean,
                    r.residual_norm_mean, r.hs_diag_mean, r.identity_residual);
      os << buf;
    }
  }
  sink.finish();
  std::printf("sweep verdicts: %s\n", all_pass ? "PASS" : "FAIL");
  if (any_failed) return 1;
  return 0;
}

int cmd_limitlaw(const ExperimentConfig& cfg) {
  OutputSink sink = make_sink(cfg);
  const fs::path proj_path =
      fs::path(cfg.out_dir) / ("sweep_projections_" + sink.tag + ".csv");
  if (!fs::exists(proj_path))
    throw std::runtime_error(
        "missing sweep outputs for this config (" + proj_path.string() +
        "); run `homlab sweep --config <same config>` first");
  const ProjectionSample empirical = ProjectionSample::read_csv(proj_path.string());

  const Grid grid = cfg.make_limit_grid();
  const TorusField A = cfg.make_coefficients();
  const EffectiveModel eff = effective_model(A, cfg.q_bar);
  const LimitLawSpec spec = build_limit_spec(cfg, grid, eff);
  const auto phis = cfg.make_test_functions(grid);

  LimitLawSampler sampler(spec);
  std::vector<GridFunction> fields;
  fields.reserve(cfg.limit_samples);
  for (int i = 0; i < cfg.limit_samples; ++i)
    fields.push_back(sampler.sample(
        mix_seed({cfg.seed, 0x11417ULL, static_cast<std::uint64_t>(i)})));
  const ProjectionSample limit_proj = project_fields(fields, phis, "limit");
  limit_proj.write_csv(sink.file("limit_projections", "csv").string());

  const Eigen::MatrixXd cov_quad = covariance_matrix_quadrature(spec, phis);
  Eigen::MatrixXd cov_emp(phis.size(), phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i)
    for (std::size_t k = 0; k < phis.size(); ++k) {
      double acc = 0.0, mi = 0.0, mk = 0.0;
      const auto& a = limit_proj.values[i];
      const auto& b = limit_proj.values[k];
      for (double v : a) mi += v;
      for (double v : b) mk += v;
      mi /= a.size();
      mk /= b.size();
      for (std::size_t r = 0; r < a.size(); ++r) acc += (a[r] - mi) * (b[r] - mk);
      cov_emp(i, k) = acc / (a.size() - 1.0);
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_quad, Eigen::EigenvaluesOnly);
  const bool psd = es.eigenvalues().minCoeff() >= -1e-12 * cov_quad.trace();
  double max_rel = 0.0;
  for (int i = 0; i < cov_quad.rows(); ++i)
    for (int k = 0; k < cov_quad.cols(); ++k)
      max_rel = std::max(max_rel, std::abs(cov_emp(i, k) - cov_quad(i, k)) /
                                      std::abs(cov_quad(i, k)));

  const auto report = compare_distributions(empirical, limit_proj);

  // Self-consistency: the limit law against an independent resample.
  std::vector<GridFunction> refields;
  const int n_ref = std::max(200, cfg.limit_samples / 10);
  refields.reserve(n_ref);
  for (int i = 0; i < n_ref; ++i)
    refields.push_back(sampler.sample(
        mix_seed({cfg.seed, 0x5E1FULL, static_cast<std::uint64_t>(i)})));
  const auto self_report =
      compare_distributions(project_fields(refields, phis, "limit"), limit_proj);

  json j;
  j["kind"] = spec.kind;
  j["sigma"] = spec.sigma;
  j["kappa"] = spec.kappa;
  j["alpha"] = spec.alpha;
  j["lag0_regularization"] =
      spec.kind == "long_range"
          ? json(spec.kappa * std::pow(grid.h(), -spec.alpha) *
                 riesz_cell_integral(grid.dim, spec.alpha))
          : json(nullptr);
  j["covariance_quadrature"] = matrix_json(cov_quad);
  j["covariance_empirical"] = matrix_json(cov_emp);
  j["covariance_max_rel_error"] = max_rel;
  j["covariance_pass"] = max_rel < 0.10;
  j["psd"] = psd;
  j["comparison"] = json::parse(report.to_json());
  j["self_consistency"] = json::parse(self_report.to_json());
  const bool pass = report.pass && psd && max_rel < 0.10;
  j["pass"] = pass;
  write_text(sink.file("limitlaw_report", "json"), j.dump(2));
  sink.finish();
  std::printf("limit-law verdict: %s\n", pass ? "PASS" : "FAIL");
  return 0;
}

int cmd_fieldcheck(const ExperimentConfig& cfg) {
  OutputSink sink = make_sink(cfg);
  const PotentialModel model = cfg.make_model();
  json j;
  j["kind"] = cfg.potential_kind;

  if (model.is_short_range()) {
    std::vector<LatticeField> fields;
    fields.reserve(cfg.fc_realizations);
    for (int i = 0; i < cfg.fc_realizations; ++i)
      fields.push_back(sample_short_range_lattice(
          model, cfg.fc_lattice_n, cfg.fc_spacing,
          mix_seed({cfg.seed, 0xF1E1DULL, static_cast<std::uint64_t>(i)})));
    const auto corr = empirical_autocorrelation(fields, cfg.fc_max_lag);
    corr.write_csv(sink.file("fieldcheck_autocorr", "csv").string());
    const double sig2 = model.sigma2();
    j["sigma2_analytic"] = sig2;
    j["sigma2_empirical"] = corr.sigma2;
    j["sigma2_se"] = corr.sigma2_se;
    j["sigma2_rel_error"] = std::abs(corr.sigma2 - sig2) / sig2;
    j["sigma2_pass"] = std::abs(corr.sigma2 - sig2) / sig2 < 0.02;
    // Compact support: beyond 2 * bump_radius the correlation is zero.
    double worst = 0.0;
    const int K = corr.max_lag_pts;
    std::array<int, 3> lag{0, 0, 0};
    const int zlo = model.dim() == 3 ? -K : 0, zhi = model.dim() == 3 ? K : 0;
    for (lag[2] = zlo; lag[2] <= zhi; ++lag[2])
      for (lag[1] = -K; lag[1] <= K; ++lag[1])
        for (lag[0] = -K; lag[0] <= K; ++lag[0]) {
          double d2 = 0;
          for (int a = 0; a < model.dim(); ++a)
            d2 += corr.spacing * corr.spacing * lag[a] * lag[a];
          if (std::sqrt(d2) <= 2.0 * model.bump_radius() + 1e-9) continue;
          const std::size_t idx = corr.lag_index(lag, model.dim());
          worst = std::max(worst,
                           std::abs(corr.r_hat[idx]) / std::max(corr.r_hat_se[idx], 1e-300));
        }
    j["compact_support_worst_se"] = worst;
    j["compact_support_pass"] = worst <= 3.0;
    const auto R = [&](double d) { return model.analytic_R(d); };
    const auto fourth = fourth_moment_check(fields, cfg.fc_quadruples,
                                            mix_seed({cfg.seed, 0x4447ULL}), R, R, 2.0);
    j["fourth_moment_violations"] = fourth.violations;
    j["fourth_moment_pass"] = fourth.pass;
  } else {
    const auto hermite = hermite_coefficients(model.phi());
    j["hermite"] = {{"mean_integral", hermite.mean_integral},
                    {"V1_raw", hermite.v1_raw},
                    {"V1", hermite.v1},
                    {"rank_ok", hermite.rank_ok}};
    if (!hermite.rank_ok)
      j["hermite"]["message"] =
          "Hermite gate FAIL: rank >= 2 (or nonzero Gaussian mean); V1 vanished";

    GaussianLatticeSampler gauss(model.dim(), cfg.fc_lattice_n, model.alpha(),
                                 model.kappa_g());
    std::vector<LatticeField> g_fields, nu_fields;
    g_fields.reserve(cfg.fc_realizations);
    nu_fields.reserve(cfg.fc_realizations);
    const double nu_mean = hermite.mean_integral / 2.5066282746310005;
    for (int i = 0; i < cfg.fc_realizations; ++i) {
      g_fields.push_back(gauss.sample(
          mix_seed({cfg.seed, 0xF1E1DULL, static_cast<std::uint64_t>(i)})));
      LatticeField nu = g_fields.back();
      for (double& v : nu.values) v = model.phi()(v) - nu_mean;
      nu_fields.push_back(std::move(nu));
    }
    const auto corr_g = empirical_autocorrelation(g_fields, cfg.fc_max_lag);
    const auto corr_nu = empirical_autocorrelation(nu_fields, cfg.fc_max_lag);
    corr_g.write_csv(sink.file("fieldcheck_autocorr_g", "csv").string());
    corr_nu.write_csv(sink.file("fieldcheck_autocorr_nu", "csv").string());

    // Tail slope of the underlying Gaussian field over [5, max_lag].
    {
      std::vector<double> dist, val;
      const int K = corr_g.max_lag_pts;
      std::array<int, 3> lag{0, 0, 0};
      for (lag[1] = -K; lag[1] <= K; ++lag[1])
        for (lag[0] = -K; lag[0] <= K; ++lag[0]) {
          const double mag = std::sqrt(static_cast<double>(lag[0]) * lag[0] +
                                       static_cast<double>(lag[1]) * lag[1]);
          if (mag < 5.0 || mag > K) continue;
          dist.push_back(mag);
          val.push_back(corr_g.r_hat[corr_g.lag_index(lag, 2)]);
        }
      const double slope = log_log_slope(dist, val);
      j["g_tail_slope"] = slope;
      j["g_tail_slope_pass"] = std::abs(slope + model.alpha()) <= 0.2;
    }

    const auto R_g = [&](double d) { return model.covariance_g(d); };
    const auto tail = tail_check(corr_nu, R_g, hermite.v1);
    j["tail_check"] = {{"fitted_C", tail.fitted_C},
                       {"max_violation_se", tail.max_violation_se},
                       {"window_points", tail.window_points},
                       {"tail_slope", tail.tail_slope},
                       {"pass", tail.pass},
                       {"message", tail.message}};

    // Isserlis fourth-moment check on the Gaussian field itself.
    const auto fourth =
        fourth_moment_check(g_fields, cfg.fc_quadruples,
                            mix_seed({cfg.seed, 0x4447ULL}), R_g, R_g, 1.0);
    int isserlis_bad = 0;
    for (const auto& q : fourth.quadruples)
      if (std::abs(q.psi_hat - q.gauss_value) > 3.0 * q.se) ++isserlis_bad;
    j["isserlis_violations"] = isserlis_bad;
    j["isserlis_pass"] = isserlis_bad <= 2;
    j["fourth_moment_violations"] = fourth.violations;
  }

  write_text(sink.file("fieldcheck_report", "json"), j.dump(2));
  sink.finish();
  std::printf("fieldcheck report written\n");
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"homlab: numerical laboratory for elliptic homogenization with random potential"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  int jobs_override = 0;
  std::string out_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--jobs", jobs_override, "worker pool size");
    sub->add_option("--out", out_override, "override the output directory");
  };

  auto* c_corr = app.add_subcommand("corrector", "cell correctors and effective matrix");
  auto* c_sweep = app.add_subcommand("sweep", "Monte-Carlo eps sweep and scaling fits");
  auto* c_limit = app.add_subcommand("limitlaw", "limit-law sampling and distribution comparison");
  auto* c_field = app.add_subcommand("fieldcheck", "random-field statistical validators");
  for (auto* sub : {c_corr, c_sweep, c_limit, c_field}) add_common(sub);

  std::vector<const char*> argv;
  argv.push_back("homlab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
    if (has_seed) cfg.seed = seed_override;
    if (jobs_override > 0) cfg.jobs = jobs_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    cfg.validate();
    if (c_corr->parsed()) return cmd_corrector(cfg);
    if (c_sweep->parsed()) return cmd_sweep(cfg);
    if (c_limit->parsed()) return cmd_limitlaw(cfg);
    if (c_field->parsed()) return cmd_fieldcheck(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace homlab::cli
