#include "homlab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace homlab {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;

using nlohmann::json;

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config parse error: ") + ex.what());
  }
  ExperimentConfig c;
  if (j.contains("grid")) {
    read_if(j["grid"], "dim", c.dim);
    read_if(j["grid"], "n", c.n);
  }
  if (j.contains("coefficients")) {
    const auto& co = j["coefficients"];
    if (co.contains("file")) {
      c.coefficient_file = co.at("file").get<std::string>();
      c.pattern.clear();
    } else {
      read_if(co, "pattern", c.pattern);
    }
    read_if(co, "cell_resolution", c.cell_resolution);
  }
  if (j.contains("potential")) {
    const auto& p = j["potential"];
    read_if(p, "kind", c.potential_kind);
    read_if(p, "q_bar", c.q_bar);
    read_if(p, "M", c.M);
    read_if(p, "bump_radius", c.bump_radius);
    if (p.contains("target_sd") && !p["target_sd"].is_null())
      c.target_sd = p["target_sd"].get<double>();
    read_if(p, "alpha", c.alpha);
    read_if(p, "kappa_g", c.kappa_g);
    read_if(p, "phi", c.phi_kind);
    read_if(p, "phi_amplitude", c.phi_amplitude);
    read_if(p, "phi_skew", c.phi_skew);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    read_if(s, "eps", c.eps_list);
    read_if(s, "n_realizations", c.n_realizations);
    read_if(s, "n_neumann", c.n_neumann);
    read_if(s, "source", c.source_name);
    read_if(s, "test_functions", c.test_function_names);
    read_if(s, "s_diag", c.s_diag);
    read_if(s, "common_random_numbers", c.common_random_numbers);
    read_if(s, "min_cells_per_period", c.min_cells_per_period);
  }
  if (j.contains("limit")) {
    read_if(j["limit"], "n_samples", c.limit_samples);
    read_if(j["limit"], "grid_n", c.limit_grid_n);
    if (j["limit"].contains("sigma_override") && !j["limit"]["sigma_override"].is_null())
      c.sigma_override = j["limit"]["sigma_override"].get<double>();
    if (j["limit"].contains("kappa_override") && !j["limit"]["kappa_override"].is_null())
      c.kappa_override = j["limit"]["kappa_override"].get<double>();
  }
  if (j.contains("fieldcheck")) {
    const auto& f = j["fieldcheck"];
    read_if(f, "lattice_n", c.fc_lattice_n);
    read_if(f, "n_realizations", c.fc_realizations);
    read_if(f, "max_lag", c.fc_max_lag);
    read_if(f, "n_quadruples", c.fc_quadruples);
    read_if(f, "spacing", c.fc_spacing);
  }
  if (j.contains("output")) read_if(j["output"], "dir", c.out_dir);
  read_if(j, "seed", c.seed);
  read_if(j, "jobs", c.jobs);
  return c;
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["grid"] = {{"dim", dim}, {"n", n}};
  if (!coefficient_file.empty())
    j["coefficients"] = {{"file", coefficient_file}, {"cell_resolution", cell_resolution}};
  else
    j["coefficients"] = {{"pattern", pattern}, {"cell_resolution", cell_resolution}};
  json p{{"kind", potential_kind}, {"q_bar", q_bar}, {"M", M}};
  if (potential_kind == "short_range") {
    p["bump_radius"] = bump_radius;
    if (target_sd) p["target_sd"] = *target_sd;
  } else {
    p["alpha"] = alpha;
    p["kappa_g"] = kappa_g;
    p["phi"] = phi_kind;
    p["phi_amplitude"] = phi_amplitude;
    p["phi_skew"] = phi_skew;
  }
  j["potential"] = std::move(p);
  j["sweep"] = {{"eps", eps_list},
                {"n_realizations", n_realizations},
                {"n_neumann", n_neumann},
                {"source", source_name},
                {"test_functions", test_function_names},
                {"s_diag", s_diag},
                {"common_random_numbers", common_random_numbers},
                {"min_cells_per_period", min_cells_per_period}};
  j["limit"] = {{"n_samples", limit_samples}, {"grid_n", limit_grid_n}};
  if (sigma_override) j["limit"]["sigma_override"] = *sigma_override;
  if (kappa_override) j["limit"]["kappa_override"] = *kappa_override;
  j["fieldcheck"] = {{"lattice_n", fc_lattice_n},
                     {"n_realizations", fc_realizations},
                     {"max_lag", fc_max_lag},
                     {"n_quadruples", fc_quadruples},
                     {"spacing", fc_spacing}};
  j["seed"] = seed;
  // out_dir and jobs do not affect results and stay out of the hash.
  return j.dump();
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json())));
  return buf;
}

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("grid.dim must be 2 or 3");
  if (n < 7) throw ConfigError("grid.n too small");
  if (pattern.empty() && coefficient_file.empty())
    throw ConfigError("coefficients: need a pattern or a file");
  if (cell_resolution < 8) throw ConfigError("coefficients.cell_resolution too small");
  if (q_bar < 0 || q_bar > M)
    throw ConfigError("potential: invariant 0 <= q_bar <= M violated");
  if (potential_kind == "long_range") {
    if (!(alpha > 0) || !(alpha < dim))
      throw ConfigError("potential.alpha: invariant 0 < alpha < d violated");
    if (!(kappa_g > 0)) throw ConfigError("potential.kappa_g must be positive");
  } else if (potential_kind != "short_range") {
    throw ConfigError("potential.kind must be short_range or long_range");
  }
  if (eps_list.empty()) throw ConfigError("sweep.eps must be nonempty");
  double prev = 1e300;
  for (double eps : eps_list) {
    if (!(eps > 0) || eps >= prev)
      throw ConfigError("sweep.eps must be positive and strictly descending");
    prev = eps;
    const double inv = 1.0 / eps;
    if (std::abs(inv - std::round(inv)) > 1e-9)
      throw ConfigError("sweep.eps: 1/eps must be an integer (lattice alignment)");
    const int per = static_cast<int>(std::round(inv));
    if ((n + 1) % per != 0)
      throw ConfigError("sweep.eps: 1/eps must divide n+1 (lattice alignment)");
    if ((n + 1) / per < min_cells_per_period)
      throw ConfigError("sweep.eps: resolution rule h <= eps/" +
                        std::to_string(min_cells_per_period) + " violated");
  }
  if (n_realizations < 50) throw ConfigError("sweep.n_realizations must be >= 50");
  if (n_neumann < 2) throw ConfigError("sweep.n_neumann must be >= 2");
  if (!(s_diag >= 0.0) || s_diag >= 0.5)
    throw ConfigError("sweep.s_diag must lie in [0, 1/2)");
  if (limit_samples < 200) throw ConfigError("limit.n_samples must be >= 200");
  if (limit_grid_n < 7) throw ConfigError("limit.grid_n too small");
  if (fc_max_lag * 4 > fc_lattice_n)
    throw ConfigError("fieldcheck.max_lag exceeds a quarter of the lattice extent");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

Grid ExperimentConfig::make_grid() const { return Grid(dim, n); }
Grid ExperimentConfig::make_limit_grid() const { return Grid(dim, limit_grid_n); }

TorusField ExperimentConfig::make_coefficients() const {
  if (!coefficient_file.empty()) return TorusField::load(coefficient_file);
  return TorusField::pattern(pattern, dim, cell_resolution);
}

PotentialModel ExperimentConfig::make_model() const {
  if (potential_kind == "short_range")
    return PotentialModel::short_range(dim, q_bar, M, bump_radius, target_sd);
  const double amp = phi_amplitude > 0 ? phi_amplitude : std::min(q_bar, M - q_bar);
  return PotentialModel::long_range(dim, q_bar, M, alpha, kappa_g,
                                    PhiDescriptor::make(phi_kind, amp, phi_skew));
}

GridFunction named_source(const std::string& name, const Grid& grid) {
  if (name == "sine") {
    const double c = grid.dim * kPi * kPi;
    return GridFunction::sample(grid, [&](double x, double y, double z) {
      double v = c * std::sin(kPi * x) * std::sin(kPi * y);
      if (grid.dim == 3) v *= std::sin(kPi * z);
      return v;
    });
  }
  if (name == "constant") return GridFunction(grid, 1.0);
  throw ConfigError("unknown source: " + name);
}

GridFunction named_test_function(const std::string& name, const Grid& grid) {
  if (name == "const") return GridFunction(grid, 1.0);
  if (name == "sine") {
    return GridFunction::sample(grid, [&](double x, double y, double z) {
      double v = std::sin(kPi * x) * std::sin(kPi * y);
      if (grid.dim == 3) v *= std::sin(kPi * z);
      return v;
    });
  }
  if (name == "bump") {
    return GridFunction::sample(grid, [&](double x, double y, double z) {
      double v = 4.0 * x * (1.0 - x) * 4.0 * y * (1.0 - y);
      if (grid.dim == 3) v *= 4.0 * z * (1.0 - z);
      return v;
    });
  }
  throw ConfigError("unknown test function: " + name);
}

GridFunction ExperimentConfig::make_source(const Grid& grid) const {
  return named_source(source_name, grid);
}

std::vector<GridFunction> ExperimentConfig::make_test_functions(const Grid& grid) const {
  std::vector<GridFunction> out;
  for (const auto& name : test_function_names)
    out.push_back(named_test_function(name, grid));
  return out;
}

SweepConfig ExperimentConfig::make_sweep_config() const {
  SweepConfig s;
  s.grid = make_grid();
  s.A = make_coefficients();
  s.model = make_model();
  s.eps_list = eps_list;
  s.n_realizations = n_realizations;
  s.n_neumann = n_neumann;
  s.source = make_source(s.grid);
  s.test_functions = make_test_functions(s.grid);
  s.s_diag = s_diag;
  s.base_seed = seed;
  s.common_random_numbers = common_random_numbers;
  s.min_cells_per_period = min_cells_per_period;
  s.jobs = jobs;
  return s;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = outputs;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

}  // namespace homlab
