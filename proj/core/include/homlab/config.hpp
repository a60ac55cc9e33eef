#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homlab/potential.hpp"
#include "homlab/sweep.hpp"
#include "homlab/torus_field.hpp"

namespace homlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed experiment configuration. The canonical serialization (sorted keys,
// normalized numbers) defines the config hash embedded in output file names.
struct ExperimentConfig {
  // grid
  int dim = 2;
  int n = 255;
  // coefficients
  std::string pattern = "sin-layered";  // or empty when file is set
  std::string coefficient_file;
  int cell_resolution = 512;
  // potential
  std::string potential_kind = "short_range";
  double q_bar = 1.0;
  double M = 2.0;
  double bump_radius = 1.0;
  std::optional<double> target_sd;
  double alpha = 1.0;
  double kappa_g = 1.0;
  std::string phi_kind = "tanh";
  double phi_amplitude = 0.0;  // 0: use min(q_bar, M - q_bar)
  double phi_skew = 0.0;
  // sweep
  std::vector<double> eps_list{0.125, 0.0625, 0.03125, 0.015625};
  int n_realizations = 400;
  int n_neumann = 100;
  std::string source_name = "sine";
  std::vector<std::string> test_function_names{"const", "sine", "bump"};
  double s_diag = 0.25;
  bool common_random_numbers = false;
  int min_cells_per_period = 8;
  // limit law
  int limit_samples = 10000;
  int limit_grid_n = 255;
  std::optional<double> sigma_override;  // misspecification sentinels
  std::optional<double> kappa_override;
  // fieldcheck
  int fc_lattice_n = 160;
  int fc_realizations = 200;
  int fc_max_lag = 40;
  int fc_quadruples = 100;
  double fc_spacing = 1.0;
  // output
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string canonical_json() const;
  std::string hash() const;  // FNV-1a 64 of the canonical serialization, hex

  // Cross-field invariants; throws ConfigError naming the violated one.
  void validate() const;

  // Builders for the runtime objects.
  Grid make_grid() const;
  Grid make_limit_grid() const;
  TorusField make_coefficients() const;
  PotentialModel make_model() const;
  GridFunction make_source(const Grid& grid) const;
  std::vector<GridFunction> make_test_functions(const Grid& grid) const;
  SweepConfig make_sweep_config() const;
};

// Named reference fields on a grid.
GridFunction named_source(const std::string& name, const Grid& grid);
GridFunction named_test_function(const std::string& name, const Grid& grid);

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string started;   // wall-clock; excluded from determinism comparisons
  std::string finished;
  std::vector<std::string> outputs;  // file names, each carrying the hash

  void write(const std::string& path) const;
};

std::uint64_t fnv1a64(std::string_view data);

}  // namespace homlab
