#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coclab {

/// Everything a CLI run needs. Text form is INI-like:
///
///   [base]
///   matrix = 41 32 32 25
///   [cocycle]
///   kind = example46
///   epsilon = 0.1
///   [run]
///   grid = 64
///
/// '#' starts a comment. Lists are whitespace separated except
/// cocycle.entries, whose expressions are separated by ';'.
struct ExperimentConfig {
  // [base]
  std::vector<std::int64_t> base_matrix;  // row-major, square
  std::vector<std::int64_t> lattice;      // periods; empty = all 1
  double leaf_radius = 0;                 // 0 = a quarter of the shortest period

  // [cocycle]
  std::string kind;          // constant | conformal | expression | example46
  std::string lift = "torus";  // example46 only: torus | cover2 | cover4
  double epsilon = 0.1;
  std::vector<double> matrix;         // constant
  std::vector<std::string> entries;   // expression, row-major
  double beta = 1;
  double scale_amplitude = 0.3;       // conformal
  double rotation_offset = 1;
  std::vector<double> frame{1, 0, 0, 1};

  // [run]
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  int grid = 64;
  long orbit_length = 1'000'000;
  int samples = 8;
  double tol = 1e-8;
  int max_period = 4;
  long periodic_cap = 20000;
  long n_max = 64;
  double xi = 0;
  double eps = 0.05;
  double level_rate = 0.3;
  long level_max = 200;
  int window = 64;
  double distortion_cap = 100;
  std::string barycenter = "ball";  // ball | karcher
  int n_lo = 4;
  int n_hi = 14;
  int triples = 100;
  double leaf_distance = 1e-2;
  int monodromy_steps = 64;
  long pair_max_steps = 200000;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws Error(ConfigParse) naming the line, section or key at fault.
/// Unknown sections and keys are rejected; required keys (base.matrix,
/// cocycle.kind) must be present.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text with every key; parse_config inverts it exactly.
std::string serialize_config(const ExperimentConfig& cfg);

/// Applies PREFIX<SECTION>_<KEY> variables (upper case), e.g.
/// COCLAB_RUN_SEED=7. Returns the names of the keys overridden.
std::vector<std::string> apply_env_overrides(
    ExperimentConfig& cfg, const std::string& prefix = "COCLAB_",
    const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

/// "section.key" for every known key, in canonical order.
std::vector<std::string> config_keys();

/// Sets one key from its text value with the same validation as parsing.
void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& dotted_key);

}  // namespace coclab
