#pragma once

// Strict JSON run configuration. Every optional key is materialized on
// parse, so a serialized config carries no implicit state.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fermi/classical.hpp"
#include "fermi/model.hpp"
#include "fermi/quantum.hpp"

namespace fermi {

enum class Engine { classical_hard, classical_soft, quantum, standard_map };

std::string_view engine_name(Engine e);
std::optional<Engine> parse_engine(std::string_view name);

struct LambdaRange {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
};

struct GridConfig {
  double z_min = 0.0;
  double z_max = 0.0;
  std::size_t n_points = 0;
};

struct QuantumConfig {
  double kbar = 1.0;
  double v0 = 1.0;
  double kappa = 4.0;
  std::optional<GridConfig> grid;  // auto-sized when absent on input
  double dt = 2e-3;
  double absorber_frac = 0.1;
  bool absorber_on = true;
};

struct RunConfig {
  Engine engine = Engine::classical_hard;
  /// Exactly one of these is set.
  std::optional<double> lambda;
  std::optional<LambdaRange> lambda_range;
  double t_final = 0.0;
  std::uint64_t seed = 0;
  EnsembleSpec ensemble;
  QuantumConfig quantum;
  std::size_t samples = 301;
  std::string output_dir = "out";
  std::optional<PhysicalParams> physical;

  std::vector<double> lambdas() const;
  DimensionlessParams params(double lambda) const;
  PropagatorConfig propagator() const;
};

/// Parses and validates; errors name the key, the expected type and the line.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical JSON (two-space indent, keys in schema order).
std::string config_to_json(const RunConfig& cfg);

/// Closest allowed key within edit distance 2, if any.
std::optional<std::string> suggest_key(std::string_view key, const std::vector<std::string>& allowed);

}  // namespace fermi
