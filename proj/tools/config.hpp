#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "slipflow/dynamics.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/operators.hpp"

namespace slipflow::cli {

/// Malformed file, unknown section or key, or a value that does not parse.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RateKind { Mu1, Sigma1 };

struct ExperimentConfig {
  // [geometry]
  geometry::GeometryDescriptor geometry;

  // [discretization]
  int l_max = 4;
  int n_max = 2;
  std::optional<GridOrders> bilinear;
  std::optional<GridOrders> nonlinear;
  std::optional<int> refine_l_max;

  // [physics]
  double nu = 0.1;
  operators::FrictionSpec alpha;

  // [run]
  dynamics::SimulationConfig run;
  RateKind rate = RateKind::Mu1;
  bool check_steady = false;
  double steady_tolerance = 1e-8;

  // [output]
  std::filesystem::path output_dir = "out";
  bool plot = false;

  /// Every key with its effective value, defaults included.
  std::map<std::string, std::map<std::string, std::string>> resolved;

  operators::OperatorOptions operator_options(bool advection) const;
};

/// Parses an INI document. Geometry validity is not checked here.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Re-derives `resolved` after command-line overrides.
void refresh_resolved(ExperimentConfig& config);

}  // namespace slipflow::cli
