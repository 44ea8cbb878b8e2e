#pragma once

#include <stdexcept>
#include <string>

#include "hilbex/expansion.hpp"

namespace hilbex {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& what)
      : std::runtime_error("config error at " + f + ": " + what), field(std::move(f)) {}
};

enum class SweepParameter { Epsilon, Delta };

// Shape parameters of the initial Euler perturbation. The default bump family
// has zero slope at the wall so that zero layer data is compatible at t = 0;
// the wall_slope variant starts with nonzero wall gradients.
struct InitSpec {
  double center = 1.5;
  double width = 0.9;
  double amp_rho = 0.5;
  double amp_u1 = 0.4;
  double amp_u2 = -0.3;
  double amp_u3 = 0.6;
  double amp_T = 0.5;
  bool wall_slope = true;

  EulerInit build() const;
};

struct Scenario {
  std::string name = "scenario";
  ExpansionConfig expansion;
  InitSpec init;
  SweepParameter sweep_parameter = SweepParameter::Epsilon;
  std::vector<double> sweep_values;
  bool acoustic_enabled = false;
  std::vector<double> acoustic_deltas;
  bool acoustic_kinetic = true;
  std::string output_dir = "out";
  std::uint64_t seed = 42;

  nlohmann::json echo;  // canonical configuration echo
  std::string config_hash;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario_file(const std::string& path);

// least-squares slope in log-log coordinates; rejects < 3 points or
// non-positive values
SlopeFit fit_slope(const std::vector<double>& param, const std::vector<double>& norm);

}  // namespace hilbex
