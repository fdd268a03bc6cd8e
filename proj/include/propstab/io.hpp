#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "propstab/analyzer.hpp"
#include "propstab/simulator.hpp"

namespace propstab::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct SimulationOptions {
  double dt = 0.01;
  double horizon = 100.0;
  double rel_tol = kMajorizationRelTol;
  std::uint64_t seed = 0;
};

/// Parsed network description: the model plus optional disturbance and options.
struct NetworkSpec {
  NetworkModel model;
  /// Set when the subsystem was given as the planar template.
  std::optional<double> planar_d;
  std::optional<DisturbanceSignal> disturbance;
  AnalysisOptions analysis;
  SimulationOptions simulation;
};

/// Strict parse: unknown keys, wrong types and out-of-range ids are SchemaError.
NetworkSpec parse_network(const json& doc);
NetworkSpec parse_network_text(const std::string& text);
NetworkSpec parse_network_file(const std::filesystem::path& path);

json serialize_network(const NetworkSpec& spec);

json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const json& j, const std::string& field);

json disturbance_to_json(const DisturbanceSignal& w);
DisturbanceSignal disturbance_from_json(const json& j);

json options_to_json(const AnalysisOptions& analysis, const SimulationOptions& simulation);

/// Reports use 1-based vertex ids.
json report_to_json(const StabilityReport& report);
json impervious_to_json(const ImperviousReport& report);
json manifold_to_json(const ManifoldReport& report);

/// Decimal text with 17 significant digits.
std::string format_double(double v);

/// Exit code for the certify command: 0 stable, 2 unstable, 3 undecided.
int exit_code(CertificateStatus status);

}  // namespace propstab::io
