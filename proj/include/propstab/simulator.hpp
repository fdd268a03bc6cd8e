#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "propstab/analyzer.hpp"
#include "propstab/graph.hpp"
#include "propstab/lti.hpp"

namespace propstab {

/// a_c cos(w t + phi_c) on every channel c.
struct Tone {
  Vector amplitude;
  double omega;
  Vector phase;
};

/// a_c on [start, start + width), zero elsewhere.
struct Pulse {
  Vector amplitude;
  double start;
  double width;
};

/// Linear chirp a_c cos(w0 t + (w1 - w0) t^2 / (2 T)) on [0, T], zero afterwards.
struct Chirp {
  Vector amplitude;
  double omega0;
  double omega1;
  double duration;
};

/// Pre-sampled disturbance; one column per sample on the simulation grid.
struct Samples {
  Matrix values;
  double dt;
};

class DisturbanceSignal {
 public:
  using Kind = std::variant<Tone, Pulse, Chirp, Samples>;

  explicit DisturbanceSignal(Kind kind);

  static DisturbanceSignal tone(double amplitude, double omega, double phase = 0.0);
  static DisturbanceSignal pulse(double amplitude, double start, double width);
  static DisturbanceSignal chirp(double amplitude, double omega0, double omega1, double duration);

  const Kind& kind() const noexcept { return kind_; }
  std::size_t channels() const noexcept { return channels_; }

  /// Samples at t_k = k dt for k = 0..count-1, one column per sample.
  Matrix sample(double dt, std::size_t count) const;

  /// Multiplies every amplitude (or sample) by `factor`.
  DisturbanceSignal scaled(double factor) const;

 private:
  Kind kind_;
  std::size_t channels_;
};

/**
 * Stacked realization of the network with the disturbance entering at s:
 * A = I (x) A - alpha L (x) BC, B = e_s (x) B, C = I (x) C.
 */
StateSpace build_stacked_system(const NetworkModel& net, Vertex s);

/// Same for an explicit graph and coupling strength (alpha >= 0 allowed).
StateSpace build_stacked_system(const WeightedDigraph& graph, double alpha, const StateSpace& subsystem, Vertex s);

struct SimulationResult {
  double dt = 0.0;
  double horizon = 0.0;
  Vertex source = 0;
  std::size_t vertices = 0;
  std::size_t channels = 0;
  /// Row block v * channels .. (v + 1) * channels - 1 holds y_v; one column per sample.
  Matrix outputs;
  /// E_v over the whole horizon.
  std::vector<double> energies;
  std::optional<NetworkModel> network;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(outputs.cols()); }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
  auto output(Vertex v) const {
    return outputs.middleRows(static_cast<Eigen::Index>(v * channels), static_cast<Eigen::Index>(channels));
  }
};

inline constexpr double kMaxSamples = 1e7;

SimulationResult simulate(const NetworkModel& net, Vertex s, const DisturbanceSignal& w, double horizon, double dt);

struct EnergyProfile {
  std::vector<double> final;
  /// prefix(v, k) = E_v(t_k).
  Matrix prefix;
};

EnergyProfile energy_profile(const SimulationResult& result);

/// Composite trapezoidal integral of |y|^2 over uniform samples.
double trapezoid_energy(const Matrix& y, double dt);

struct MajorizationViolation {
  std::size_t cutset;
  Vertex far_vertex;
  double horizon;
  double far_energy;
  double cut_energy;
};

inline constexpr double kMajorizationRelTol = 1e-6;

/// Final horizon plus 8 logarithmically spaced prefix horizons, as sample indices.
std::vector<std::size_t> default_horizons(const SimulationResult& result);

std::vector<MajorizationViolation> check_majorization(const SimulationResult& result,
                                                      const std::vector<CutsetPartition>& cutsets,
                                                      double rel_tol = kMajorizationRelTol,
                                                      const std::vector<std::size_t>& horizons = {});

struct DistanceProfile {
  /// E(r) = max energy among vertices at hop distance r.
  std::vector<double> energy_by_distance;
  std::vector<Vertex> unreachable;
  bool non_increasing = true;
};

DistanceProfile distance_energy_profile(const SimulationResult& result, double rel_tol = kMajorizationRelTol);

struct PathCheck {
  Vertex vertex;
  bool monotone;
};

/// monotone_path_exists for every vertex reachable from the source, at the final horizon.
std::vector<PathCheck> check_paths(const SimulationResult& result, double rel_tol = kMajorizationRelTol);

struct FilteringCheck {
  double max_error;
  double max_output;
};

/**
 * Rebuilds y_i on [0, T] by filtering the in-degree weighted average of the
 * neighbour outputs (zero after T) through the local loop H_i from zero
 * state, and compares against the simulated y_i. Neighbour outputs are
 * interpolated linearly between samples.
 */
FilteringCheck filtering_identity_check(const SimulationResult& result, Vertex i, std::optional<double> horizon = {});

}  // namespace propstab
