#include "propstab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "propstab/error.hpp"

namespace propstab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(const Vector& v, const char* what) {
  if (v.size() < 1 || !v.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a finite, non-empty vector");
  }
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

DisturbanceSignal::DisturbanceSignal(Kind kind) : kind_(std::move(kind)), channels_(0) {
  channels_ = std::visit(
      Overloaded{
          [](const Tone& t) {
            require_finite(t.amplitude, "tone amplitude");
            if (t.phase.size() != t.amplitude.size() || !t.phase.allFinite()) {
              throw Error(ErrorCode::DimensionMismatch, "tone phase needs one entry per channel");
            }
            if (!std::isfinite(t.omega) || t.omega < 0.0) {
              throw Error(ErrorCode::InvalidArgument, "tone frequency must be finite and nonnegative");
            }
            return static_cast<std::size_t>(t.amplitude.size());
          },
          [](const Pulse& p) {
            require_finite(p.amplitude, "pulse amplitude");
            if (!std::isfinite(p.start) || !(p.width > 0.0) || !std::isfinite(p.width)) {
              throw Error(ErrorCode::InvalidArgument, "pulse needs finite start and positive width");
            }
            return static_cast<std::size_t>(p.amplitude.size());
          },
          [](const Chirp& c) {
            require_finite(c.amplitude, "chirp amplitude");
            if (!std::isfinite(c.omega0) || !std::isfinite(c.omega1) || !(c.duration > 0.0)) {
              throw Error(ErrorCode::InvalidArgument, "chirp needs finite frequencies and positive duration");
            }
            return static_cast<std::size_t>(c.amplitude.size());
          },
          [](const Samples& s) {
            if (s.values.rows() < 1 || !s.values.allFinite() || !(s.dt > 0.0)) {
              throw Error(ErrorCode::InvalidArgument, "sampled disturbance needs finite values and positive dt");
            }
            return static_cast<std::size_t>(s.values.rows());
          },
      },
      kind_);
}

DisturbanceSignal DisturbanceSignal::tone(double amplitude, double omega, double phase) {
  return DisturbanceSignal(Tone{scalar(amplitude), omega, scalar(phase)});
}

DisturbanceSignal DisturbanceSignal::pulse(double amplitude, double start, double width) {
  return DisturbanceSignal(Pulse{scalar(amplitude), start, width});
}

DisturbanceSignal DisturbanceSignal::chirp(double amplitude, double omega0, double omega1, double duration) {
  return DisturbanceSignal(Chirp{scalar(amplitude), omega0, omega1, duration});
}

Matrix DisturbanceSignal::sample(double dt, std::size_t count) const {
  const auto m = static_cast<Eigen::Index>(channels_);
  const auto K = static_cast<Eigen::Index>(count);
  Matrix out = Matrix::Zero(m, K);
  std::visit(Overloaded{
                 [&](const Tone& t) {
                   for (Eigen::Index k = 0; k < K; ++k) {
                     const double tk = static_cast<double>(k) * dt;
                     for (Eigen::Index c = 0; c < m; ++c) {
                       out(c, k) = t.amplitude(c) * std::cos(t.omega * tk + t.phase(c));
                     }
                   }
                 },
                 [&](const Pulse& p) {
                   // Edges compared in sample units so grid-aligned pulses are exact.
                   const double first = p.start / dt;
                   const double last = (p.start + p.width) / dt;
                   for (Eigen::Index k = 0; k < K; ++k) {
                     const double kk = static_cast<double>(k);
                     if (kk >= first - 1e-9 && kk < last - 1e-9) out.col(k) = p.amplitude;
                   }
                 },
                 [&](const Chirp& c) {
                   const double sweep = (c.omega1 - c.omega0) / (2.0 * c.duration);
                   for (Eigen::Index k = 0; k < K; ++k) {
                     const double tk = static_cast<double>(k) * dt;
                     if (tk > c.duration) break;
                     out.col(k) = c.amplitude * std::cos(c.omega0 * tk + sweep * tk * tk);
                   }
                 },
                 [&](const Samples& s) {
                   if (std::abs(s.dt - dt) > 1e-12 * dt) {
                     throw Error(ErrorCode::InvalidArgument, "sampled disturbance dt does not match simulation dt");
                   }
                   const Eigen::Index avail = std::min(K, s.values.cols());
                   out.leftCols(avail) = s.values.leftCols(avail);
                 },
             },
             kind_);
  return out;
}

DisturbanceSignal DisturbanceSignal::scaled(double factor) const {
  return DisturbanceSignal(std::visit(Overloaded{
                                          [&](Tone t) -> Kind {
                                            t.amplitude *= factor;
                                            return t;
                                          },
                                          [&](Pulse p) -> Kind {
                                            p.amplitude *= factor;
                                            return p;
                                          },
                                          [&](Chirp c) -> Kind {
                                            c.amplitude *= factor;
                                            return c;
                                          },
                                          [&](Samples s) -> Kind {
                                            s.values *= factor;
                                            return s;
                                          },
                                      },
                                      kind_));
}

StateSpace build_stacked_system(const WeightedDigraph& graph, double alpha, const StateSpace& subsystem, Vertex s) {
  if (s >= graph.size()) {
    throw Error(ErrorCode::InvalidVertex, "source vertex outside the graph");
  }
  if (!(alpha >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be nonnegative");
  }
  const auto n = static_cast<Eigen::Index>(subsystem.states());
  const auto m = static_cast<Eigen::Index>(subsystem.inputs());
  const auto p = static_cast<Eigen::Index>(subsystem.outputs());
  const auto N = static_cast<Eigen::Index>(graph.size());
  const Matrix BC = subsystem.B() * subsystem.C();

  Matrix A = Matrix::Zero(N * n, N * n);
  for (Eigen::Index i = 0; i < N; ++i) {
    A.block(i * n, i * n, n, n) = subsystem.A();
    for (const auto& nb : graph.in_edges(static_cast<Vertex>(i))) {
      const auto j = static_cast<Eigen::Index>(nb.vertex);
      A.block(i * n, i * n, n, n) -= alpha * nb.weight * BC;
      A.block(i * n, j * n, n, n) += alpha * nb.weight * BC;
    }
  }
  Matrix B = Matrix::Zero(N * n, m);
  B.middleRows(static_cast<Eigen::Index>(s) * n, n) = subsystem.B();
  Matrix C = Matrix::Zero(N * p, N * n);
  for (Eigen::Index i = 0; i < N; ++i) C.block(i * p, i * n, p, n) = subsystem.C();
  return StateSpace(std::move(A), std::move(B), std::move(C));
}

StateSpace build_stacked_system(const NetworkModel& net, Vertex s) {
  return build_stacked_system(net.graph(), net.alpha(), net.subsystem(), s);
}

double trapezoid_energy(const Matrix& y, double dt) {
  const Eigen::Index K = y.cols();
  if (K < 2) return 0.0;
  const Eigen::RowVectorXd sq = y.colwise().squaredNorm();
  return dt * (sq.sum() - 0.5 * (sq(0) + sq(K - 1)));
}

SimulationResult simulate(const NetworkModel& net, Vertex s, const DisturbanceSignal& w, double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon and dt must be positive");
  }
  if (horizon / dt > kMaxSamples) {
    throw Error(ErrorCode::TooLarge, "more than 1e7 samples requested");
  }
  if (w.channels() != net.subsystem().inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "disturbance has " + std::to_string(w.channels()) +
                                                  " channels, subsystem has " +
                                                  std::to_string(net.subsystem().inputs()));
  }
  const StateSpace stacked = build_stacked_system(net, s);
  const double rho = spectral_radius(stacked.A());
  if (rho > 0.0 && dt > 0.1 / rho) {
    throw Error(ErrorCode::StepTooLarge, "dt exceeds 0.1 / spectral radius = " + std::to_string(0.1 / rho));
  }
  const auto count = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;

  SimulationResult result;
  result.dt = dt;
  result.horizon = static_cast<double>(count - 1) * dt;
  result.source = s;
  result.vertices = net.size();
  result.channels = net.subsystem().outputs();
  result.outputs = simulate_lti(stacked, w.sample(dt, count), dt, Hold::Zero);
  result.energies.resize(result.vertices);
  for (Vertex v = 0; v < result.vertices; ++v) {
    result.energies[v] = trapezoid_energy(result.output(v), dt);
  }
  result.network = net;
  return result;
}

EnergyProfile energy_profile(const SimulationResult& result) {
  EnergyProfile profile;
  const auto K = static_cast<Eigen::Index>(result.samples());
  profile.prefix = Matrix::Zero(static_cast<Eigen::Index>(result.vertices), K);
  for (Vertex v = 0; v < result.vertices; ++v) {
    const Eigen::RowVectorXd sq = result.output(v).colwise().squaredNorm();
    const auto row = static_cast<Eigen::Index>(v);
    for (Eigen::Index k = 1; k < K; ++k) {
      profile.prefix(row, k) = profile.prefix(row, k - 1) + 0.5 * result.dt * (sq(k - 1) + sq(k));
    }
    profile.final.push_back(K > 0 ? profile.prefix(row, K - 1) : 0.0);
  }
  return profile;
}

std::vector<std::size_t> default_horizons(const SimulationResult& result) {
  std::vector<std::size_t> idx;
  const std::size_t last = result.samples() == 0 ? 0 : result.samples() - 1;
  for (int i = 0; i < 8; ++i) {
    const double frac = std::pow(10.0, -2.0 + 2.0 * i / 8.0);
    idx.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(last)))));
  }
  idx.push_back(last);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

namespace {

// Slack below which a rise is treated as rounding noise, relative to the
// largest energy at the same horizon.
constexpr double kEnergyNoiseFloor = 1e-14;

bool exceeds(double candidate, double bound, double rel_tol, double scale) {
  return candidate - (1.0 + rel_tol) * bound > kEnergyNoiseFloor * scale;
}

}  // namespace

std::vector<MajorizationViolation> check_majorization(const SimulationResult& result,
                                                      const std::vector<CutsetPartition>& cutsets, double rel_tol,
                                                      const std::vector<std::size_t>& horizons) {
  const EnergyProfile profile = energy_profile(result);
  const std::vector<std::size_t> hs = horizons.empty() ? default_horizons(result) : horizons;
  std::vector<MajorizationViolation> out;
  for (std::size_t h : hs) {
    if (h >= result.samples()) {
      throw Error(ErrorCode::InvalidArgument, "horizon index beyond the simulated range");
    }
    const auto col = profile.prefix.col(static_cast<Eigen::Index>(h));
    const double scale = col.size() > 0 ? col.maxCoeff() : 0.0;
    for (std::size_t c = 0; c < cutsets.size(); ++c) {
      const auto& part = cutsets[c];
      if (part.source != result.source) {
        throw Error(ErrorCode::InvalidArgument, "cutset built for a different source");
      }
      double cut_max = 0.0;
      for (Vertex v : part.cut) cut_max = std::max(cut_max, col(static_cast<Eigen::Index>(v)));
      for (Vertex b : part.far) {
        const double eb = col(static_cast<Eigen::Index>(b));
        if (exceeds(eb, cut_max, rel_tol, scale)) {
          out.push_back({c, b, result.time(h), eb, cut_max});
        }
      }
    }
  }
  return out;
}

DistanceProfile distance_energy_profile(const SimulationResult& result, double rel_tol) {
  if (!result.network) {
    throw Error(ErrorCode::InvalidArgument, "simulation result carries no network");
  }
  const auto dist = graph_distance(result.network->graph(), result.source);
  DistanceProfile profile;
  for (Vertex v = 0; v < result.vertices; ++v) {
    if (!dist[v]) {
      profile.unreachable.push_back(v);
      continue;
    }
    const std::size_t r = *dist[v];
    if (profile.energy_by_distance.size() <= r) profile.energy_by_distance.resize(r + 1, 0.0);
    profile.energy_by_distance[r] = std::max(profile.energy_by_distance[r], result.energies[v]);
  }
  const double scale = *std::max_element(result.energies.begin(), result.energies.end());
  for (std::size_t r = 1; r < profile.energy_by_distance.size(); ++r) {
    if (exceeds(profile.energy_by_distance[r], profile.energy_by_distance[r - 1], rel_tol, scale)) {
      profile.non_increasing = false;
    }
  }
  return profile;
}

std::vector<PathCheck> check_paths(const SimulationResult& result, double rel_tol) {
  if (!result.network) {
    throw Error(ErrorCode::InvalidArgument, "simulation result carries no network");
  }
  const auto& g = result.network->graph();
  const auto dist = graph_distance(g, result.source);
  std::vector<PathCheck> out;
  for (Vertex v = 0; v < result.vertices; ++v) {
    if (v == result.source || !dist[v]) continue;
    out.push_back({v, monotone_path_exists(g, result.source, v, result.energies, rel_tol)});
  }
  return out;
}

FilteringCheck filtering_identity_check(const SimulationResult& result, Vertex i, std::optional<double> horizon) {
  if (!result.network) {
    throw Error(ErrorCode::InvalidArgument, "simulation result carries no network");
  }
  const NetworkModel& net = *result.network;
  if (i >= result.vertices) {
    throw Error(ErrorCode::InvalidVertex, "vertex outside the graph");
  }
  if (i == result.source) {
    throw Error(ErrorCode::SourceVertex, "the filtering identity does not hold at the source vertex");
  }
  const LocalLoop loop = local_loop(net, i);  // throws NoIncomingEdges

  const double T = horizon.value_or(result.horizon);
  if (!(T > 0.0) || T > result.horizon + 0.5 * result.dt) {
    throw Error(ErrorCode::InvalidArgument, "horizon outside the simulated interval");
  }
  const auto count = static_cast<Eigen::Index>(std::llround(T / result.dt)) + 1;
  const auto m = static_cast<Eigen::Index>(result.channels);

  Matrix z = Matrix::Zero(m, count);
  const double degree = weighted_in_degree(net.graph(), i);
  for (const auto& nb : net.graph().in_edges(i)) {
    z += (nb.weight / degree) * result.output(nb.vertex).leftCols(count);
  }
  const Matrix rebuilt = simulate_lti(loop.closed_loop, z, result.dt, Hold::FirstOrder);
  const Matrix actual = result.output(i).leftCols(count);
  return {(rebuilt - actual).cwiseAbs().maxCoeff(), actual.cwiseAbs().maxCoeff()};
}

}  // namespace propstab
