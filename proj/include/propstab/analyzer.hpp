#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "propstab/graph.hpp"
#include "propstab/lti.hpp"

namespace propstab {

/**
 * Homogeneous synchronization network
 *
 *   x_i' = A x_i + B ( alpha sum_j g_ij (y_j - y_i) + gamma_i w_i ),  y_i = C x_i
 *
 * with one shared square subsystem and coupling strength alpha > 0.
 */
class NetworkModel {
 public:
  NetworkModel(WeightedDigraph graph, double alpha, StateSpace subsystem, std::optional<Vertex> source = {});

  const WeightedDigraph& graph() const noexcept { return graph_; }
  double alpha() const noexcept { return alpha_; }
  const StateSpace& subsystem() const noexcept { return subsystem_; }
  const std::optional<Vertex>& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return graph_.size(); }

 private:
  WeightedDigraph graph_;
  double alpha_;
  StateSpace subsystem_;
  std::optional<Vertex> source_;
};

/// Planar template A = [0 1; 0 -d], B = [0; 1], C = [1 0].
StateSpace planar_subsystem(double d);

/// Returns d when `ss` matches the planar template exactly.
std::optional<double> match_planar(const StateSpace& ss);

/**
 * Subsystem under proportional feedback u = k (r - y), k = alpha * sum_j g_ij.
 * The closed loop (A - kBC, kB, C) realizes H(s) = k C (sI - A + kBC)^{-1} B.
 */
struct LocalLoop {
  Vertex vertex;
  double gain;
  StateSpace closed_loop;
  StateSpace open_loop;

  /// k T / (1 + k T) evaluated from the open-loop transfer function (SISO only).
  Complex siso_response(Complex s) const;
};

LocalLoop local_loop(const NetworkModel& net, Vertex i);
/// Same loop for an explicit gain k > 0.
LocalLoop local_loop(const StateSpace& subsystem, double gain, Vertex vertex = 0);

enum class GainMethod { Bisect, Grid };

struct GainOptions {
  GainMethod method = GainMethod::Bisect;
  std::size_t grid_points = 2000;
  /// Grid spans [rho / span, rho * span] where rho is the closed-loop spectral radius.
  double grid_span = 1e4;
  /// Relative width at which the golden-section refinement stops.
  double refine_tol = 1e-9;
  /// Relative gap between bounds at which the Hamiltonian iteration stops.
  double bisect_tol = 1e-8;
};

struct SupGain {
  double value = 0.0;
  double omega = 0.0;
};

/// H-infinity norm of a stable realization (no feedthrough).
SupGain hinf_norm(const StateSpace& ss, const GainOptions& options = {});

/// sup_w sigma_max(H_i(jw)). Throws UnstableLoop when A - kBC is not Hurwitz.
SupGain sup_gain(const LocalLoop& loop, const GainOptions& options = {});

struct ModalVerdict {
  Complex lambda;
  bool hurwitz;
  double spectral_abscissa;
};

struct ManifoldReport {
  bool stable = true;
  bool laplacian_diagonalizable = true;
  bool used_full_matrix = false;
  std::vector<ModalVerdict> modes;
  /// Verdict of the stacked-matrix deflation oracle, when computed.
  std::optional<bool> full_matrix_stable;
};

inline constexpr double kDeflationTol = 1e-6;

/// Hurwitz test of A - alpha lambda BC over lambda_2..lambda_N (one zero removed).
ManifoldReport manifold_stable(const NetworkModel& net);

/// Eigenvalues of I (x) A - alpha L (x) BC with the n modes of A deflated;
/// true iff every remaining mode is strictly stable.
bool manifold_stable_full_matrix(const NetworkModel& net);

inline constexpr double kCertificationTol = 1e-7;

struct AnalysisOptions {
  GainOptions gain;
  double certification_tol = kCertificationTol;
};

enum class LoopStatus { Pass, Fail, Exempt, Unstable };

struct VertexGain {
  Vertex vertex;
  double gain = 0.0;  // k_i
  LoopStatus status = LoopStatus::Exempt;
  SupGain sup;
  /// |sup - 1| within the certification tolerance.
  bool boundary = false;

  bool passes() const { return status == LoopStatus::Pass || status == LoopStatus::Exempt; }
};

/// Per-vertex local requirement sup gain <= 1 + tol; unstable loops reported, not thrown.
std::vector<VertexGain> evaluate_local_loops(const NetworkModel& net, const AnalysisOptions& options = {});

/// Same, but throws UnstableLoop on the first unstable vertex loop.
std::vector<VertexGain> check_local_requirement(const NetworkModel& net, const AnalysisOptions& options = {});

struct RealPartCondition {
  bool pass = false;
  double min_real = 0.0;
  double omega_at_min = 0.0;
  double threshold = 0.0;  // -1 / (2 alpha max in-degree), -inf without edges
};

struct RealPartExtremum {
  double value;
  double omega;
};

/// inf_w Re T(jw) over a log grid plus golden refinement (SISO only).
RealPartExtremum min_real_part(const StateSpace& ss, const GainOptions& options = {});

/// Nyquist-plot form of the local requirement: Re T(jw) >= -1/(2 alpha max_i sum_j g_ij).
RealPartCondition siso_real_part_condition(const NetworkModel& net, const GainOptions& options = {});

bool is_positive_real(const StateSpace& ss, const GainOptions& options = {});

enum class ScreenVerdict { NeverPropagationStable, StableForSmallAlpha, NoVerdict };

ScreenVerdict pole_screen(const StateSpace& ss);

struct PlanarThreshold {
  double d;
  double d_star;
  bool pass;
};

PlanarThreshold planar_damping_threshold(const NetworkModel& net);

enum class CertificateStatus { CertifiedStable, CertifiedUnstable, Undecided };

std::string to_string(CertificateStatus status);

struct Counterexample {
  Vertex vertex;
  double omega;
  double gain;
  /// Single upstream neighbour used as both source and cutset.
  Vertex source;
};

struct StabilityReport {
  CertificateStatus status = CertificateStatus::Undecided;
  ManifoldReport manifold;
  std::vector<VertexGain> vertices;
  std::optional<Counterexample> counterexample;
  std::vector<std::string> causes;
  AnalysisOptions options;
};

StabilityReport certify(const NetworkModel& net, const AnalysisOptions& options = {});

struct ImperviousReport {
  bool pass = false;
  std::vector<Vertex> region;
  ManifoldReport manifold;
  std::vector<VertexGain> vertices;
  std::vector<std::string> causes;
  AnalysisOptions options;
};

/// Region test: manifold stable and the local requirement at every region vertex,
/// with gains k_i taken from the full graph. Throws NotStronglyConnected.
ImperviousReport certify_impervious(const NetworkModel& net, const std::vector<Vertex>& region,
                                    const AnalysisOptions& options = {});

}  // namespace propstab
