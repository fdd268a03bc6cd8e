#include "propstab/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "propstab/error.hpp"

namespace propstab {

namespace {

constexpr double kGolden = 0.6180339887498949;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_siso(const StateSpace& ss) {
  if (!ss.is_siso()) {
    throw Error(ErrorCode::NotSISO, "operation requires a single-input single-output subsystem");
  }
}

double frequency_scale(const Matrix& A) {
  const double rho = spectral_radius(A);
  return rho > 0.0 ? rho : 1.0;
}

/// Golden-section search for the maximum of f on [a, b].
template <typename F>
std::pair<double, double> golden_maximize(F&& f, double a, double b, double rel_tol) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int iter = 0; iter < 200 && (b - a) > rel_tol * std::max(std::abs(b), 1e-300); ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Maximizes f over a grid augmented with w = 0, then refines around the best point.
template <typename F>
std::pair<double, double> grid_maximize(F&& f, const std::vector<double>& grid, double rel_tol) {
  std::vector<double> pts;
  pts.reserve(grid.size() + 1);
  pts.push_back(0.0);
  pts.insert(pts.end(), grid.begin(), grid.end());
  std::vector<double> vals(pts.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    vals[k] = f(pts[k]);
    if (vals[k] > vals[best]) best = k;
  }
  const double lo = best == 0 ? 0.0 : pts[best - 1];
  const double hi = best + 1 < pts.size() ? pts[best + 1] : pts[best];
  if (hi <= lo) return {pts[best], vals[best]};
  auto refined = golden_maximize(f, lo, hi, rel_tol);
  if (refined.second > vals[best]) return refined;
  return {pts[best], vals[best]};
}

SupGain hinf_grid(const StateSpace& ss, const GainOptions& options) {
  const double rho = frequency_scale(ss.A());
  const auto grid = FrequencyGrid::log_spaced(rho / options.grid_span, rho * options.grid_span,
                                              std::max<std::size_t>(options.grid_points, 2));
  auto f = [&](double w) { return sigma_max(eval_transfer(ss, Complex(0.0, w))); };
  auto [w, v] = grid_maximize(f, grid.points, options.refine_tol);
  return {v, w};
}

/**
 * Level-set iteration on the Hamiltonian
 *
 *   M(g) = [ A        B B^T / g ]
 *          [ -C^T C / g   -A^T  ]
 *
 * which has an eigenvalue jw exactly when g is a singular value of G(jw).
 * The lower bound is raised by evaluating sigma_max at the midpoints of the
 * crossing frequencies; the iteration ends once M((1 + 2 tol) g_lo) has no
 * imaginary-axis eigenvalues.
 */
SupGain hinf_bisect(const StateSpace& ss, const GainOptions& options) {
  const auto n = static_cast<Eigen::Index>(ss.states());
  if (ss.B().isZero(0.0) || ss.C().isZero(0.0)) return {0.0, 0.0};

  auto sigma_at = [&](double w) { return sigma_max(eval_transfer(ss, Complex(0.0, w))); };

  SupGain best{sigma_at(0.0), 0.0};
  Eigen::EigenSolver<Matrix> poles_es(ss.A(), false);
  for (Eigen::Index k = 0; k < poles_es.eigenvalues().size(); ++k) {
    const Complex p = poles_es.eigenvalues()(k);
    for (double w : {std::abs(p), std::abs(p.imag())}) {
      if (w <= 0.0) continue;
      const double v = sigma_at(w);
      if (v > best.value) best = {v, w};
    }
  }
  if (best.value <= 0.0) {
    // Transfer may vanish at the candidates without vanishing identically.
    const double rho = frequency_scale(ss.A());
    best = {sigma_at(rho), rho};
    if (best.value <= 0.0) return {0.0, 0.0};
  }

  const Matrix BBt = ss.B() * ss.B().transpose();
  const Matrix CtC = ss.C().transpose() * ss.C();
  const double half_tol = 0.5 * options.bisect_tol;

  for (int iter = 0; iter < 100; ++iter) {
    const double gamma = (1.0 + 2.0 * half_tol) * best.value;
    Matrix H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = ss.A();
    H.topRightCorner(n, n) = BBt / gamma;
    H.bottomLeftCorner(n, n) = -CtC / gamma;
    H.bottomRightCorner(n, n) = -ss.A().transpose();
    Eigen::EigenSolver<Matrix> es(H, false);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("Hamiltonian eigenvalue computation failed");
    }
    const double imag_tol = 1e-8 * (1.0 + H.norm());
    std::vector<double> crossings;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      const Complex lam = es.eigenvalues()(k);
      if (std::abs(lam.real()) <= imag_tol && lam.imag() >= 0.0) crossings.push_back(lam.imag());
    }
    if (crossings.empty()) break;
    std::sort(crossings.begin(), crossings.end());

    std::vector<double> probes = crossings;
    for (std::size_t k = 0; k + 1 < crossings.size(); ++k) {
      probes.push_back(0.5 * (crossings[k] + crossings[k + 1]));
    }
    SupGain next = best;
    for (double w : probes) {
      double v = 0.0;
      try {
        v = sigma_at(w);
      } catch (const Error&) {
        continue;
      }
      if (v > next.value) next = {v, w};
    }
    if (!(next.value > best.value)) break;  // crossings are numerical near-coalescence
    best = next;
  }
  return best;
}

}  // namespace

NetworkModel::NetworkModel(WeightedDigraph graph, double alpha, StateSpace subsystem, std::optional<Vertex> source)
    : graph_(std::move(graph)), alpha_(alpha), subsystem_(std::move(subsystem)), source_(source) {
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
    throw Error(ErrorCode::InvalidArgument, "coupling strength alpha must be positive");
  }
  if (!subsystem_.is_square()) {
    throw Error(ErrorCode::DimensionMismatch, "subsystem must have as many outputs as inputs");
  }
  if (source_ && *source_ >= graph_.size()) {
    throw Error(ErrorCode::InvalidVertex, "source vertex outside the graph");
  }
}

StateSpace planar_subsystem(double d) {
  Matrix A(2, 2);
  A << 0.0, 1.0, 0.0, -d;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  Matrix C(1, 2);
  C << 1.0, 0.0;
  return StateSpace(A, B, C);
}

std::optional<double> match_planar(const StateSpace& ss) {
  if (ss.states() != 2 || !ss.is_siso()) return std::nullopt;
  const Matrix& A = ss.A();
  const Matrix& B = ss.B();
  const Matrix& C = ss.C();
  if (A(0, 0) != 0.0 || A(0, 1) != 1.0 || A(1, 0) != 0.0) return std::nullopt;
  if (B(0, 0) != 0.0 || B(1, 0) != 1.0 || C(0, 0) != 1.0 || C(0, 1) != 0.0) return std::nullopt;
  return -A(1, 1);
}

Complex LocalLoop::siso_response(Complex s) const {
  require_siso(open_loop);
  const Complex t = eval_transfer(open_loop, s)(0, 0);
  return gain * t / (1.0 + gain * t);
}

LocalLoop local_loop(const StateSpace& subsystem, double gain, Vertex vertex) {
  if (!(gain > 0.0)) {
    throw Error(ErrorCode::NoIncomingEdges, "local loop needs a positive gain");
  }
  StateSpace closed(subsystem.A() - gain * subsystem.B() * subsystem.C(), gain * subsystem.B(), subsystem.C());
  return LocalLoop{vertex, gain, std::move(closed), subsystem};
}

LocalLoop local_loop(const NetworkModel& net, Vertex i) {
  const double degree = weighted_in_degree(net.graph(), i);
  if (degree <= 0.0) {
    throw Error(ErrorCode::NoIncomingEdges, "vertex " + std::to_string(i + 1) + " has no incoming edges");
  }
  return local_loop(net.subsystem(), net.alpha() * degree, i);
}

SupGain hinf_norm(const StateSpace& ss, const GainOptions& options) {
  if (!is_hurwitz(ss.A(), kPoleClassificationTol)) {
    throw Error(ErrorCode::UnstableLoop, "state matrix is not Hurwitz; the H-infinity norm is unbounded");
  }
  return options.method == GainMethod::Bisect ? hinf_bisect(ss, options) : hinf_grid(ss, options);
}

SupGain sup_gain(const LocalLoop& loop, const GainOptions& options) {
  if (!is_hurwitz(loop.closed_loop.A(), kPoleClassificationTol)) {
    throw Error(ErrorCode::UnstableLoop, "local loop at vertex " + std::to_string(loop.vertex + 1) +
                                             " (k = " + fmt_double(loop.gain) + ") is not Hurwitz");
  }
  return hinf_norm(loop.closed_loop, options);
}

ManifoldReport manifold_stable(const NetworkModel& net) {
  const LaplacianSpectrum spec = laplacian(net.graph());
  ManifoldReport report;
  report.laplacian_diagonalizable = spec.diagonalizable;

  const StateSpace& ss = net.subsystem();
  const CMatrix A = ss.A().cast<Complex>();
  const CMatrix BC = (ss.B() * ss.C()).cast<Complex>();
  // eigenvalues are sorted by magnitude, so index 0 is the synchronization mode
  for (std::size_t k = 1; k < spec.eigenvalues.size(); ++k) {
    const Complex lambda = spec.eigenvalues[k];
    const CMatrix M = A - net.alpha() * lambda * BC;
    const double abscissa = spectral_abscissa(M);
    report.modes.push_back({lambda, abscissa < -kPoleClassificationTol, abscissa});
  }
  const bool modal = std::all_of(report.modes.begin(), report.modes.end(),
                                 [](const ModalVerdict& m) { return m.hurwitz; });

  const std::size_t stacked_dim = net.size() * ss.states();
  if (!spec.diagonalizable || stacked_dim <= 400) {
    report.full_matrix_stable = manifold_stable_full_matrix(net);
  }
  if (spec.diagonalizable) {
    report.stable = modal;
  } else {
    report.used_full_matrix = true;
    report.stable = *report.full_matrix_stable;
  }
  return report;
}

bool manifold_stable_full_matrix(const NetworkModel& net) {
  const StateSpace& ss = net.subsystem();
  const auto n = static_cast<Eigen::Index>(ss.states());
  const auto N = static_cast<Eigen::Index>(net.size());
  const Matrix L = laplacian(net.graph()).L;
  const Matrix BC = ss.B() * ss.C();
  Matrix stacked = Matrix::Zero(N * n, N * n);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      Matrix block = -net.alpha() * L(i, j) * BC;
      if (i == j) block += ss.A();
      stacked.block(i * n, j * n, n, n) = block;
    }
  }
  Eigen::EigenSolver<Matrix> es_full(stacked, false);
  Eigen::EigenSolver<Matrix> es_sub(ss.A(), false);
  if (es_full.info() != Eigen::Success || es_sub.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue computation failed");
  }
  std::vector<Complex> remaining(es_full.eigenvalues().data(), es_full.eigenvalues().data() + N * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex mu = es_sub.eigenvalues()(k);
    auto nearest = std::min_element(remaining.begin(), remaining.end(), [&](Complex a, Complex b) {
      return std::abs(a - mu) < std::abs(b - mu);
    });
    if (nearest == remaining.end() || std::abs(*nearest - mu) > kDeflationTol * std::max(1.0, std::abs(mu))) {
      return false;
    }
    remaining.erase(nearest);
  }
  return std::all_of(remaining.begin(), remaining.end(),
                     [](Complex z) { return z.real() < -kPoleClassificationTol; });
}

std::vector<VertexGain> evaluate_local_loops(const NetworkModel& net, const AnalysisOptions& options) {
  std::vector<VertexGain> out;
  out.reserve(net.size());
  for (Vertex i = 0; i < net.size(); ++i) {
    VertexGain vg;
    vg.vertex = i;
    const double degree = weighted_in_degree(net.graph(), i);
    if (degree <= 0.0) {
      vg.status = LoopStatus::Exempt;
      out.push_back(vg);
      continue;
    }
    const LocalLoop loop = local_loop(net, i);
    vg.gain = loop.gain;
    try {
      vg.sup = sup_gain(loop, options.gain);
      vg.status = vg.sup.value <= 1.0 + options.certification_tol ? LoopStatus::Pass : LoopStatus::Fail;
      vg.boundary = std::abs(vg.sup.value - 1.0) <= options.certification_tol;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnstableLoop) throw;
      vg.status = LoopStatus::Unstable;
      vg.sup = {std::numeric_limits<double>::infinity(), 0.0};
    }
    out.push_back(vg);
  }
  return out;
}

std::vector<VertexGain> check_local_requirement(const NetworkModel& net, const AnalysisOptions& options) {
  auto result = evaluate_local_loops(net, options);
  for (const auto& vg : result) {
    if (vg.status == LoopStatus::Unstable) {
      throw Error(ErrorCode::UnstableLoop, "local loop at vertex " + std::to_string(vg.vertex + 1) +
                                               " (k = " + fmt_double(vg.gain) + ") is not Hurwitz");
    }
  }
  return result;
}

RealPartExtremum min_real_part(const StateSpace& ss, const GainOptions& options) {
  require_siso(ss);
  const double rho = frequency_scale(ss.A());
  const auto grid = FrequencyGrid::log_spaced(rho / options.grid_span, rho * options.grid_span,
                                              std::max<std::size_t>(options.grid_points, 2));
  // Maximize -Re T; points on imaginary-axis poles are skipped.
  auto f = [&](double w) {
    try {
      return -eval_transfer(ss, Complex(0.0, w))(0, 0).real();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto [w, v] = grid_maximize(f, grid.points, options.refine_tol);
  return {-v, w};
}

RealPartCondition siso_real_part_condition(const NetworkModel& net, const GainOptions& options) {
  require_siso(net.subsystem());
  RealPartCondition out;
  const double degree = max_weighted_in_degree(net.graph());
  out.threshold = degree > 0.0 ? -1.0 / (2.0 * net.alpha() * degree) : -std::numeric_limits<double>::infinity();
  const auto m = min_real_part(net.subsystem(), options);
  out.min_real = m.value;
  out.omega_at_min = m.omega;
  out.pass = out.min_real >= out.threshold - 1e-9;
  return out;
}

bool is_positive_real(const StateSpace& ss, const GainOptions& options) {
  require_siso(ss);
  for (const auto& p : poles(ss)) {
    if (p.kind == PoleKind::Unstable) return false;
  }
  return min_real_part(ss, options).value >= -1e-9;
}

ScreenVerdict pole_screen(const StateSpace& ss) {
  require_siso(ss);
  const auto ps = poles(ss);
  if (std::any_of(ps.begin(), ps.end(), [](const Pole& p) { return p.kind == PoleKind::Unstable; })) {
    return ScreenVerdict::NeverPropagationStable;
  }
  if (std::all_of(ps.begin(), ps.end(), [](const Pole& p) { return p.kind == PoleKind::StrictlyStable; })) {
    return ScreenVerdict::StableForSmallAlpha;
  }
  return ScreenVerdict::NoVerdict;
}

PlanarThreshold planar_damping_threshold(const NetworkModel& net) {
  const auto d = match_planar(net.subsystem());
  if (!d) {
    throw Error(ErrorCode::NotPlanarTemplate, "subsystem is not A=[0 1; 0 -d], B=[0; 1], C=[1 0]");
  }
  const double d_star = std::sqrt(2.0 * net.alpha() * max_weighted_in_degree(net.graph()));
  return {*d, d_star, *d >= d_star};
}

std::string to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::CertifiedStable: return "CERTIFIED_STABLE";
    case CertificateStatus::CertifiedUnstable: return "CERTIFIED_UNSTABLE";
    case CertificateStatus::Undecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

namespace {

void describe_loops(const std::vector<VertexGain>& vertices, std::vector<std::string>& causes) {
  for (const auto& vg : vertices) {
    const std::string id = "vertex " + std::to_string(vg.vertex + 1);
    switch (vg.status) {
      case LoopStatus::Exempt:
        causes.push_back(id + ": no incoming edges, exempt from the gain test");
        break;
      case LoopStatus::Unstable:
        causes.push_back(id + ": local loop unstable (k = " + fmt_double(vg.gain) + ")");
        break;
      case LoopStatus::Fail:
        causes.push_back(id + ": sup gain " + fmt_double(vg.sup.value) + " > 1 at omega " +
                         fmt_double(vg.sup.omega));
        break;
      case LoopStatus::Pass:
        break;
    }
  }
}

bool manifold_clearly_unstable(const ManifoldReport& m) {
  if (m.used_full_matrix) return !m.stable;
  return std::any_of(m.modes.begin(), m.modes.end(),
                     [](const ModalVerdict& v) { return v.spectral_abscissa > kPoleClassificationTol; });
}

}  // namespace

StabilityReport certify(const NetworkModel& net, const AnalysisOptions& options) {
  StabilityReport report;
  report.options = options;
  report.manifold = manifold_stable(net);
  report.vertices = evaluate_local_loops(net, options);
  describe_loops(report.vertices, report.causes);

  const bool all_pass = std::all_of(report.vertices.begin(), report.vertices.end(),
                                    [](const VertexGain& v) { return v.passes(); });
  if (!report.manifold.stable) {
    report.causes.push_back(manifold_clearly_unstable(report.manifold)
                                ? "synchronization manifold unstable"
                                : "synchronization manifold not asymptotically stable (marginal mode)");
  }
  if (report.manifold.stable && all_pass) {
    report.status = CertificateStatus::CertifiedStable;
    return report;
  }

  // Single-tone construction: a SISO vertex fed by exactly one neighbour j
  // responds with Y_i = H_i Y_j, so a tone at the peak frequency applied at j
  // amplifies across the cutset {j}.
  if (net.subsystem().is_siso()) {
    const VertexGain* worst = nullptr;
    for (const auto& vg : report.vertices) {
      if (vg.status != LoopStatus::Fail) continue;
      if (net.graph().in_edges(vg.vertex).size() != 1) continue;
      if (!worst || vg.sup.value > worst->sup.value) worst = &vg;
    }
    if (worst) {
      report.counterexample = Counterexample{worst->vertex, worst->sup.omega, worst->sup.value,
                                             net.graph().in_edges(worst->vertex).front().vertex};
    }
  }

  if (manifold_clearly_unstable(report.manifold)) {
    report.status = CertificateStatus::CertifiedUnstable;
  } else if (report.manifold.stable && report.counterexample) {
    report.status = CertificateStatus::CertifiedUnstable;
  } else {
    report.status = CertificateStatus::Undecided;
    if (!all_pass) report.causes.push_back("local requirement violated; the gain condition is only sufficient here");
  }
  return report;
}

ImperviousReport certify_impervious(const NetworkModel& net, const std::vector<Vertex>& region,
                                    const AnalysisOptions& options) {
  if (region.empty()) {
    throw Error(ErrorCode::InvalidArgument, "region must contain at least one vertex");
  }
  std::vector<Vertex> sorted = region;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (!is_strongly_connected(net.graph(), sorted)) {
    throw Error(ErrorCode::NotStronglyConnected, "induced subgraph of the region is not strongly connected");
  }

  ImperviousReport report;
  report.options = options;
  report.region = sorted;
  report.manifold = manifold_stable(net);
  const auto all = evaluate_local_loops(net, options);
  for (Vertex v : sorted) report.vertices.push_back(all[v]);
  describe_loops(report.vertices, report.causes);
  if (!report.manifold.stable) report.causes.push_back("synchronization manifold not asymptotically stable");
  report.pass = report.manifold.stable && std::all_of(report.vertices.begin(), report.vertices.end(),
                                                      [](const VertexGain& v) { return v.passes(); });
  return report;
}

}  // namespace propstab
