#include "propstab/lti.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "propstab/error.hpp"

namespace propstab {

namespace {

std::string dims(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

}  // namespace

StateSpace::StateSpace(Matrix A, Matrix B, Matrix C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "A must be square and non-empty, got " + dims(A_));
  }
  if (B_.rows() != A_.rows() || B_.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "B must have " + std::to_string(A_.rows()) + " rows, got " + dims(B_));
  }
  if (C_.cols() != A_.rows() || C_.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "C must have " + std::to_string(A_.rows()) + " columns, got " + dims(C_));
  }
  if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "state-space matrices must be finite");
  }
}

FrequencyGrid FrequencyGrid::log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo < hi and at least 2 points");
  }
  FrequencyGrid grid;
  grid.spacing = GridSpacing::Log;
  grid.lo = lo;
  grid.hi = hi;
  grid.points.resize(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t k = 0; k < count; ++k) {
    grid.points[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  grid.points.front() = lo;
  grid.points.back() = hi;
  return grid;
}

FrequencyGrid FrequencyGrid::linear(double lo, double hi, std::size_t count) {
  if (!(lo >= 0.0) || !(hi > lo) || count < 2) {
    throw Error(ErrorCode::InvalidArgument, "linear grid needs 0 <= lo < hi and at least 2 points");
  }
  FrequencyGrid grid;
  grid.spacing = GridSpacing::Linear;
  grid.lo = lo;
  grid.hi = hi;
  grid.points.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid.points[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  grid.points.back() = hi;
  return grid;
}

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CMatrix eval_transfer(const StateSpace& ss, Complex s) {
  const auto n = static_cast<Eigen::Index>(ss.states());
  CMatrix resolvent = s * CMatrix::Identity(n, n) - ss.A().cast<Complex>();
  Eigen::PartialPivLU<CMatrix> lu(resolvent);
  // rcond is only an estimate (and reads 1 on an exactly zero pivot); confirm
  // suspicious cases with singular values.
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const bool tiny_pivot = n > 0 && !(pivots.minCoeff() > 1e-12 * pivots.maxCoeff());
  if (tiny_pivot || !(lu.rcond() > 1e-10)) {
    Eigen::JacobiSVD<CMatrix> svd(resolvent);
    const auto& sv = svd.singularValues();
    if (sv(0) == 0.0 || sv(sv.size() - 1) < 1e-12 * sv(0)) {
      throw Error(ErrorCode::SingularAtS, "sI - A is singular at s = (" + std::to_string(s.real()) + ", " +
                                              std::to_string(s.imag()) + ")");
    }
  }
  CMatrix X = lu.solve(ss.B().cast<Complex>());
  return ss.C().cast<Complex>() * X;
}

std::vector<CMatrix> frequency_response(const StateSpace& ss, const std::vector<double>& omegas) {
  std::vector<CMatrix> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(eval_transfer(ss, Complex(0.0, w)));
  return out;
}

double sigma_max(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  if (M.size() == 1) return std::abs(M(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_abscissa(const CMatrix& M) {
  Eigen::ComplexEigenSolver<CMatrix> es(M, false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue computation failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const CMatrix& M, double margin) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Hurwitz test needs a square matrix");
  }
  return spectral_abscissa(M) < -margin;
}

bool is_hurwitz(const Matrix& M, double margin) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Hurwitz test needs a square matrix");
  }
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue computation failed");
  }
  return es.eigenvalues().real().maxCoeff() < -margin;
}

std::vector<Pole> poles(const StateSpace& ss) {
  Eigen::EigenSolver<Matrix> es(ss.A(), false);
  std::vector<Pole> out;
  out.reserve(ss.states());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const Complex p = es.eigenvalues()(k);
    PoleKind kind = PoleKind::Marginal;
    if (p.real() < -kPoleClassificationTol) kind = PoleKind::StrictlyStable;
    else if (p.real() > kPoleClassificationTol) kind = PoleKind::Unstable;
    out.push_back({p, kind});
  }
  std::sort(out.begin(), out.end(), [](const Pole& a, const Pole& b) {
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    return a.value.imag() > b.value.imag();
  });
  return out;
}

ZohPair discretize_zoh(const StateSpace& ss, double dt) {
  const auto n = static_cast<Eigen::Index>(ss.states());
  const auto m = static_cast<Eigen::Index>(ss.inputs());
  // exp([A B; 0 0] dt) = [A_d B_d; 0 I]
  Matrix M = Matrix::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = ss.A();
  M.topRightCorner(n, m) = ss.B();
  Matrix phi = (M * dt).exp();
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

Matrix simulate_lti(const StateSpace& ss, const Matrix& inputs, double dt, Hold hold) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  }
  if (static_cast<std::size_t>(inputs.rows()) != ss.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "input samples must have " + std::to_string(ss.inputs()) + " rows");
  }
  const auto n = static_cast<Eigen::Index>(ss.states());
  const auto m = static_cast<Eigen::Index>(ss.inputs());
  const Eigen::Index K = inputs.cols();
  Matrix outputs = Matrix::Zero(static_cast<Eigen::Index>(ss.outputs()), K);
  if (K == 0) return outputs;

  Vector x = Vector::Zero(n);
  if (hold == Hold::Zero) {
    const ZohPair d = discretize_zoh(ss, dt);
    for (Eigen::Index k = 0; k < K; ++k) {
      outputs.col(k).noalias() = ss.C() * x;
      if (k + 1 < K) x = d.Ad * x + d.Bd * inputs.col(k);
    }
    return outputs;
  }

  // exp([A B 0; 0 0 I; 0 0 0] dt) = [A_d G1 G2; 0 I dt*I; 0 0 I], slope v = (u_{k+1} - u_k) / dt
  Matrix M = Matrix::Zero(n + 2 * m, n + 2 * m);
  M.topLeftCorner(n, n) = ss.A();
  M.block(0, n, n, m) = ss.B();
  M.block(n, n + m, m, m) = Matrix::Identity(m, m);
  Matrix phi = (M * dt).exp();
  const Matrix Ad = phi.topLeftCorner(n, n);
  const Matrix G1 = phi.block(0, n, n, m);
  const Matrix G2 = phi.block(0, n + m, n, m);
  for (Eigen::Index k = 0; k < K; ++k) {
    outputs.col(k).noalias() = ss.C() * x;
    if (k + 1 < K) {
      x = Ad * x + G1 * inputs.col(k) + G2 * ((inputs.col(k + 1) - inputs.col(k)) / dt);
    }
  }
  return outputs;
}

}  // namespace propstab
