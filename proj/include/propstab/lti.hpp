#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace propstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/**
 * Continuous-time state-space triple (A, B, C) without feedthrough.
 *
 *   x' = A x + B u,   y = C x
 *
 * A is n x n, B is n x m, C is p x n. Subsystems of a synchronization
 * network are square (p == m); stacked network realizations have p = N m.
 */
class StateSpace {
 public:
  StateSpace(Matrix A, Matrix B, Matrix C);

  const Matrix& A() const noexcept { return A_; }
  const Matrix& B() const noexcept { return B_; }
  const Matrix& C() const noexcept { return C_; }

  std::size_t states() const noexcept { return static_cast<std::size_t>(A_.rows()); }
  std::size_t inputs() const noexcept { return static_cast<std::size_t>(B_.cols()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(C_.rows()); }

  bool is_square() const noexcept { return inputs() == outputs(); }
  bool is_siso() const noexcept { return inputs() == 1 && outputs() == 1; }

 private:
  Matrix A_;
  Matrix B_;
  Matrix C_;
};

enum class GridSpacing { Log, Linear };

/// Strictly increasing list of nonnegative frequencies (rad/time).
struct FrequencyGrid {
  std::vector<double> points;
  GridSpacing spacing = GridSpacing::Log;
  double lo = 0.0;
  double hi = 0.0;

  static FrequencyGrid log_spaced(double lo, double hi, std::size_t count);
  static FrequencyGrid linear(double lo, double hi, std::size_t count);
};

/// Spectral radius of a real square matrix (largest eigenvalue modulus).
double spectral_radius(const Matrix& M);

/// T(s) = C (sI - A)^{-1} B by LU solve. Throws SingularAtS when the
/// smallest singular value of (sI - A) is below 1e-12 of the largest.
CMatrix eval_transfer(const StateSpace& ss, Complex s);

/// Frequency response T(jw) at every grid point.
std::vector<CMatrix> frequency_response(const StateSpace& ss, const std::vector<double>& omegas);

/// Largest singular value of a complex matrix.
double sigma_max(const CMatrix& M);

/// True iff every eigenvalue of M has real part < -margin.
bool is_hurwitz(const CMatrix& M, double margin = 0.0);
bool is_hurwitz(const Matrix& M, double margin = 0.0);

/// Largest real part over the spectrum of M.
double spectral_abscissa(const CMatrix& M);

enum class PoleKind { StrictlyStable, Marginal, Unstable };

struct Pole {
  Complex value;
  PoleKind kind;
};

inline constexpr double kPoleClassificationTol = 1e-9;

/// Eigenvalues of A, tagged by the sign of the real part (tolerance 1e-9).
std::vector<Pole> poles(const StateSpace& ss);

enum class Hold { Zero, FirstOrder };

/**
 * Zero-initial-state response on a uniform grid t_k = k dt.
 *
 * `inputs` has one column per sample (inputs() rows); the result has one
 * column per sample (outputs() rows) with y_k = C x_k, so y_0 = 0.
 * Zero-order hold treats u as piecewise constant on [t_k, t_{k+1});
 * first-order hold interpolates linearly between samples. Both are exact
 * discretizations obtained from the exponential of an augmented block
 * matrix.
 */
Matrix simulate_lti(const StateSpace& ss, const Matrix& inputs, double dt, Hold hold = Hold::Zero);

/// Discrete pair (A_d, B_d) of the zero-order-hold discretization.
struct ZohPair {
  Matrix Ad;
  Matrix Bd;
};
ZohPair discretize_zoh(const StateSpace& ss, double dt);

}  // namespace propstab
