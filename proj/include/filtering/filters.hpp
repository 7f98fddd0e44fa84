#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "filtering/dynamics.hpp"
#include "filtering/observation.hpp"

namespace filtering {

class SpectralNavierStokes;

/// Squared Hilbert norm V(x) = x^T S x.
///
/// theta is the equivalence constant in V(x) >= theta |x|^2, measured against
/// the owning model's norm.
class VNorm {
 public:
  enum class Kind { EuclideanPlusObserved, H1, Quadratic };

  /// V(u) = |P u|^2 + |u|^2, theta = 1.
  static VNorm euclidean_plus_observed(const ObservationOperator& p);
  /// V(u) = sum_k |k|^2 |u_k|^2, the spectral model's own norm; theta = 1.
  static VNorm h1(const SpectralNavierStokes& model);
  /// V(x) = x^T S x for symmetric positive definite S; theta = lambda_min(S).
  static VNorm quadratic(Matrix form);

  Kind kind() const { return kind_; }
  Index dimension() const { return form_.rows(); }
  const Matrix& form() const { return form_; }
  double theta() const { return theta_; }

  double operator()(const Vector& x) const { return x.dot(form_ * x); }
  double norm(const Vector& x) const { return std::sqrt((*this)(x)); }
  double inner(const Vector& x, const Vector& y) const { return x.dot(form_ * y); }

 private:
  VNorm(Kind kind, Matrix form, double theta)
      : kind_(kind), form_(std::move(form)), theta_(theta) {}

  Kind kind_;
  Matrix form_;
  double theta_;
};

/// Linear map D of the observer update. D only ever acts on observed
/// quantities (D y with Q y = 0, and D P u).
struct GainOperator {
  enum class Kind { IdentityOnObserved, KalmanGain, Explicit };
  Kind kind = Kind::Explicit;
  Matrix matrix;
};

GainOperator identity_gain(const ObservationOperator& p);
GainOperator explicit_gain(Matrix d);

/// K = C P^T (P C P^T + eps^2 Gamma)^{-1}, with the inverse taken on the
/// observed subspace. `gamma` is the rank x rank observed-noise covariance.
/// Throws NumericalError when the innovation covariance is singular.
GainOperator kalman_gain_3dvar(const Matrix& model_covariance, const ObservationOperator& p,
                               const Matrix& gamma, double epsilon);

/// (I - D P) x
Vector innovation_complement(const GainOperator& d, const ObservationOperator& p,
                             const Vector& x);

/// z_{j+1} = (I - D P) Psi(z_j) + D y_{j+1}
Vector observer_step(const DissipativeModel& model, const ObservationOperator& p,
                     const GainOperator& d, const Vector& z, const Vector& y_next, double h);

/// Closest point of {V^{1/2} <= radius} to x in the V norm: x itself inside the
/// ball, radius * x / V^{1/2}(x) outside.
Vector project_ball_V(const VNorm& vnorm, double radius, const Vector& x);

/// m_{j+1} = P_{B_V}((I - D P) Psi(m_j) + D y_{j+1})
Vector truncated_observer_step(const DissipativeModel& model, const ObservationOperator& p,
                               const GainOperator& d, const VNorm& vnorm, double radius,
                               const Vector& m, const Vector& y_next, double h);

/// Default radius of B_V: sqrt(2) r for the finite-dimensional models and r for
/// the spectral model, r the absorbing radius.
double default_ball_radius(const DissipativeModel& model);

struct GaussianState {
  Vector mean;
  Matrix cov;
};

/// One Kalman step for v_{j+1} = L v_j observed through P with noise
/// covariance eps^2 Gamma (Gamma on the observed subspace). The covariance is
/// propagated in Joseph form, which does not need C to be invertible.
GaussianState kalman_filter_step(const Matrix& l, const ObservationOperator& p,
                                 const Matrix& gamma, double epsilon,
                                 const GaussianState& state, const Vector& y_next);

/// Covariance-only recursion; the Kalman covariance never looks at data.
Matrix kalman_covariance_step(const Matrix& l, const ObservationOperator& p,
                              const Matrix& gamma, double epsilon, const Matrix& cov);

/// Per-step output of any estimator.
struct FilterRun {
  std::string estimator;
  std::vector<Vector> estimates;        // index j = 0..J
  std::vector<double> squared_errors;   // |v_j - est_j|^2 when truth is known
  std::vector<double> variance_traces;  // posterior trace estimates, if any
  std::vector<double> ess;              // particle runs only
  bool degenerate = false;
};

FilterRun run_observer(const DissipativeModel& model, const ObservationOperator& p,
                       const GainOperator& d, const Vector& z0,
                       const ObservationSequence& obs, double h);
FilterRun run_truncated_observer(const DissipativeModel& model, const ObservationOperator& p,
                                 const GainOperator& d, const VNorm& vnorm, double radius,
                                 const Vector& m0, const ObservationSequence& obs, double h);
FilterRun run_kalman(const Matrix& l, const ObservationOperator& p, const Matrix& gamma,
                     const GaussianState& prior, const ObservationSequence& obs);

/// Fills run.squared_errors from a truth trajectory of the same length.
void attach_truth(FilterRun& run, const std::vector<Vector>& truth);

/// CSV `j,x0..x{d-1}[,sq_error][,trace][,ess]`.
void write_filter_run_csv(std::ostream& out, const FilterRun& run);

}  // namespace filtering
