#include "filtering/filters.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "filtering/navier_stokes.hpp"

namespace filtering {

VNorm VNorm::euclidean_plus_observed(const ObservationOperator& p) {
  Matrix s = Matrix::Identity(p.dimension(), p.dimension());
  s.diagonal() += p.mask();
  return {Kind::EuclideanPlusObserved, std::move(s), 1.0};
}

VNorm VNorm::h1(const SpectralNavierStokes& model) {
  return {Kind::H1, model.gram(), 1.0};
}

VNorm VNorm::quadratic(Matrix form) {
  require(form.rows() == form.cols(), "VNorm: form must be square");
  require((form - form.transpose()).norm() <= 1e-12 * form.norm(), "VNorm: form must be symmetric");
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Matrix>(form, Eigen::EigenvaluesOnly).eigenvalues()(0);
  require(lmin > 0.0, "VNorm: form must be positive definite");
  return {Kind::Quadratic, std::move(form), lmin};
}

GainOperator identity_gain(const ObservationOperator& p) {
  return {GainOperator::Kind::IdentityOnObserved, Matrix::Identity(p.dimension(), p.dimension())};
}

GainOperator explicit_gain(Matrix d) {
  require(d.rows() == d.cols(), "explicit_gain: D must be square");
  return {GainOperator::Kind::Explicit, std::move(d)};
}

GainOperator kalman_gain_3dvar(const Matrix& model_covariance, const ObservationOperator& p,
                               const Matrix& gamma, double epsilon) {
  const Index d = p.dimension();
  require(model_covariance.rows() == d && model_covariance.cols() == d,
          "kalman_gain_3dvar: model covariance has wrong shape");
  require(gamma.rows() == p.rank() && gamma.cols() == p.rank(),
          "kalman_gain_3dvar: Gamma must be rank x rank");
  const Matrix h = p.selection();
  const Matrix innovation = h * model_covariance * h.transpose() + epsilon * epsilon * gamma;
  Eigen::FullPivLU<Matrix> lu(innovation);
  if (!lu.isInvertible()) {
    throw NumericalError("kalman_gain_3dvar: innovation covariance is singular");
  }
  Matrix k = model_covariance * h.transpose() * lu.inverse() * h;
  return {GainOperator::Kind::KalmanGain, std::move(k)};
}

Vector innovation_complement(const GainOperator& d, const ObservationOperator& p,
                             const Vector& x) {
  return x - d.matrix * p.apply(x);
}

Vector observer_step(const DissipativeModel& model, const ObservationOperator& p,
                     const GainOperator& d, const Vector& z, const Vector& y_next, double h) {
  require(y_next.size() == p.dimension() && d.matrix.rows() == p.dimension(),
          "observer_step: dimension mismatch");
  return innovation_complement(d, p, model.step(z, h)) + d.matrix * y_next;
}

Vector project_ball_V(const VNorm& vnorm, double radius, const Vector& x) {
  require(radius > 0.0, "project_ball_V: radius must be positive");
  const double size = vnorm.norm(x);
  if (size <= radius) return x;
  return (radius / size) * x;
}

Vector truncated_observer_step(const DissipativeModel& model, const ObservationOperator& p,
                               const GainOperator& d, const VNorm& vnorm, double radius,
                               const Vector& m, const Vector& y_next, double h) {
  return project_ball_V(vnorm, radius, observer_step(model, p, d, m, y_next, h));
}

double default_ball_radius(const DissipativeModel& model) {
  if (dynamic_cast<const SpectralNavierStokes*>(&model) != nullptr) {
    return model.absorbing_radius();
  }
  return std::sqrt(2.0) * model.absorbing_radius();
}

namespace {

struct Update {
  Matrix gain;  // d x m
  Matrix cov;
};

Update kalman_update(const Matrix& l, const ObservationOperator& p, const Matrix& gamma,
                     double epsilon, const Matrix& cov) {
  const Index d = l.rows();
  require(l.cols() == d && cov.rows() == d && cov.cols() == d && p.dimension() == d,
          "kalman: dimension mismatch");
  require(gamma.rows() == p.rank() && gamma.cols() == p.rank(), "kalman: Gamma must be rank x rank");
  const Matrix h = p.selection();
  const Matrix predicted = l * cov * l.transpose();
  const Matrix innovation = h * predicted * h.transpose() + epsilon * epsilon * gamma;
  Eigen::FullPivLU<Matrix> lu(innovation);
  if (!lu.isInvertible()) throw NumericalError("kalman: innovation covariance is singular");
  const Matrix gain = predicted * h.transpose() * lu.inverse();
  const Matrix ikh = Matrix::Identity(d, d) - gain * h;
  Matrix updated = ikh * predicted * ikh.transpose() +
                   epsilon * epsilon * gain * gamma * gain.transpose();
  updated = 0.5 * (updated + updated.transpose());
  return {gain, std::move(updated)};
}

}  // namespace

GaussianState kalman_filter_step(const Matrix& l, const ObservationOperator& p,
                                 const Matrix& gamma, double epsilon,
                                 const GaussianState& state, const Vector& y_next) {
  const Update up = kalman_update(l, p, gamma, epsilon, state.cov);
  const Vector forecast = l * state.mean;
  const Vector innovation = p.restrict_to_observed(y_next) - p.restrict_to_observed(forecast);
  return {forecast + up.gain * innovation, up.cov};
}

Matrix kalman_covariance_step(const Matrix& l, const ObservationOperator& p,
                              const Matrix& gamma, double epsilon, const Matrix& cov) {
  return kalman_update(l, p, gamma, epsilon, cov).cov;
}

FilterRun run_observer(const DissipativeModel& model, const ObservationOperator& p,
                       const GainOperator& d, const Vector& z0,
                       const ObservationSequence& obs, double h) {
  FilterRun run;
  run.estimator = "observer";
  run.estimates.reserve(obs.values.size() + 1);
  run.estimates.push_back(z0);
  for (const Vector& y : obs.values) {
    run.estimates.push_back(observer_step(model, p, d, run.estimates.back(), y, h));
  }
  return run;
}

FilterRun run_truncated_observer(const DissipativeModel& model, const ObservationOperator& p,
                                 const GainOperator& d, const VNorm& vnorm, double radius,
                                 const Vector& m0, const ObservationSequence& obs, double h) {
  require(vnorm.norm(m0) <= radius * (1.0 + 1e-12),
          "run_truncated_observer: m0 must lie in B_V");
  FilterRun run;
  run.estimator = "truncated";
  run.estimates.reserve(obs.values.size() + 1);
  run.estimates.push_back(m0);
  for (const Vector& y : obs.values) {
    run.estimates.push_back(
        truncated_observer_step(model, p, d, vnorm, radius, run.estimates.back(), y, h));
  }
  return run;
}

FilterRun run_kalman(const Matrix& l, const ObservationOperator& p, const Matrix& gamma,
                     const GaussianState& prior, const ObservationSequence& obs) {
  FilterRun run;
  run.estimator = "kalman";
  GaussianState state = prior;
  run.estimates.push_back(state.mean);
  run.variance_traces.push_back(state.cov.trace());
  for (const Vector& y : obs.values) {
    state = kalman_filter_step(l, p, gamma, obs.epsilon, state, y);
    run.estimates.push_back(state.mean);
    run.variance_traces.push_back(state.cov.trace());
  }
  return run;
}

void attach_truth(FilterRun& run, const std::vector<Vector>& truth) {
  require(truth.size() == run.estimates.size(), "attach_truth: length mismatch");
  run.squared_errors.resize(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    run.squared_errors[j] = (truth[j] - run.estimates[j]).squaredNorm();
  }
}

void write_filter_run_csv(std::ostream& out, const FilterRun& run) {
  require(!run.estimates.empty(), "filter run: empty");
  const Index d = run.estimates.front().size();
  const bool err = !run.squared_errors.empty();
  const bool tr = !run.variance_traces.empty();
  const bool ess = !run.ess.empty();
  fmt::print(out, "j");
  for (Index i = 0; i < d; ++i) fmt::print(out, ",x{}", i);
  if (err) fmt::print(out, ",sq_error");
  if (tr) fmt::print(out, ",trace");
  if (ess) fmt::print(out, ",ess");
  fmt::print(out, "\n");
  for (std::size_t j = 0; j < run.estimates.size(); ++j) {
    fmt::print(out, "{}", j);
    for (Index i = 0; i < d; ++i) fmt::print(out, ",{}", run.estimates[j](i));
    if (err) fmt::print(out, ",{}", run.squared_errors[j]);
    if (tr) fmt::print(out, ",{}", run.variance_traces[j]);
    if (ess) fmt::print(out, ",{}", run.ess[j]);
    fmt::print(out, "\n");
  }
}

}  // namespace filtering
