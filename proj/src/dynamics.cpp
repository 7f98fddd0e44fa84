#include "filtering/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace filtering {

int DissipativeModel::substeps_for(double h) const {
  return std::max(1, static_cast<int>(std::ceil(h / max_substep_ - 1e-9)));
}

Vector DissipativeModel::step(const Vector& u, double h, int substeps) const {
  require(u.size() == dimension(),
          fmt::format("{}: state has length {}, expected {}", name(), u.size(), dimension()));
  require(h > 0.0 && substeps >= 1, "step: h and substeps must be positive");
  Vector out = integrate(u, h, substeps);
  if (!out.allFinite()) {
    throw NumericalError(fmt::format("{}: non-finite state after step h={} from |u0|={}",
                                     name(), h, u.norm()));
  }
  return out;
}

Vector DissipativeModel::integrate(const Vector& u, double h, int substeps) const {
  return rk4(u, [this](const Vector& x) { return vector_field(*this, x); }, h, substeps);
}

Matrix DissipativeModel::step_ensemble(const Matrix& ensemble, double h) const {
  require(ensemble.rows() == dimension(),
          fmt::format("{}: ensemble has {} rows, expected {}", name(), ensemble.rows(), dimension()));
  require(h > 0.0, "step_ensemble: h must be positive");
  Matrix out = integrate_ensemble(ensemble, h, substeps_for(h));
  if (!out.allFinite()) throw NumericalError(fmt::format("{}: non-finite ensemble member", name()));
  return out;
}

Matrix DissipativeModel::ensemble_field(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.cols(); ++i) out.col(i) = vector_field(*this, x.col(i));
  return out;
}

Matrix DissipativeModel::integrate_ensemble(const Matrix& x, double h, int substeps) const {
  return rk4(x, [this](const Matrix& m) { return ensemble_field(m); }, h, substeps);
}

Vector vector_field(const DissipativeModel& model, const Vector& u) {
  require(u.size() == model.dimension(),
          fmt::format("vector_field: state has length {}, expected {}", u.size(),
                      model.dimension()));
  return model.forcing() - model.linear(u) - model.bilinear(u, u);
}

namespace {

// With <Au,u> >= c|u|^2 and <B(u,u),u> = 0,
//   d/dt |v|^2 + c|v|^2 <= |f|^2 / c,
// so r0 = |f|^2 / c^2 and r1 = c.
double coercivity(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double linear_r0(const Matrix& a, const Vector& f) {
  const double c = coercivity(a);
  if (f.squaredNorm() == 0.0) return 0.0;
  require(c > 0.0, "LinearModel: forced model needs a coercive A for an absorbing ball");
  return f.squaredNorm() / (c * c);
}

Vector lorenz63_forcing(double a, double b, double r) {
  Vector f(3);
  f << 0.0, 0.0, -b * (r + a);
  return f;
}

}  // namespace

LinearModel::LinearModel(Matrix a, Vector forcing, double max_substep)
    : DissipativeModel(forcing, linear_r0(a, forcing), std::max(coercivity(a), 0.0),
                       max_substep),
      a_(std::move(a)) {
  require(a_.rows() == a_.cols() && a_.rows() == forcing.size(),
          "LinearModel: A must be square and match the forcing length");
}

Lorenz63::Lorenz63(double a, double b, double r, double max_substep)
    : DissipativeModel(lorenz63_forcing(a, b, r),
                       lorenz63_forcing(a, b, r).squaredNorm(), 1.0, max_substep),
      a_(3, 3) {
  a_ << a, -a, 0.0,
        a, 1.0, 0.0,
        0.0, 0.0, b;
}

Vector Lorenz63::linear(const Vector& u) const {
  require(u.size() == 3, "lorenz63: state must have length 3");
  return a_ * u;
}

Vector Lorenz63::bilinear(const Vector& u, const Vector& w) const {
  require(u.size() == 3 && w.size() == 3, "lorenz63: state must have length 3");
  Vector b(3);
  b << 0.0,
       0.5 * (u(0) * w(2) + u(2) * w(0)),
      -0.5 * (u(0) * w(1) + u(1) * w(0));
  return b;
}

Matrix Lorenz63::ensemble_field(const Matrix& x) const {
  Matrix out = (-a_) * x;
  out.row(2).array() += forcing()(2);
  out.row(1).array() -= x.row(0).array() * x.row(2).array();
  out.row(2).array() += x.row(0).array() * x.row(1).array();
  return out;
}

Lorenz96::Lorenz96(Index d, double forcing, double max_substep)
    : DissipativeModel(Vector::Constant(d, forcing), d * forcing * forcing, 1.0, max_substep),
      d_(d) {
  require(d >= 6 && d % 3 == 0, fmt::format("lorenz96: d={} must be a multiple of 3, >= 6", d));
}

Vector Lorenz96::bilinear(const Vector& u, const Vector& w) const {
  require(u.size() == d_ && w.size() == d_,
          fmt::format("lorenz96: state must have length {}", d_));
  Vector b(d_);
  const auto at = [this](const Vector& x, Index i) { return x((i % d_ + d_) % d_); };
  for (Index i = 0; i < d_; ++i) {
    b(i) = -0.5 * (at(w, i - 1) * at(u, i + 1) + at(u, i - 1) * at(w, i + 1) -
                   at(w, i - 2) * at(u, i - 1) - at(u, i - 2) * at(w, i - 1));
  }
  return b;
}

Matrix Lorenz96::ensemble_field(const Matrix& x) const {
  Matrix out = forcing().replicate(1, x.cols()) - x;
  for (Index i = 0; i < d_; ++i) {
    const Index im1 = (i + d_ - 1) % d_, im2 = (i + d_ - 2) % d_, ip1 = (i + 1) % d_;
    out.row(i).array() += x.row(im1).array() * (x.row(ip1).array() - x.row(im2).array());
  }
  return out;
}

std::shared_ptr<Lorenz63> lorenz63() { return std::make_shared<Lorenz63>(); }
std::shared_ptr<Lorenz96> lorenz96(Index d) { return std::make_shared<Lorenz96>(d); }

}  // namespace filtering
