#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "filtering/types.hpp"

namespace filtering {

/// Classical fourth-order Runge-Kutta over `substeps` equal steps of an
/// autonomous field `rhs`.
/// Works column-wise on ensembles as well as on single states.
template <typename Derived, typename Field>
typename Derived::PlainObject rk4(const Eigen::MatrixBase<Derived>& u0, Field&& rhs, double h,
                                  int substeps) {
  using Vec = typename Derived::PlainObject;
  const double dt = h / substeps;
  Vec u = u0;
  for (int s = 0; s < substeps; ++s) {
    const Vec k1 = rhs(u);
    const Vec k2 = rhs(Vec(u + 0.5 * dt * k1));
    const Vec k3 = rhs(Vec(u + 0.5 * dt * k2));
    const Vec k4 = rhs(Vec(u + dt * k3));
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

/// dv/dt + A v + B(v, v) = f with symmetric bilinear B.
///
/// Every model carries its own Hilbert inner product (Euclidean for the
/// Lorenz systems, the H1-equivalent weighted sum for the spectral
/// Navier-Stokes model). Constants r0, r1 are those of the absorbing-ball
/// estimate |Psi_t(v)|^2 <= e^{-r1 t}|v|^2 + r0 (1 - e^{-r1 t}).
class DissipativeModel {
 public:
  virtual ~DissipativeModel() = default;

  virtual std::string name() const = 0;
  virtual Index dimension() const = 0;
  virtual Vector linear(const Vector& u) const = 0;
  virtual Vector bilinear(const Vector& u, const Vector& w) const = 0;
  const Vector& forcing() const { return forcing_; }

  /// Gram matrix of the model inner product in state coordinates.
  virtual Matrix gram() const { return Matrix::Identity(dimension(), dimension()); }
  virtual double inner(const Vector& u, const Vector& w) const { return u.dot(w); }
  double norm(const Vector& u) const { return std::sqrt(inner(u, u)); }

  double r0() const { return r0_; }
  double r1() const { return r1_; }
  /// sqrt(2 r0): radius of the absorbing, forward-invariant ball.
  double absorbing_radius() const { return std::sqrt(2.0 * r0_); }

  /// Largest internal step of the integrator; `step` uses
  /// ceil(h / max_substep) substeps unless told otherwise.
  double max_substep() const { return max_substep_; }
  int substeps_for(double h) const;

  /// Psi_h(u). Throws NumericalError if the result is not finite.
  Vector step(const Vector& u, double h) const { return step(u, h, substeps_for(h)); }
  Vector step(const Vector& u, double h, int substeps) const;
  /// Psi_h applied to every column of `ensemble`.
  Matrix step_ensemble(const Matrix& ensemble, double h) const;

 protected:
  DissipativeModel(Vector forcing, double r0, double r1, double max_substep)
      : forcing_(std::move(forcing)), r0_(r0), r1_(r1), max_substep_(max_substep) {}

  virtual Vector integrate(const Vector& u, double h, int substeps) const;
  /// Column-wise f - A u - B(u, u); the default loops over columns.
  virtual Matrix ensemble_field(const Matrix& x) const;
  virtual Matrix integrate_ensemble(const Matrix& x, double h, int substeps) const;

 private:
  Vector forcing_;
  double r0_;
  double r1_;
  double max_substep_;
};

using ModelPtr = std::shared_ptr<const DissipativeModel>;

/// f - A u - B(u, u).
Vector vector_field(const DissipativeModel& model, const Vector& u);

/// A model with explicit dense A and no nonlinearity; used for the linear
/// decay fixture and linear-signal experiments.
class LinearModel final : public DissipativeModel {
 public:
  LinearModel(Matrix a, Vector forcing, double max_substep = 1e-3);
  std::string name() const override { return "linear"; }
  Index dimension() const override { return a_.rows(); }
  Vector linear(const Vector& u) const override { return a_ * u; }
  Vector bilinear(const Vector& u, const Vector&) const override {
    return Vector::Zero(u.size());
  }
  const Matrix& a() const { return a_; }

 private:
  Matrix a_;
};

class Lorenz63 final : public DissipativeModel {
 public:
  /// Shifted coordinates (x, y, z - r - a): forcing lives in the third slot.
  Lorenz63(double a = 10.0, double b = 8.0 / 3.0, double r = 28.0,
           double max_substep = 1e-3);
  std::string name() const override { return "lorenz63"; }
  Index dimension() const override { return 3; }
  Vector linear(const Vector& u) const override;
  Vector bilinear(const Vector& u, const Vector& w) const override;
  const Matrix& a_matrix() const { return a_; }

 protected:
  Matrix ensemble_field(const Matrix& x) const override;

 private:
  Matrix a_;
};

class Lorenz96 final : public DissipativeModel {
 public:
  /// d must be a multiple of 3 and at least 6.
  explicit Lorenz96(Index d, double forcing = 8.0, double max_substep = 1e-3);
  std::string name() const override { return "lorenz96"; }
  Index dimension() const override { return d_; }
  Vector linear(const Vector& u) const override { return u; }
  Vector bilinear(const Vector& u, const Vector& w) const override;

 protected:
  Matrix ensemble_field(const Matrix& x) const override;

 private:
  Index d_;
};

std::shared_ptr<Lorenz63> lorenz63();
std::shared_ptr<Lorenz96> lorenz96(Index d);

}  // namespace filtering
