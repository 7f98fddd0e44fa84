#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "filtering/dynamics.hpp"

namespace filtering {

using Complex = std::complex<double>;

/// Wavevector bookkeeping for a Galerkin truncation of divergence-free,
/// zero-mean fields on the torus [0, l]^2.
///
/// Retained wavevectors are k = (2 pi / l) n with 0 < |n|_inf <= k_max. Only
/// the half plane (n1 > 0, or n1 == 0 and n2 > 0) is stored; the other half
/// follows from conjugate symmetry. Each stored mode carries one complex
/// scalar v'_k, laid out as two consecutive real coordinates (Re, Im). The
/// velocity coefficient is v_k = v'_k e_k with e_k = s k_perp / |k|,
/// k_perp = (-k2, k1), where s = +1 on the stored half plane and -1 on its
/// mirror; with this choice v'_{-k} = conj(v'_k).
class SpectralGrid {
 public:
  struct Mode {
    int n1;
    int n2;
    double k1;
    double k2;
    double k_squared;
    double e1;  // unit divergence-free direction
    double e2;
  };

  SpectralGrid(int k_max, double period);

  int k_max() const { return k_max_; }
  double period() const { return period_; }
  const std::vector<Mode>& modes() const { return modes_; }
  Index mode_count() const { return static_cast<Index>(modes_.size()); }
  Index dimension() const { return 2 * mode_count(); }

  /// Stored index of lattice point n, and whether the stored coefficient must
  /// be conjugated to obtain the one at n. Empty for n = 0 or outside the
  /// truncation.
  std::optional<std::pair<Index, bool>> locate(int n1, int n2) const;

  Complex coefficient(const Vector& u, Index mode) const {
    return {u(2 * mode), u(2 * mode + 1)};
  }
  /// Scalar coefficient at an arbitrary retained lattice point.
  Complex coefficient(const Vector& u, int n1, int n2) const;
  /// Velocity coefficient (two complex components) at lattice point n.
  std::array<Complex, 2> velocity(const Vector& u, int n1, int n2) const;

  /// Velocity-space forcing term at lattice point n.
  struct ForcingMode {
    int n1;
    int n2;
    Complex fx;
    Complex fy;
  };
  /// Converts velocity forcing to stored coordinates. A mode and its mirror may
  /// both be given only if they are conjugate. Throws ConfigError for the zero
  /// mode, modes outside the truncation, or non-solenoidal forcing.
  Vector forcing_from_velocity(const std::vector<ForcingMode>& modes) const;

  /// Largest |k . v_k| over the full retained lattice.
  double max_divergence(const Vector& u) const;
  /// Largest |v_{-k} - conj(v_k)| over the full retained lattice.
  double max_conjugate_asymmetry(const Vector& u) const;

  /// Per-coordinate weights 2|k|^2 of the H1-equivalent norm
  /// sum_k |k|^2 |v_k|^2 (the factor 2 accounts for the mirrored half plane).
  Vector h1_weights() const;
  double l2_inner(const Vector& u, const Vector& w) const { return 2.0 * u.dot(w); }
  double smallest_k_squared() const;

 private:
  int k_max_;
  double period_;
  std::vector<Mode> modes_;
  std::vector<Index> lookup_;  // (2 k_max + 1)^2 grid; -1 where absent
};

/// Spectral Galerkin 2D incompressible Navier-Stokes,
///   A u = nu |k|^2 u_k,  B(u, v) = (1/2) P_H[u.grad v] + (1/2) P_H[v.grad u],
/// with the nonlinear term evaluated by direct convolution over the retained
/// triads. The model norm is the H1-equivalent sum_k |k|^2 |u_k|^2.
/// Time stepping is integrating-factor RK4 on e^{nu |k|^2 t} u_k.
class SpectralNavierStokes final : public DissipativeModel {
 public:
  SpectralNavierStokes(SpectralGrid grid, double viscosity, Vector forcing,
                       double max_substep = 5e-3);

  std::string name() const override { return "navier_stokes"; }
  Index dimension() const override { return grid_.dimension(); }
  Vector linear(const Vector& u) const override;
  Vector bilinear(const Vector& u, const Vector& w) const override;
  Matrix gram() const override { return weights_.asDiagonal(); }
  double inner(const Vector& u, const Vector& w) const override {
    return (weights_.array() * u.array() * w.array()).sum();
  }

  const SpectralGrid& grid() const { return grid_; }
  double viscosity() const { return viscosity_; }
  /// Smallest eigenvalue of A on the truncated space, nu (2 pi / l)^2.
  double theta() const { return viscosity_ * grid_.smallest_k_squared(); }
  /// Stationary solution of the linear problem, A^{-1} f.
  Vector linear_steady_state() const;

 protected:
  Vector integrate(const Vector& u, double h, int substeps) const override;
  Matrix integrate_ensemble(const Matrix& x, double h, int substeps) const override;

 private:
  struct Triad {
    Index target;
    Index p;  // full-lattice indices: < M stored, >= M mirrored
    Index q;
    double weight;
  };
  Complex full_coefficient(const Vector& u, Index full) const;

  SpectralGrid grid_;
  double viscosity_;
  Vector weights_;
  Vector decay_;  // nu |k|^2 per coordinate
  std::vector<Triad> triads_;
};

}  // namespace filtering
