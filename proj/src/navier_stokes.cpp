#include "filtering/navier_stokes.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace filtering {

namespace {
bool in_upper_half(int n1, int n2) { return n1 > 0 || (n1 == 0 && n2 > 0); }
}  // namespace

SpectralGrid::SpectralGrid(int k_max, double period) : k_max_(k_max), period_(period) {
  require(k_max >= 1, "SpectralGrid: k_max must be at least 1");
  require(period > 0.0, "SpectralGrid: period must be positive");
  const double scale = 2.0 * std::numbers::pi / period;
  const int side = 2 * k_max + 1;
  lookup_.assign(static_cast<std::size_t>(side * side), -1);
  for (int n1 = 0; n1 <= k_max; ++n1) {
    for (int n2 = -k_max; n2 <= k_max; ++n2) {
      if (!in_upper_half(n1, n2)) continue;
      const double k1 = scale * n1;
      const double k2 = scale * n2;
      const double k_norm = std::hypot(k1, k2);
      lookup_[static_cast<std::size_t>((n1 + k_max) * side + (n2 + k_max))] =
          static_cast<Index>(modes_.size());
      modes_.push_back({n1, n2, k1, k2, k1 * k1 + k2 * k2, -k2 / k_norm, k1 / k_norm});
    }
  }
}

std::optional<std::pair<Index, bool>> SpectralGrid::locate(int n1, int n2) const {
  if (std::abs(n1) > k_max_ || std::abs(n2) > k_max_ || (n1 == 0 && n2 == 0)) {
    return std::nullopt;
  }
  const bool mirrored = !in_upper_half(n1, n2);
  if (mirrored) {
    n1 = -n1;
    n2 = -n2;
  }
  const int side = 2 * k_max_ + 1;
  const Index idx = lookup_[static_cast<std::size_t>((n1 + k_max_) * side + (n2 + k_max_))];
  return std::make_pair(idx, mirrored);
}

Complex SpectralGrid::coefficient(const Vector& u, int n1, int n2) const {
  const auto loc = locate(n1, n2);
  require(loc.has_value(), fmt::format("SpectralGrid: mode ({}, {}) not retained", n1, n2));
  const Complex c = coefficient(u, loc->first);
  return loc->second ? std::conj(c) : c;
}

std::array<Complex, 2> SpectralGrid::velocity(const Vector& u, int n1, int n2) const {
  const auto loc = locate(n1, n2);
  require(loc.has_value(), fmt::format("SpectralGrid: mode ({}, {}) not retained", n1, n2));
  const Mode& m = modes_[static_cast<std::size_t>(loc->first)];
  const Complex c = loc->second ? std::conj(coefficient(u, loc->first))
                                : coefficient(u, loc->first);
  // e_{-k} = e_k by the sign convention, so the direction is shared.
  return {c * m.e1, c * m.e2};
}

Vector SpectralGrid::forcing_from_velocity(const std::vector<ForcingMode>& forcing) const {
  Vector f = Vector::Zero(dimension());
  std::vector<bool> seen(modes_.size(), false);
  const double scale = 2.0 * std::numbers::pi / period_;
  for (const ForcingMode& fm : forcing) {
    require(!(fm.n1 == 0 && fm.n2 == 0), "forcing: the zero mode must vanish (zero mean)");
    const auto loc = locate(fm.n1, fm.n2);
    require(loc.has_value(),
            fmt::format("forcing: mode ({}, {}) outside the truncation", fm.n1, fm.n2));
    const double k1 = scale * fm.n1;
    const double k2 = scale * fm.n2;
    const Complex div = k1 * fm.fx + k2 * fm.fy;
    const double size = std::abs(fm.fx) + std::abs(fm.fy);
    require(std::abs(div) <= 1e-12 * std::max(1.0, size) * std::hypot(k1, k2),
            fmt::format("forcing: mode ({}, {}) is not divergence-free", fm.n1, fm.n2));
    const Mode& m = modes_[static_cast<std::size_t>(loc->first)];
    Complex scalar = m.e1 * fm.fx + m.e2 * fm.fy;
    if (loc->second) scalar = std::conj(scalar);
    const auto slot = static_cast<std::size_t>(loc->first);
    if (seen[slot]) {
      const Complex existing = coefficient(f, loc->first);
      require(std::abs(existing - scalar) <= 1e-12 * std::max(1.0, std::abs(scalar)),
              fmt::format("forcing: modes ±({}, {}) are not conjugate", fm.n1, fm.n2));
      continue;
    }
    seen[slot] = true;
    f(2 * loc->first) = scalar.real();
    f(2 * loc->first + 1) = scalar.imag();
  }
  return f;
}

double SpectralGrid::max_divergence(const Vector& u) const {
  double worst = 0.0;
  for (const Mode& m : modes_) {
    for (int sign : {1, -1}) {
      const auto v = velocity(u, sign * m.n1, sign * m.n2);
      const Complex div = static_cast<double>(sign) * (m.k1 * v[0] + m.k2 * v[1]);
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

double SpectralGrid::max_conjugate_asymmetry(const Vector& u) const {
  double worst = 0.0;
  for (const Mode& m : modes_) {
    const auto plus = velocity(u, m.n1, m.n2);
    const auto minus = velocity(u, -m.n1, -m.n2);
    worst = std::max({worst, std::abs(minus[0] - std::conj(plus[0])),
                      std::abs(minus[1] - std::conj(plus[1]))});
  }
  return worst;
}

Vector SpectralGrid::h1_weights() const {
  Vector w(dimension());
  for (Index i = 0; i < mode_count(); ++i) {
    w(2 * i) = w(2 * i + 1) = 2.0 * modes_[static_cast<std::size_t>(i)].k_squared;
  }
  return w;
}

double SpectralGrid::smallest_k_squared() const {
  double best = modes_.front().k_squared;
  for (const Mode& m : modes_) best = std::min(best, m.k_squared);
  return best;
}

namespace {

double ns_r0(const SpectralGrid& grid, double viscosity, const Vector& forcing) {
  require(viscosity > 0.0, "navier_stokes: viscosity must be positive");
  require(forcing.size() == grid.dimension(), "navier_stokes: forcing has wrong length");
  const double theta = viscosity * grid.smallest_k_squared();
  const double f_sq = (grid.h1_weights().array() * forcing.array().square()).sum();
  return f_sq / (theta * theta);
}

}  // namespace

SpectralNavierStokes::SpectralNavierStokes(SpectralGrid grid, double viscosity,
                                           Vector forcing, double max_substep)
    : DissipativeModel(forcing, ns_r0(grid, viscosity, forcing),
                       viscosity * grid.smallest_k_squared(), max_substep),
      grid_(std::move(grid)),
      viscosity_(viscosity),
      weights_(grid_.h1_weights()),
      decay_(grid_.dimension()) {
  const auto& modes = grid_.modes();
  const Index m = grid_.mode_count();
  for (Index i = 0; i < m; ++i) {
    decay_(2 * i) = decay_(2 * i + 1) = viscosity_ * modes[static_cast<std::size_t>(i)].k_squared;
  }

  // Full-lattice index f: f < m is stored mode f, f >= m is its mirror -k.
  const auto wavevector = [&](Index f) {
    const auto& md = modes[static_cast<std::size_t>(f % m)];
    const double s = f < m ? 1.0 : -1.0;
    return std::array<double, 2>{s * md.k1, s * md.k2};
  };
  const auto lattice = [&](Index f) {
    const auto& md = modes[static_cast<std::size_t>(f % m)];
    const int s = f < m ? 1 : -1;
    return std::array<int, 2>{s * md.n1, s * md.n2};
  };
  // c(p, q, k) = (e_p . q)(e_q . e_k): coefficient of i u'_p v'_q in
  // e_k . [(u_p . i q) v_q].
  const auto c = [&](Index p, Index q, Index k) {
    const auto& ep = modes[static_cast<std::size_t>(p % m)];
    const auto& eq = modes[static_cast<std::size_t>(q % m)];
    const auto& ek = modes[static_cast<std::size_t>(k)];
    const auto qv = wavevector(q);
    return (ep.e1 * qv[0] + ep.e2 * qv[1]) * (eq.e1 * ek.e1 + eq.e2 * ek.e2);
  };
  for (Index k = 0; k < m; ++k) {
    const auto nk = lattice(k);
    for (Index p = 0; p < 2 * m; ++p) {
      const auto np = lattice(p);
      const auto loc = grid_.locate(nk[0] - np[0], nk[1] - np[1]);
      if (!loc) continue;
      const Index q = loc->first + (loc->second ? m : 0);
      if (q < p) continue;  // unordered pairs; p == q has zero weight
      if (q == p) continue;
      const double weight = 0.5 * (c(p, q, k) + c(q, p, k));
      if (weight != 0.0) triads_.push_back({k, p, q, weight});
    }
  }
}

Complex SpectralNavierStokes::full_coefficient(const Vector& u, Index full) const {
  const Index m = grid_.mode_count();
  if (full < m) return {u(2 * full), u(2 * full + 1)};
  return {u(2 * (full - m)), -u(2 * (full - m) + 1)};
}

Vector SpectralNavierStokes::linear(const Vector& u) const {
  require(u.size() == dimension(), "navier_stokes: state has wrong length");
  return decay_.cwiseProduct(u);
}

// B'(u, v)_k = i sum_{p+q=k, unordered} w_pqk (u'_p v'_q + v'_p u'_q)
Vector SpectralNavierStokes::bilinear(const Vector& u, const Vector& w) const {
  require(u.size() == dimension() && w.size() == dimension(),
          "navier_stokes: state has wrong length");
  std::vector<Complex> acc(static_cast<std::size_t>(grid_.mode_count()), Complex(0.0, 0.0));
  for (const Triad& t : triads_) {
    const Complex up = full_coefficient(u, t.p);
    const Complex uq = full_coefficient(u, t.q);
    const Complex wp = full_coefficient(w, t.p);
    const Complex wq = full_coefficient(w, t.q);
    acc[static_cast<std::size_t>(t.target)] += t.weight * (up * wq + wp * uq);
  }
  Vector out(dimension());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    // multiply by i
    out(static_cast<Index>(2 * k)) = -acc[k].imag();
    out(static_cast<Index>(2 * k + 1)) = acc[k].real();
  }
  return out;
}

Vector SpectralNavierStokes::linear_steady_state() const {
  return forcing().cwiseQuotient(decay_);
}

// Lawson (integrating-factor) RK4 for u' = -D u + N(u), N(u) = f - B(u, u).
Vector SpectralNavierStokes::integrate(const Vector& u0, double h, int substeps) const {
  const double dt = h / substeps;
  const Vector full = (-dt * decay_).array().exp().matrix();
  const Vector half = (-0.5 * dt * decay_).array().exp().matrix();
  const auto nonlinear = [this](const Vector& x) { return Vector(forcing() - bilinear(x, x)); };
  Vector u = u0;
  for (int s = 0; s < substeps; ++s) {
    const Vector k1 = nonlinear(u);
    const Vector k2 = nonlinear(half.cwiseProduct(u + 0.5 * dt * k1));
    const Vector k3 = nonlinear(half.cwiseProduct(u) + 0.5 * dt * k2);
    const Vector k4 = nonlinear(full.cwiseProduct(u) + dt * half.cwiseProduct(k3));
    u = full.cwiseProduct(u) +
        (dt / 6.0) * (full.cwiseProduct(k1) + 2.0 * half.cwiseProduct(k2 + k3) + k4);
  }
  return u;
}

Matrix SpectralNavierStokes::integrate_ensemble(const Matrix& x, double h, int substeps) const {
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.cols(); ++i) out.col(i) = integrate(x.col(i), h, substeps);
  return out;
}

}  // namespace filtering
