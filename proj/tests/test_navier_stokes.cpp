#include <cmath>

#include <gtest/gtest.h>

#include "filtering/harness.hpp"
#include "filtering/navier_stokes.hpp"
#include "filtering/observation.hpp"

using namespace filtering;

namespace {

constexpr double kTwoPi = 6.283185307179586;

SpectralNavierStokes small_model(int k_max = 4, double nu = 0.1) {
  SpectralGrid grid(k_max, kTwoPi);
  const Vector f = grid.forcing_from_velocity({{2, 1, Complex(-0.3, 0.0), Complex(0.6, 0.0)}});
  return SpectralNavierStokes(std::move(grid), nu, f);
}

Vector random_state(const SpectralNavierStokes& model, Rng& rng) {
  return default_init(model)(rng);
}

// Leray-projected (u . grad) w evaluated on a 2^5 x 2^5 physical grid and
// transformed back by a direct DFT; fine enough that no product mode aliases
// onto a retained one when k_max <= 8.
Vector physical_space_advection(const SpectralNavierStokes& model, const Vector& u, const Vector& w) {
  const SpectralGrid& grid = model.grid();
  const int n = 32;
  const int k = grid.k_max();
  const double scale = kTwoPi / grid.period();
  std::vector<std::array<double, 6>> fields(n * n);  // u1 u2 dw1/dx dw1/dy dw2/dx dw2/dy
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double x = grid.period() * a / n, y = grid.period() * b / n;
      std::array<double, 6> acc{};
      for (int n1 = -k; n1 <= k; ++n1) {
        for (int n2 = -k; n2 <= k; ++n2) {
          if (n1 == 0 && n2 == 0) continue;
          const double k1 = scale * n1, k2 = scale * n2;
          const Complex phase = std::exp(Complex(0.0, k1 * x + k2 * y));
          const auto uv = grid.velocity(u, n1, n2);
          const auto wv = grid.velocity(w, n1, n2);
          acc[0] += (uv[0] * phase).real();
          acc[1] += (uv[1] * phase).real();
          acc[2] += (Complex(0, k1) * wv[0] * phase).real();
          acc[3] += (Complex(0, k2) * wv[0] * phase).real();
          acc[4] += (Complex(0, k1) * wv[1] * phase).real();
          acc[5] += (Complex(0, k2) * wv[1] * phase).real();
        }
      }
      fields[a * n + b] = acc;
    }
  }
  Vector out(model.dimension());
  for (Index m = 0; m < grid.mode_count(); ++m) {
    const auto& mode = grid.modes()[m];
    Complex c1 = 0.0, c2 = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double x = grid.period() * a / n, y = grid.period() * b / n;
        const Complex phase = std::exp(Complex(0.0, -(mode.k1 * x + mode.k2 * y)));
        const auto& f = fields[a * n + b];
        c1 += (f[0] * f[2] + f[1] * f[3]) * phase;
        c2 += (f[0] * f[4] + f[1] * f[5]) * phase;
      }
    }
    c1 /= n * n;
    c2 /= n * n;
    // Projection onto the divergence-free direction of this mode.
    const Complex s = mode.e1 * c1 + mode.e2 * c2;
    out(2 * m) = s.real();
    out(2 * m + 1) = s.imag();
  }
  return out;
}

}  // namespace

TEST(SpectralGrid, CountsHalfPlaneModes) {
  const SpectralGrid grid(8, kTwoPi);
  EXPECT_EQ(grid.mode_count(), (17 * 17 - 1) / 2);
  EXPECT_EQ(grid.dimension(), 288);
  EXPECT_DOUBLE_EQ(grid.smallest_k_squared(), 1.0);
}

TEST(SpectralGrid, LocateAndConjugateSymmetry) {
  const SpectralGrid grid(3, kTwoPi);
  EXPECT_FALSE(grid.locate(0, 0));
  EXPECT_FALSE(grid.locate(4, 0));
  const auto a = grid.locate(1, 2);
  const auto b = grid.locate(-1, -2);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->first, b->first);
  EXPECT_NE(a->second, b->second);
  Rng rng(1);
  const Vector u = standard_normal(grid.dimension(), rng);
  EXPECT_LT(grid.max_conjugate_asymmetry(u), 1e-15);
  EXPECT_LT(grid.max_divergence(u), 1e-14);
  EXPECT_EQ(grid.coefficient(u, -1, -2), std::conj(grid.coefficient(u, 1, 2)));
}

TEST(SpectralGrid, ForcingValidation) {
  const SpectralGrid grid(4, kTwoPi);
  EXPECT_THROW(grid.forcing_from_velocity({{0, 0, 1.0, 0.0}}), ConfigError);
  EXPECT_THROW(grid.forcing_from_velocity({{5, 0, 0.0, 1.0}}), ConfigError);
  EXPECT_THROW(grid.forcing_from_velocity({{1, 0, 1.0, 0.0}}), ConfigError);  // k . f != 0
  EXPECT_THROW(grid.forcing_from_velocity({{1, 0, 0.0, 1.0}, {-1, 0, 0.0, 2.0}}), ConfigError);
  const Vector f = grid.forcing_from_velocity({{1, 0, 0.0, 1.0}, {-1, 0, 0.0, 1.0}});
  const auto v = grid.velocity(f, 1, 0);
  EXPECT_NEAR(std::abs(v[1] - Complex(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(v[0]), 0.0, 1e-15);
}

TEST(SpectralNavierStokes, BilinearMatchesPhysicalSpaceAdvection) {
  const SpectralNavierStokes model = small_model(4);
  Rng rng(2);
  const Vector u = random_state(model, rng);
  const Vector w = random_state(model, rng);
  const Vector oracle = 0.5 * (physical_space_advection(model, u, w) + physical_space_advection(model, w, u));
  EXPECT_LT((model.bilinear(u, w) - oracle).norm(), 1e-12 * (1.0 + oracle.norm()));
}

TEST(SpectralNavierStokes, ConservesEnergyAndEnstrophy) {
  const SpectralNavierStokes model = small_model(8);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vector u = 10.0 * random_state(model, rng);
    const Vector b = model.bilinear(u, u);
    const double scale = model.norm(u) * model.norm(u) * model.norm(u);
    EXPECT_LT(std::abs(model.inner(b, u)), 1e-10 * scale);
    EXPECT_LT(std::abs(model.grid().l2_inner(b, u)), 1e-10 * scale);
  }
}

TEST(SpectralNavierStokes, SingleModeDecaysExactly) {
  // A lone Fourier mode is a steady shear with vanishing advection.
  SpectralGrid grid(4, kTwoPi);
  SpectralNavierStokes model(grid, 0.2, Vector::Zero(grid.dimension()));
  const auto loc = grid.locate(2, 1);
  ASSERT_TRUE(loc);
  Vector u = Vector::Zero(model.dimension());
  u(2 * loc->first) = 1.0;
  u(2 * loc->first + 1) = -0.5;
  EXPECT_LT(model.bilinear(u, u).norm(), 1e-14);
  const Vector u0 = u;
  for (int j = 0; j < 100; ++j) u = model.step(u, 0.01);
  EXPECT_LT((u - std::exp(-0.2 * 5.0) * u0).norm(), 1e-12);
}

TEST(SpectralNavierStokes, StaysDivergenceFreeAndReal) {
  const SpectralNavierStokes model = small_model(8);
  Rng rng(6);
  Vector u = random_state(model, rng);
  for (int j = 0; j < 500; ++j) u = model.step(u, 0.01);
  EXPECT_LT(model.grid().max_divergence(u), 1e-12);
  EXPECT_LT(model.grid().max_conjugate_asymmetry(u), 1e-12);
}

TEST(SpectralNavierStokes, AbsorbingRadiusUsesTheta) {
  const SpectralNavierStokes model = small_model(8);
  EXPECT_DOUBLE_EQ(model.theta(), 0.1);
  const double f_h1 = model.norm(model.forcing());
  EXPECT_NEAR(model.absorbing_radius(), std::sqrt(2.0) * f_h1 / model.theta(), 1e-9);
}

TEST(SpectralNavierStokes, IntegratingFactorAgreesWithPlainRk4) {
  const SpectralNavierStokes model = small_model(4);
  Rng rng(8);
  const Vector u0 = 3.0 * random_state(model, rng);
  const Vector reference = rk4(u0, [&](const Vector& u) { return vector_field(model, u); }, 0.1, 4000);
  EXPECT_LT((model.step(u0, 0.1, 200) - reference).norm(), 1e-9 * reference.norm());
}

TEST(FourierCutoff, CountsLatticePoints) {
  const SpectralNavierStokes model = small_model(8);
  EXPECT_EQ(fourier_cutoff(model, 1.0).mode_count(), 4);
  EXPECT_EQ(fourier_cutoff(model, 2.0).mode_count(), 8);
  EXPECT_EQ(fourier_cutoff(model, 4.0).mode_count(), 12);
  EXPECT_EQ(fourier_cutoff(model, 1.0).rank(), 4);  // two stored modes, two reals each
}
