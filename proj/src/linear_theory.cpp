#include "filtering/linear_theory.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>
#include <fmt/format.h>

namespace filtering {

namespace {

using ComplexMatrix = MatrixX<std::complex<double>>;

// Numerical rank of [lambda I - L; P]; pivots below 1e-8 of the largest count
// as zero.
bool stacked_full_rank(const Matrix& l, const Matrix& p, std::complex<double> lambda) {
  const Index d = l.rows();
  ComplexMatrix stacked(d + p.rows(), d);
  stacked.topRows(d) = lambda * ComplexMatrix::Identity(d, d) - l.cast<std::complex<double>>();
  stacked.bottomRows(p.rows()) = p.cast<std::complex<double>>();
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(stacked);
  qr.setThreshold(1e-8);
  return qr.rank() == d;
}

}  // namespace

DetectabilityVerdict hautus_detectable(const Matrix& l, const Matrix& p, double tol) {
  require(l.rows() == l.cols(), "hautus_detectable: L must be square");
  require(p.cols() == l.rows(), "hautus_detectable: P must have as many columns as L");
  DetectabilityVerdict verdict;
  if (l.rows() == 0) return verdict;
  Eigen::EigenSolver<Matrix> es(l, false);
  if (es.info() != Eigen::Success) throw NumericalError("hautus_detectable: eigensolver failed");
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    if (!stacked_full_rank(l, p, lambda)) {
      verdict.detectable = false;
      verdict.witness = lambda;
      return verdict;
    }
  }
  return verdict;
}

bool detectability_shift_equivalence(const Matrix& l, const Matrix& p, double tol) {
  return hautus_detectable(l, p, tol).detectable == hautus_detectable(l, p * l, tol).detectable;
}

GainSearchResult find_gain(const Matrix& l, const ObservationOperator& p, int budget,
                           std::uint64_t seed) {
  const Index d = l.rows();
  require(l.cols() == d && p.dimension() == d, "find_gain: dimension mismatch");
  const Index m = p.rank();
  const Matrix h = p.selection();

  GainSearchResult best;
  best.gain = Matrix::Zero(d, d);
  best.spectral_radius = std::numeric_limits<double>::infinity();
  int evaluations = 0;

  // The free parameters are the d x m block G with D P = G H.
  const auto objective = [&](const Matrix& g) {
    ++evaluations;
    return spectral_radius(l - g * h);
  };
  const auto descend = [&](Matrix g) {
    double value = objective(g);
    double step = 1.0;
    while (step > 1e-7 && evaluations < budget && value > 0.0) {
      bool improved = false;
      for (Index r = 0; r < d && evaluations < budget; ++r) {
        for (Index c = 0; c < m && evaluations < budget; ++c) {
          for (double dir : {1.0, -1.0}) {
            Matrix trial = g;
            trial(r, c) += dir * step;
            const double v = objective(trial);
            if (v < value - 1e-15) {
              g = std::move(trial);
              value = v;
              improved = true;
              break;
            }
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (value < best.spectral_radius) {
      best.spectral_radius = value;
      best.gain = g * h;
    }
  };

  descend(Matrix::Zero(d, m));
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = std::max(1.0, l.norm());
  while (best.spectral_radius >= 1.0 && evaluations < budget) {
    Matrix g(d, m);
    for (Index i = 0; i < g.size(); ++i) g(i) = scale * gauss(rng);
    descend(std::move(g));
  }
  best.success = best.spectral_radius < 1.0;
  best.evaluations = evaluations;
  return best;
}

std::optional<ContractiveNorm> contractive_norm(const Matrix& m) {
  require(m.rows() == m.cols(), "contractive_norm: matrix must be square");
  const Index d = m.rows();
  if (spectral_radius(m) >= 1.0) return std::nullopt;
  // S_{k+1} = S_k + A_k^T S_k A_k, A_{k+1} = A_k^2 sums 2^{k+1} terms.
  Matrix s = Matrix::Identity(d, d);
  Matrix a = m;
  ContractiveNorm out;
  for (int iter = 0; iter < 64; ++iter) {
    const Matrix increment = a.transpose() * s * a;
    s += increment;
    a = a * a;
    out.terms = iter + 1;
    if (!s.allFinite()) return std::nullopt;
    if (increment.norm() < 1e-14 * s.norm()) {
      s = 0.5 * (s + s.transpose());
      const double lmax =
          Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues()(d - 1);
      out.form = std::move(s);
      out.alpha = 1.0 - 1.0 / lmax;
      if (!(out.alpha < 1.0)) return std::nullopt;
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace filtering
