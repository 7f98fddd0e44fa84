#pragma once

#include <complex>
#include <cstdint>
#include <optional>

#include <Eigen/Eigenvalues>

#include "filtering/filters.hpp"
#include "filtering/types.hpp"

namespace filtering {

/// max |lambda| over the eigenvalues of a square matrix.
template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  require(m.rows() == m.cols(), "spectral_radius: matrix must be square");
  if (m.rows() == 0) return 0.0;
  const Matrix dense = m.template cast<double>();
  Eigen::EigenSolver<Matrix> es(dense, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct DetectabilityVerdict {
  bool detectable = true;
  /// An eigenvalue with |lambda| >= 1 - tol whose eigenvector lies in Ker P.
  std::optional<std::complex<double>> witness;
};

/// Hautus test: (L, P) is detectable iff rank [lambda I - L; P] = d for every
/// eigenvalue with |lambda| >= 1 - tol. `p` is any matrix with d columns
/// (a d x d projection or a row selection).
DetectabilityVerdict hautus_detectable(const Matrix& l, const Matrix& p, double tol = 1e-9);

/// hautus(L, P) == hautus(L, P L). Always true; a self-check of the kernel
/// identity Ker(lambda I - L) cap Ker(P L) = Ker(lambda I - L) cap Ker(P),
/// lambda != 0.
bool detectability_shift_equivalence(const Matrix& l, const Matrix& p, double tol = 1e-9);

struct GainSearchResult {
  bool success = false;
  Matrix gain;  // d x d, acting through the observed coordinates
  double spectral_radius = 0.0;
  int evaluations = 0;
};

/// Searches for D minimising rho(L - D P): coordinate descent from D = 0, then
/// random restarts until `budget` objective evaluations are spent. Success iff
/// the best rho is < 1. Failure is inconclusive; the Hautus test decides
/// detectability.
GainSearchResult find_gain(const Matrix& l, const ObservationOperator& p, int budget = 20000,
                           std::uint64_t seed = 0);

struct ContractiveNorm {
  Matrix form;          // S = M^T S M + I
  double alpha = 0.0;   // V(Mx) <= alpha V(x), alpha = 1 - 1/lambda_max(S)
  int terms = 0;        // doubling iterations used
};

/// Solves S = M^T S M + I by summing sum_k (M^T)^k M^k (doubling form) until
/// the increment falls below 1e-14 relative. Returns nullopt if rho(M) >= 1
/// or the series fails to converge.
std::optional<ContractiveNorm> contractive_norm(const Matrix& m);

}  // namespace filtering
