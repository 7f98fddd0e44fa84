#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "filtering/dynamics.hpp"
#include "filtering/rng.hpp"

namespace filtering {

class SpectralNavierStokes;

/// Orthogonal coordinate projection P; Q = I - P.
///
/// All operators used here act diagonally in state coordinates, so P is held
/// as a 0/1 mask.
class ObservationOperator {
 public:
  enum class Kind { CoordinateMask, EveryThirdUnobserved, FourierCutoff };

  ObservationOperator(Kind kind, Index dimension, std::vector<Index> observed);

  Kind kind() const { return kind_; }
  Index dimension() const { return mask_.size(); }
  const std::vector<Index>& observed() const { return observed_; }
  Index rank() const { return static_cast<Index>(observed_.size()); }
  const Vector& mask() const { return mask_; }

  Vector apply(const Vector& u) const { return mask_.cwiseProduct(u); }
  Vector complement(const Vector& u) const { return u - apply(u); }
  Matrix matrix() const { return mask_.asDiagonal(); }
  /// rank x dimension row selection H with P = H^T H.
  Matrix selection() const;
  Vector restrict_to_observed(const Vector& u) const;

  /// Number of observed lattice points for Fourier cutoffs (both half planes);
  /// equals rank() otherwise.
  Index mode_count() const { return mode_count_; }
  void set_mode_count(Index n) { mode_count_ = n; }

 private:
  Kind kind_;
  Vector mask_;
  std::vector<Index> observed_;
  Index mode_count_;
};

/// Observed indices are 0-based, valid and distinct; the empty set is rejected.
ObservationOperator coordinate_projection(Index dimension, std::vector<Index> observed);
/// Unobserves coordinates 2, 5, 8, ... (0-based), i.e. every third one.
ObservationOperator every_third_unobserved(Index dimension);
/// Retains modes with |k|^2 <= lambda.
ObservationOperator fourier_cutoff(const SpectralNavierStokes& model, double lambda);

/// Centred Gaussian noise with independent coordinates, supported on the
/// observed subspace.
struct NoiseModel {
  Vector stddev;  // zero on unobserved coordinates

  Vector sample(Rng& rng) const { return stddev.cwiseProduct(standard_normal(stddev.size(), rng)); }
  /// Covariance restricted to the observed coordinates (Gamma).
  Matrix observed_covariance(const ObservationOperator& p) const;
};

/// N(0, 1/m) on each of the m observed coordinates, so E|w|^2 = 1.
NoiseModel normalized_noise(const ObservationOperator& p);
/// N(0, 1) on each observed coordinate; E|w|^2 = m.
NoiseModel unit_noise(const ObservationOperator& p);
/// xi_k ~ N(0, (|k|^2 n(lambda))^{-1}) on retained modes, so E||w||_{H1}^2 = 1.
NoiseModel spectral_noise(const SpectralNavierStokes& model, const ObservationOperator& p);

struct ObservationSequence {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<Vector> values;  // values[j - 1] = y_j, j = 1..J
};

/// v_0 ... v_J with v_{j+1} = Psi_h(v_j).
std::vector<Vector> simulate_signal(const DissipativeModel& model, const Vector& v0, int steps,
                                    double h);

/// y_j = P v_j + epsilon w_j for j = 1..J. If `noise_record` is given it
/// receives w_1..w_J.
ObservationSequence observe(const std::vector<Vector>& truth, const ObservationOperator& p,
                            const NoiseModel& noise, double epsilon, Rng& noise_rng,
                            std::vector<Vector>* noise_record = nullptr);

using InitSampler = std::function<Vector(Rng&)>;
InitSampler standard_gaussian_init(Index dimension);

struct TruthAndObservations {
  std::vector<Vector> truth;
  ObservationSequence observations;
};

/// Signal and noise draw from separate generators so the signal does not
/// depend on epsilon or on the noise stream.
TruthAndObservations generate_truth_and_observations(const DissipativeModel& model,
                                                     const ObservationOperator& p,
                                                     const NoiseModel& noise,
                                                     const InitSampler& init, double epsilon,
                                                     int steps, double h, Rng& signal_rng,
                                                     Rng& noise_rng);

/// CSV with header `j,index,value`, one row per observed coordinate per step.
void write_observations_csv(std::ostream& out, const ObservationSequence& obs,
                            const ObservationOperator& p);
ObservationSequence read_observations_csv(std::istream& in, Index dimension);

/// CSV with header `j,x0,...,x{d-1}`.
void write_trajectory_csv(std::ostream& out, const std::vector<Vector>& trajectory);
std::vector<Vector> read_trajectory_csv(std::istream& in);

}  // namespace filtering
