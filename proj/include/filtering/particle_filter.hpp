#pragma once

#include "filtering/filters.hpp"

namespace filtering {

struct ParticleFilterOptions {
  int particles = 1000;
  /// Resample when the effective sample size drops below this fraction of N.
  double resample_fraction = 0.5;
  /// Gaussian jitter added after resampling, as a multiple of the per-coordinate
  /// ensemble spread. Zero reproduces the exact bootstrap filter for the
  /// deterministic signal; positive values are a regularisation for
  /// degeneracy studies and change the target distribution.
  double jitter = 0.0;
};

/// Bootstrap particle filter: particles follow Psi exactly, are weighted by the
/// Gaussian likelihood of y_{j+1} given P v with covariance eps^2 Gamma, and are
/// resampled systematically. estimates[j] is the weighted posterior mean,
/// variance_traces[j] the trace of the weighted ensemble covariance.
///
/// A step in which every particle's likelihood underflows (all weights zero in
/// linear space) marks the run degenerate; the filter continues with
/// log-domain normalised weights.
FilterRun particle_filter(const DissipativeModel& model, const ObservationOperator& p,
                          const NoiseModel& noise, const InitSampler& init,
                          const ObservationSequence& obs, double h,
                          const ParticleFilterOptions& options, Rng& rng);

/// Trace of the weighted ensemble covariance per step.
std::vector<double> posterior_variance_trace(const FilterRun& particle_run);

/// Weighted mean and covariance trace of an ensemble (columns are particles).
std::pair<Vector, double> weighted_moments(const Matrix& ensemble, const Vector& weights);

}  // namespace filtering
