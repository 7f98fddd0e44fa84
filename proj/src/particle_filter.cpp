#include "filtering/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace filtering {

std::pair<Vector, double> weighted_moments(const Matrix& ensemble, const Vector& weights) {
  const Vector mean = ensemble * weights;
  const Matrix centred = ensemble.colwise() - mean;
  const double trace = (centred.array().square().rowwise() * weights.transpose().array()).sum();
  return {mean, trace};
}

namespace {

double effective_sample_size(const Vector& weights) { return 1.0 / weights.squaredNorm(); }

std::vector<Index> systematic_resample(const Vector& weights, Rng& rng) {
  const Index n = weights.size();
  std::uniform_real_distribution<double> uniform(0.0, 1.0 / static_cast<double>(n));
  const double start = uniform(rng);
  std::vector<Index> picks(static_cast<std::size_t>(n));
  double cumulative = weights(0);
  Index src = 0;
  for (Index i = 0; i < n; ++i) {
    const double target = start + static_cast<double>(i) / static_cast<double>(n);
    while (target > cumulative && src < n - 1) cumulative += weights(++src);
    picks[static_cast<std::size_t>(i)] = src;
  }
  return picks;
}

}  // namespace

FilterRun particle_filter(const DissipativeModel& model, const ObservationOperator& p,
                          const NoiseModel& noise, const InitSampler& init,
                          const ObservationSequence& obs, double h,
                          const ParticleFilterOptions& options, Rng& rng) {
  require(obs.epsilon > 0.0, "particle_filter: epsilon must be positive");
  require(options.particles >= 2, "particle_filter: need at least two particles");
  require(options.jitter >= 0.0, "particle_filter: jitter must be nonnegative");
  const Index n = options.particles;
  const Index d = model.dimension();

  // Per-coordinate precision of eps * w on the observed subspace.
  const Vector sd = p.restrict_to_observed(noise.stddev) * obs.epsilon;
  require((sd.array() > 0.0).all(), "particle_filter: noise must be nondegenerate on observed coordinates");
  const Vector precision = sd.array().square().inverse().matrix();
  const auto& observed = p.observed();

  Matrix ensemble(d, n);
  for (Index i = 0; i < n; ++i) ensemble.col(i) = init(rng);
  Vector weights = Vector::Constant(n, 1.0 / static_cast<double>(n));

  FilterRun run;
  run.estimator = "particle";
  const auto record = [&] {
    auto [mean, trace] = weighted_moments(ensemble, weights);
    run.estimates.push_back(std::move(mean));
    run.variance_traces.push_back(trace);
    run.ess.push_back(effective_sample_size(weights));
  };
  record();

  Vector log_w(n);
  for (const Vector& y : obs.values) {
    ensemble = model.step_ensemble(ensemble, h);
    for (Index i = 0; i < n; ++i) {
      double misfit = 0.0;
      for (std::size_t o = 0; o < observed.size(); ++o) {
        const double r = y(observed[o]) - ensemble(observed[o], i);
        misfit += precision(static_cast<Index>(o)) * r * r;
      }
      log_w(i) = std::log(weights(i)) - 0.5 * misfit;
    }
    const double top = log_w.maxCoeff();
    if (!std::isfinite(top)) throw NumericalError("particle_filter: all weights vanished");
    // Linear-space weights would all underflow.
    if (top < std::log(std::numeric_limits<double>::min())) run.degenerate = true;
    weights = (log_w.array() - top).exp().matrix();
    weights /= weights.sum();
    record();

    if (effective_sample_size(weights) < options.resample_fraction * static_cast<double>(n)) {
      const auto picks = systematic_resample(weights, rng);
      Matrix next(d, n);
      for (Index i = 0; i < n; ++i) next.col(i) = ensemble.col(picks[static_cast<std::size_t>(i)]);
      if (options.jitter > 0.0 && n > 1) {
        const Vector mean = next.rowwise().mean();
        const Vector spread =
            ((next.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n - 1))
                .sqrt()
                .matrix();
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Index i = 0; i < n; ++i) {
          for (Index c = 0; c < d; ++c) next(c, i) += options.jitter * spread(c) * gauss(rng);
        }
      }
      ensemble = std::move(next);
      weights.setConstant(1.0 / static_cast<double>(n));
    }
  }
  return run;
}

std::vector<double> posterior_variance_trace(const FilterRun& particle_run) {
  require(particle_run.estimator == "particle",
          "posterior_variance_trace: needs a particle filter run");
  return particle_run.variance_traces;
}

}  // namespace filtering
