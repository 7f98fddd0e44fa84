#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "filtering/filters.hpp"
#include "filtering/navier_stokes.hpp"
#include "filtering/particle_filter.hpp"

namespace filtering {

struct ModelSpec {
  std::string name = "lorenz63";  // lorenz63 | lorenz96 | navier_stokes
  Index dimension = 60;           // lorenz96
  double l96_forcing = 8.0;
  double viscosity = 0.1;         // navier_stokes
  double period = 6.283185307179586;
  int k_max = 8;
  std::vector<SpectralGrid::ForcingMode> forcing_modes = {
      {2, 1, Complex(-0.3, 0.0), Complex(0.6, 0.0)}};
  double max_substep = 0.0;       // 0: model default
};

struct ObservationSpec {
  std::string kind = "coordinates";  // coordinates | every_third | fourier
  std::vector<Index> observed = {0};
  double lambda = 1.0;
  std::string noise = "normalized";  // normalized | unit | spectral
};

struct FilterSpec {
  std::string kind = "truncated";  // truncated | observer | 3dvar | particle
  double radius = 0.0;             // 0: default B_V radius
  double sigma = 1.0;              // 3dvar model standard deviation, C = sigma^2 I
  ParticleFilterOptions particle;
};

enum class MseMode { FinalTime, TimeAverage };

struct ExperimentConfig {
  ModelSpec model;
  ObservationSpec observation;
  std::vector<FilterSpec> filters = {FilterSpec{}};
  std::vector<double> epsilons = {1.0, 0.1, 0.01};
  double step = 0.01;
  double final_time = 5.0;
  int n_inits = 20;
  int n_noise = 5;
  std::uint64_t seed = 42;
  int threads = 1;
  MseMode mode = MseMode::FinalTime;

  int steps() const;
  void validate() const;
};

/// Model, observation operator and noise law assembled from a config.
struct Problem {
  ModelPtr model;
  ObservationOperator observation;
  NoiseModel noise;
  InitSampler init;
};

Problem build_problem(const ExperimentConfig& config);
ModelPtr build_model(const ModelSpec& spec);

/// Initial-condition law: N(0, I) for the finite-dimensional models; for the
/// spectral model independent Gaussians scaled so that E ||v_0||^2 = 1 in the
/// model norm.
InitSampler default_init(const DissipativeModel& model);

/// Runs one configured filter from its default start: m0 = 0 for the
/// observers, the prior `problem.init` for the particle filter.
FilterRun run_filter(const FilterSpec& spec, const Problem& problem, const ObservationSequence& obs,
                     double h, Rng& particle_rng);

struct MseEntry {
  std::string filter;
  double epsilon = 0.0;
  double mse = 0.0;
  double stderr_ = 0.0;
  int n_trials = 0;
  int excluded = 0;
};

struct ScalingFit {
  double slope = 0.0;
  double standard_error = 0.0;
};

struct MseReport {
  std::vector<MseEntry> entries;
  ExperimentConfig config;
};

/// Monte Carlo MSE over n_inits x n_noise trials per epsilon. The error is
/// |v_J - est_J|^2 at the final step, or its average over the second half of
/// the run in TimeAverage mode. Trials whose signal or filter produce
/// non-finite values are excluded and counted. Deterministic for a fixed seed
/// regardless of `threads`.
MseReport run_mse_experiment(const ExperimentConfig& config);

/// Least-squares slope of log MSE against log epsilon with its standard error.
ScalingFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points);
/// Convenience: fit over all entries of one filter.
ScalingFit fit_scaling_exponent(const MseReport& report, const std::string& filter);

struct SqueezeResult {
  double alpha_hat = 0.0;     // max observed ratio
  std::vector<double> ratios;
  int failed = 0;             // pairs whose trajectories were not finite
  double bin_width = 0.05;
  std::vector<int> histogram; // counts of ratios in [i w, (i+1) w)
};

using Map = std::function<Vector(const Vector&)>;

/// Samples v uniformly in {|v| <= r_inner} (model norm, Gram matrix `gram`) and
/// u uniformly in {V(u)^{1/2} <= r_outer}, and returns the largest
/// V((I - D P)(Psi(v) - Psi(u))) / V(v - u).
SqueezeResult empirical_squeezing(const Map& psi, const Matrix& gram,
                                  const ObservationOperator& p, const GainOperator& d,
                                  const VNorm& vnorm, double r_inner, double r_outer,
                                  int n_samples, Rng& rng, double bin_width = 0.05);

/// Model version: Psi = Psi_h, r_inner = absorbing radius, r_outer = default
/// B_V radius.
SqueezeResult empirical_squeezing(const DissipativeModel& model, const ObservationOperator& p,
                                  const GainOperator& d, const VNorm& vnorm, double h,
                                  int n_samples, Rng& rng, double bin_width = 0.05);

/// Uniform sample from the ellipsoid {x : x^T G x <= radius^2}.
Vector sample_ellipsoid(const Matrix& gram, double radius, Rng& rng);

/// CSV `filter,epsilon,mse,stderr,n_trials,excluded` and an INI sidecar
/// `<path>.ini` echoing the configuration and seed.
void write_report(const MseReport& report, const std::string& path);
std::vector<MseEntry> read_report(const std::string& path);
std::string format_report_csv(const MseReport& report);

/// CSV `ratio_bin,count`.
std::string format_histogram_csv(const SqueezeResult& result);

}  // namespace filtering
