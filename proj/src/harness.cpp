#include "filtering/harness.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <Eigen/Cholesky>
#include <fmt/format.h>

namespace filtering {

int ExperimentConfig::steps() const {
  const double ratio = final_time / step;
  return static_cast<int>(std::llround(ratio));
}

void ExperimentConfig::validate() const {
  require(step > 0.0 && final_time > 0.0, "config: step and final_time must be positive");
  const double ratio = final_time / step;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio),
          fmt::format("config: final_time {} is not a multiple of step {}", final_time, step));
  require(n_inits >= 1 && n_noise >= 1, "config: inits and noise_sequences must be >= 1");
  require(threads >= 1, "config: threads must be >= 1");
  require(!epsilons.empty(), "config: need at least one epsilon");
  for (double e : epsilons) require(e >= 0.0, "config: epsilons must be nonnegative");
  require(!filters.empty(), "config: need at least one filter");
  for (const auto& f : filters) {
    require(f.kind == "truncated" || f.kind == "observer" || f.kind == "3dvar" ||
                f.kind == "particle",
            fmt::format("config: unknown filter kind '{}'", f.kind));
  }
}

ModelPtr build_model(const ModelSpec& spec) {
  if (spec.name == "lorenz63") {
    return std::make_shared<Lorenz63>(10.0, 8.0 / 3.0, 28.0,
                                      spec.max_substep > 0 ? spec.max_substep : 1e-3);
  }
  if (spec.name == "lorenz96") {
    return std::make_shared<Lorenz96>(spec.dimension, spec.l96_forcing,
                                      spec.max_substep > 0 ? spec.max_substep : 1e-3);
  }
  if (spec.name == "navier_stokes") {
    SpectralGrid grid(spec.k_max, spec.period);
    Vector f = grid.forcing_from_velocity(spec.forcing_modes);
    return std::make_shared<SpectralNavierStokes>(std::move(grid), spec.viscosity, std::move(f),
                                                  spec.max_substep > 0 ? spec.max_substep : 5e-3);
  }
  throw ConfigError(fmt::format("config: unknown model '{}'", spec.name));
}

InitSampler default_init(const DissipativeModel& model) {
  if (const auto* ns = dynamic_cast<const SpectralNavierStokes*>(&model)) {
    const Vector sd =
        (ns->grid().h1_weights() * static_cast<double>(ns->dimension())).array().rsqrt().matrix();
    return [sd](Rng& rng) { return Vector(sd.cwiseProduct(standard_normal(sd.size(), rng))); };
  }
  return standard_gaussian_init(model.dimension());
}

Problem build_problem(const ExperimentConfig& config) {
  ModelPtr model = build_model(config.model);
  const ObservationSpec& o = config.observation;
  std::optional<ObservationOperator> p;
  if (o.kind == "coordinates") {
    p = coordinate_projection(model->dimension(), o.observed);
  } else if (o.kind == "every_third") {
    p = every_third_unobserved(model->dimension());
  } else if (o.kind == "fourier") {
    const auto* ns = dynamic_cast<const SpectralNavierStokes*>(model.get());
    require(ns != nullptr, "config: fourier observation needs the navier_stokes model");
    p = fourier_cutoff(*ns, o.lambda);
  } else {
    throw ConfigError(fmt::format("config: unknown observation kind '{}'", o.kind));
  }
  NoiseModel noise;
  if (o.noise == "normalized") {
    noise = normalized_noise(*p);
  } else if (o.noise == "unit") {
    noise = unit_noise(*p);
  } else if (o.noise == "spectral") {
    const auto* ns = dynamic_cast<const SpectralNavierStokes*>(model.get());
    require(ns != nullptr, "config: spectral noise needs the navier_stokes model");
    noise = spectral_noise(*ns, *p);
  } else {
    throw ConfigError(fmt::format("config: unknown noise law '{}'", o.noise));
  }
  InitSampler init = default_init(*model);
  return {std::move(model), std::move(*p), std::move(noise), std::move(init)};
}

namespace {

struct TrialOutcome {
  std::vector<double> errors;  // per filter; NaN when excluded
};

double trial_error(const FilterRun& run, MseMode mode) {
  const auto& e = run.squared_errors;
  if (mode == MseMode::FinalTime) return e.back();
  const std::size_t start = e.size() / 2;
  double sum = 0.0;
  for (std::size_t j = start; j < e.size(); ++j) sum += e[j];
  return sum / static_cast<double>(e.size() - start);
}

}  // namespace

FilterRun run_filter(const FilterSpec& spec, const Problem& problem, const ObservationSequence& obs,
                     double h, Rng& particle_rng) {
  const DissipativeModel& model = *problem.model;
  const ObservationOperator& p = problem.observation;
  const Vector zero = Vector::Zero(model.dimension());
  if (spec.kind == "observer") {
    return run_observer(model, p, identity_gain(p), zero, obs, h);
  }
  if (spec.kind == "3dvar") {
    const Matrix c = spec.sigma * spec.sigma * Matrix::Identity(model.dimension(), model.dimension());
    const GainOperator k = kalman_gain_3dvar(c, p, problem.noise.observed_covariance(p), obs.epsilon);
    FilterRun run = run_observer(model, p, k, zero, obs, h);
    run.estimator = "3dvar";
    return run;
  }
  if (spec.kind == "truncated") {
    const VNorm vnorm = dynamic_cast<const SpectralNavierStokes*>(&model)
                            ? VNorm::h1(static_cast<const SpectralNavierStokes&>(model))
                            : VNorm::euclidean_plus_observed(p);
    const double radius = spec.radius > 0.0 ? spec.radius : default_ball_radius(model);
    return run_truncated_observer(model, p, identity_gain(p), vnorm, radius, zero, obs, h);
  }
  return particle_filter(model, p, problem.noise, problem.init, obs, h, spec.particle, particle_rng);
}

MseReport run_mse_experiment(const ExperimentConfig& config) {
  config.validate();
  const Problem problem = build_problem(config);
  const int steps = config.steps();
  const int trials = config.n_inits * config.n_noise;
  const std::size_t n_filters = config.filters.size();

  MseReport report;
  report.config = config;
  for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
    const double eps = config.epsilons[e];
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
    std::atomic<int> next{0};
    const auto worker = [&] {
      for (int t = next++; t < trials; t = next++) {
        const int init_id = t / config.n_noise;
        const int noise_id = t % config.n_noise;
        TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];
        out.errors.assign(n_filters, std::numeric_limits<double>::quiet_NaN());
        Rng signal_rng = make_rng(config.seed, "signal", static_cast<std::uint64_t>(init_id));
        Rng noise_rng = make_rng(config.seed, "noise", static_cast<std::uint64_t>(init_id),
                                 static_cast<std::uint64_t>(noise_id));
        TruthAndObservations data;
        try {
          data = generate_truth_and_observations(*problem.model, problem.observation, problem.noise,
                                                 problem.init, eps, steps, config.step, signal_rng,
                                                 noise_rng);
        } catch (const NumericalError&) {
          continue;
        }
        for (std::size_t f = 0; f < n_filters; ++f) {
          Rng particle_rng = make_rng(config.seed, "particle", static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(e * n_filters + f));
          try {
            FilterRun run = run_filter(config.filters[f], problem, data.observations, config.step,
                                       particle_rng);
            attach_truth(run, data.truth);
            const double err = trial_error(run, config.mode);
            if (std::isfinite(err)) out.errors[f] = err;
          } catch (const NumericalError&) {
          }
        }
      }
    };
    const int n_threads = std::min(config.threads, trials);
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    for (std::size_t f = 0; f < n_filters; ++f) {
      MseEntry entry;
      entry.filter = config.filters[f].kind;
      entry.epsilon = eps;
      double sum = 0.0;
      for (const auto& o : outcomes) {
        if (std::isnan(o.errors[f])) {
          ++entry.excluded;
        } else {
          sum += o.errors[f];
          ++entry.n_trials;
        }
      }
      if (entry.n_trials > 0) {
        entry.mse = sum / entry.n_trials;
        double ss = 0.0;
        for (const auto& o : outcomes) {
          if (!std::isnan(o.errors[f])) ss += (o.errors[f] - entry.mse) * (o.errors[f] - entry.mse);
        }
        entry.stderr_ = entry.n_trials > 1
                            ? std::sqrt(ss / (entry.n_trials - 1) / entry.n_trials)
                            : 0.0;
      } else {
        entry.mse = std::numeric_limits<double>::quiet_NaN();
      }
      report.entries.push_back(entry);
    }
  }
  return report;
}

ScalingFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, "fit_scaling_exponent: need at least 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [eps, mse] : points) {
    require(eps > 0.0 && mse > 0.0, "fit_scaling_exponent: epsilon and MSE must be positive");
    sx += std::log(eps);
    sy += std::log(mse);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [eps, mse] : points) {
    sxx += (std::log(eps) - mx) * (std::log(eps) - mx);
    sxy += (std::log(eps) - mx) * (std::log(mse) - my);
  }
  require(sxx > 0.0, "fit_scaling_exponent: epsilons must be distinct");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [eps, mse] : points) {
    const double r = std::log(mse) - intercept - fit.slope * std::log(eps);
    rss += r * r;
  }
  fit.standard_error = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

ScalingFit fit_scaling_exponent(const MseReport& report, const std::string& filter) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : report.entries) {
    if (e.filter == filter) pts.emplace_back(e.epsilon, e.mse);
  }
  return fit_scaling_exponent(pts);
}

Vector sample_ellipsoid(const Matrix& gram, double radius, Rng& rng) {
  const Index d = gram.rows();
  Vector y = standard_normal(d, rng);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  y *= std::pow(uniform(rng), 1.0 / static_cast<double>(d)) / y.norm();
  // x^T G x = |y|^2 for x = L^{-T} y with G = L L^T.
  if (gram.isDiagonal()) return radius * y.cwiseQuotient(gram.diagonal().cwiseSqrt());
  Eigen::LLT<Matrix> llt(gram);
  require(llt.info() == Eigen::Success, "sample_ellipsoid: Gram matrix must be positive definite");
  return radius * llt.matrixU().solve(y);
}

SqueezeResult empirical_squeezing(const Map& psi, const Matrix& gram,
                                  const ObservationOperator& p, const GainOperator& d,
                                  const VNorm& vnorm, double r_inner, double r_outer,
                                  int n_samples, Rng& rng, double bin_width) {
  require(n_samples >= 1 && bin_width > 0.0, "empirical_squeezing: bad sample count or bin width");
  SqueezeResult result;
  result.bin_width = bin_width;
  result.ratios.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    const Vector v = sample_ellipsoid(gram, r_inner, rng);
    const Vector u = sample_ellipsoid(vnorm.form(), r_outer, rng);
    const double denom = vnorm(v - u);
    if (denom == 0.0) continue;
    try {
      const Vector diff = innovation_complement(d, p, Vector(psi(v) - psi(u)));
      const double ratio = vnorm(diff) / denom;
      if (!std::isfinite(ratio)) throw NumericalError("ratio");
      result.ratios.push_back(ratio);
    } catch (const NumericalError&) {
      ++result.failed;
    }
  }
  for (double r : result.ratios) {
    result.alpha_hat = std::max(result.alpha_hat, r);
    const auto bin = static_cast<std::size_t>(r / bin_width);
    if (bin >= result.histogram.size()) result.histogram.resize(bin + 1, 0);
    ++result.histogram[bin];
  }
  if (result.failed > 0) result.alpha_hat = std::numeric_limits<double>::infinity();
  return result;
}

SqueezeResult empirical_squeezing(const DissipativeModel& model, const ObservationOperator& p,
                                  const GainOperator& d, const VNorm& vnorm, double h,
                                  int n_samples, Rng& rng, double bin_width) {
  require(h > 0.0, "empirical_squeezing: h must be positive");
  const Map psi = [&model, h](const Vector& x) { return model.step(x, h); };
  return empirical_squeezing(psi, model.gram(), p, d, vnorm, model.absorbing_radius(),
                             default_ball_radius(model), n_samples, rng, bin_width);
}

}  // namespace filtering
