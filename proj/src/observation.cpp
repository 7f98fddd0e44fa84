#include "filtering/observation.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "filtering/navier_stokes.hpp"

namespace filtering {

ObservationOperator::ObservationOperator(Kind kind, Index dimension, std::vector<Index> observed)
    : kind_(kind), mask_(Vector::Zero(dimension)), observed_(std::move(observed)) {
  require(dimension > 0, "observation: dimension must be positive");
  require(!observed_.empty(), "observation: at least one coordinate must be observed");
  std::sort(observed_.begin(), observed_.end());
  for (std::size_t i = 0; i < observed_.size(); ++i) {
    const Index idx = observed_[i];
    require(idx >= 0 && idx < dimension,
            fmt::format("observation: index {} out of range [0, {})", idx, dimension));
    require(i == 0 || observed_[i - 1] != idx,
            fmt::format("observation: index {} listed twice", idx));
    mask_(idx) = 1.0;
  }
  mode_count_ = rank();
}

Matrix ObservationOperator::selection() const {
  Matrix h = Matrix::Zero(rank(), dimension());
  for (Index i = 0; i < rank(); ++i) h(i, observed_[static_cast<std::size_t>(i)]) = 1.0;
  return h;
}

Vector ObservationOperator::restrict_to_observed(const Vector& u) const {
  Vector out(rank());
  for (Index i = 0; i < rank(); ++i) out(i) = u(observed_[static_cast<std::size_t>(i)]);
  return out;
}

ObservationOperator coordinate_projection(Index dimension, std::vector<Index> observed) {
  return {ObservationOperator::Kind::CoordinateMask, dimension, std::move(observed)};
}

ObservationOperator every_third_unobserved(Index dimension) {
  require(dimension >= 3 && dimension % 3 == 0,
          fmt::format("every_third_unobserved: d={} is not a multiple of 3", dimension));
  std::vector<Index> observed;
  for (Index i = 0; i < dimension; ++i) {
    if (i % 3 != 2) observed.push_back(i);
  }
  return {ObservationOperator::Kind::EveryThirdUnobserved, dimension, std::move(observed)};
}

ObservationOperator fourier_cutoff(const SpectralNavierStokes& model, double lambda) {
  require(lambda > 0.0, "fourier_cutoff: lambda must be positive");
  const auto& modes = model.grid().modes();
  std::vector<Index> observed;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].k_squared <= lambda * (1.0 + 1e-12)) {
      observed.push_back(static_cast<Index>(2 * i));
      observed.push_back(static_cast<Index>(2 * i + 1));
    }
  }
  require(!observed.empty(), fmt::format("fourier_cutoff: lambda={} retains no modes", lambda));
  ObservationOperator p(ObservationOperator::Kind::FourierCutoff, model.dimension(),
                        std::move(observed));
  // each stored mode stands for the pair +-k
  p.set_mode_count(p.rank());
  return p;
}

Matrix NoiseModel::observed_covariance(const ObservationOperator& p) const {
  return p.restrict_to_observed(stddev).array().square().matrix().asDiagonal();
}

NoiseModel normalized_noise(const ObservationOperator& p) {
  return {p.mask() / std::sqrt(static_cast<double>(p.rank()))};
}

NoiseModel unit_noise(const ObservationOperator& p) { return {p.mask()}; }

NoiseModel spectral_noise(const SpectralNavierStokes& model, const ObservationOperator& p) {
  require(p.kind() == ObservationOperator::Kind::FourierCutoff,
          "spectral_noise: needs a Fourier cutoff observation operator");
  const auto& modes = model.grid().modes();
  const double n = static_cast<double>(p.mode_count());
  Vector sd = Vector::Zero(model.dimension());
  for (Index idx : p.observed()) {
    // E|xi_k|^2 = 1 / (|k|^2 n), split evenly between Re and Im.
    const double k2 = modes[static_cast<std::size_t>(idx / 2)].k_squared;
    sd(idx) = std::sqrt(1.0 / (2.0 * k2 * n));
  }
  return {sd};
}

std::vector<Vector> simulate_signal(const DissipativeModel& model, const Vector& v0, int steps,
                                    double h) {
  require(steps >= 1, "simulate_signal: need at least one step");
  std::vector<Vector> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(v0);
  for (int j = 0; j < steps; ++j) path.push_back(model.step(path.back(), h));
  return path;
}

ObservationSequence observe(const std::vector<Vector>& truth, const ObservationOperator& p,
                            const NoiseModel& noise, double epsilon, Rng& noise_rng,
                            std::vector<Vector>* noise_record) {
  require(epsilon >= 0.0, "observe: epsilon must be nonnegative");
  require(noise.stddev.size() == p.dimension(), "observe: noise/operator dimension mismatch");
  ObservationSequence obs;
  obs.epsilon = epsilon;
  obs.values.reserve(truth.size());
  if (noise_record) noise_record->clear();
  for (std::size_t j = 1; j < truth.size(); ++j) {
    const Vector w = noise.sample(noise_rng);
    obs.values.push_back(p.apply(truth[j]) + epsilon * w);
    if (noise_record) noise_record->push_back(w);
  }
  return obs;
}

InitSampler standard_gaussian_init(Index dimension) {
  return [dimension](Rng& rng) { return standard_normal(dimension, rng); };
}

TruthAndObservations generate_truth_and_observations(const DissipativeModel& model,
                                                     const ObservationOperator& p,
                                                     const NoiseModel& noise,
                                                     const InitSampler& init, double epsilon,
                                                     int steps, double h, Rng& signal_rng,
                                                     Rng& noise_rng) {
  TruthAndObservations out;
  out.truth = simulate_signal(model, init(signal_rng), steps, h);
  out.observations = observe(out.truth, p, noise, epsilon, noise_rng);
  return out;
}

void write_observations_csv(std::ostream& out, const ObservationSequence& obs,
                            const ObservationOperator& p) {
  fmt::print(out, "# epsilon={} seed={}\n", obs.epsilon, obs.seed);
  fmt::print(out, "j,index,value\n");
  for (std::size_t j = 0; j < obs.values.size(); ++j) {
    for (Index idx : p.observed()) {
      fmt::print(out, "{},{},{}\n", j + 1, idx, obs.values[j](idx));
    }
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: cannot parse number '{}'", context, s));
  }
}

}  // namespace

ObservationSequence read_observations_csv(std::istream& in, Index dimension) {
  ObservationSequence obs;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      for (const auto& tok : split(line.substr(1), ' ')) {
        if (tok.rfind("epsilon=", 0) == 0) obs.epsilon = parse_double(tok.substr(8), "observations");
        if (tok.rfind("seed=", 0) == 0) obs.seed = std::stoull(tok.substr(5));
      }
      continue;
    }
    if (!header) {
      require(line == "j,index,value", "observations: expected header 'j,index,value'");
      header = true;
      continue;
    }
    const auto cols = split(line, ',');
    require(cols.size() == 3, fmt::format("observations: malformed row '{}'", line));
    const auto j = static_cast<std::size_t>(parse_double(cols[0], "observations"));
    const auto idx = static_cast<Index>(parse_double(cols[1], "observations"));
    require(j >= 1 && idx >= 0 && idx < dimension,
            fmt::format("observations: row '{}' out of range", line));
    while (obs.values.size() < j) obs.values.push_back(Vector::Zero(dimension));
    obs.values[j - 1](idx) = parse_double(cols[2], "observations");
  }
  require(header, "observations: missing header");
  return obs;
}

void write_trajectory_csv(std::ostream& out, const std::vector<Vector>& trajectory) {
  require(!trajectory.empty(), "trajectory: empty");
  fmt::print(out, "j");
  for (Index i = 0; i < trajectory.front().size(); ++i) fmt::print(out, ",x{}", i);
  fmt::print(out, "\n");
  for (std::size_t j = 0; j < trajectory.size(); ++j) {
    fmt::print(out, "{}", j);
    for (Index i = 0; i < trajectory[j].size(); ++i) fmt::print(out, ",{}", trajectory[j](i));
    fmt::print(out, "\n");
  }
}

std::vector<Vector> read_trajectory_csv(std::istream& in) {
  std::vector<Vector> path;
  std::string line;
  bool header = false;
  Index d = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, ',');
    if (!header) {
      require(!cols.empty() && cols[0] == "j", "trajectory: expected header starting with 'j'");
      d = static_cast<Index>(cols.size()) - 1;
      header = true;
      continue;
    }
    require(static_cast<Index>(cols.size()) >= d + 1,
            fmt::format("trajectory: malformed row '{}'", line));
    Vector x(d);
    for (Index i = 0; i < d; ++i) x(i) = parse_double(cols[static_cast<std::size_t>(i + 1)], "trajectory");
    path.push_back(std::move(x));
  }
  require(header, "trajectory: missing header");
  return path;
}

}  // namespace filtering
