#pragma once

#include <map>
#include <string>
#include <vector>

#include "filtering/harness.hpp"

namespace filtering {

/// Flat key-value configuration with one INI section per module.
///
/// Recognised sections and keys (anything else is rejected):
///   [model]       name, dimension, forcing, viscosity, period, k_max,
///                 forcing_modes, max_substep
///   [observation] kind, observed, lambda, noise
///   [filter]      kinds, radius, sigma, particles, jitter, resample_fraction
///   [experiment]  epsilons, step, final_time, inits, noise_sequences, seed,
///                 threads, mode
///   [linear]      matrix, observed, budget, tolerance
///   [squeeze]     samples, step, bin_width, lambdas
///   [simulate]    epsilon, steps
class ConfigDocument {
 public:
  static ConfigDocument from_text(const std::string& text);
  static ConfigDocument from_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  /// Rows separated by ';', entries by whitespace or ','.
  Matrix get_matrix(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

ExperimentConfig experiment_from(const ConfigDocument& doc);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);
/// INI text that parses back to the same configuration.
std::string format_config(const ExperimentConfig& config);

}  // namespace filtering
