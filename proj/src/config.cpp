#include "filtering/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace filtering {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.name", "model.dimension", "model.forcing", "model.viscosity", "model.period",
      "model.k_max", "model.forcing_modes", "model.max_substep",
      "observation.kind", "observation.observed", "observation.lambda", "observation.noise",
      "filter.kinds", "filter.radius", "filter.sigma", "filter.particles", "filter.jitter",
      "filter.resample_fraction",
      "experiment.epsilons", "experiment.step", "experiment.final_time", "experiment.inits",
      "experiment.noise_sequences", "experiment.seed", "experiment.threads", "experiment.mode",
      "linear.matrix", "linear.observed", "linear.budget", "linear.tolerance",
      "squeeze.samples", "squeeze.step", "squeeze.bin_width", "squeeze.lambdas",
      "simulate.epsilon", "simulate.steps"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("config: {} = '{}' is not a number", key, s));
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += fmt::format("{}{}", i ? "," : "", xs[i]);
  return out;
}

}  // namespace

ConfigDocument ConfigDocument::from_text(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {} (line {})", e.message(), e.line()));
  }
  ConfigDocument doc;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(fmt::format("config: key '{}' outside any section", section));
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (known_keys().count(full) == 0) {
        throw ConfigError(fmt::format("config: unknown key '{}'", full));
      }
      doc.values_[full] = trim(value.get_value<std::string>());
    }
  }
  return doc;
}

ConfigDocument ConfigDocument::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot open '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::string ConfigDocument::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigDocument::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(it->second, key);
}

long long ConfigDocument::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("config: {} = '{}' is not an integer", key, it->second));
}

std::vector<double> ConfigDocument::get_doubles(const std::string& key,
                                                std::vector<double> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& t : tokens(it->second, " ,\t")) out.push_back(to_double(t, key));
  return out;
}

Matrix ConfigDocument::get_matrix(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), fmt::format("config: missing {}", key));
  std::vector<std::vector<double>> rows;
  for (const auto& row : tokens(it->second, ";")) {
    std::vector<double> r;
    for (const auto& t : tokens(row, " ,\t")) r.push_back(to_double(t, key));
    if (!r.empty()) rows.push_back(std::move(r));
  }
  require(!rows.empty(), fmt::format("config: {} is empty", key));
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), fmt::format("config: {} rows differ in length", key));
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

ExperimentConfig experiment_from(const ConfigDocument& doc) {
  ExperimentConfig c;
  ModelSpec& m = c.model;
  m.name = doc.get_string("model.name", m.name);
  m.dimension = doc.get_int("model.dimension", m.dimension);
  m.l96_forcing = doc.get_double("model.forcing", m.l96_forcing);
  m.viscosity = doc.get_double("model.viscosity", m.viscosity);
  m.period = doc.get_double("model.period", m.period);
  m.k_max = static_cast<int>(doc.get_int("model.k_max", m.k_max));
  m.max_substep = doc.get_double("model.max_substep", m.max_substep);
  if (doc.has("model.forcing_modes")) {
    m.forcing_modes.clear();
    // n1 n2 Re(fx) Im(fx) Re(fy) Im(fy); ...
    for (const auto& entry : tokens(doc.get_string("model.forcing_modes", ""), ";")) {
      const auto t = tokens(entry, " ,\t");
      if (t.empty()) continue;
      require(t.size() == 6, "config: model.forcing_modes entries need 6 numbers");
      std::vector<double> x;
      for (const auto& s : t) x.push_back(to_double(s, "model.forcing_modes"));
      m.forcing_modes.push_back({static_cast<int>(x[0]), static_cast<int>(x[1]),
                                 Complex(x[2], x[3]), Complex(x[4], x[5])});
    }
  }

  ObservationSpec& o = c.observation;
  o.kind = doc.get_string("observation.kind", o.kind);
  if (doc.has("observation.observed")) {
    o.observed.clear();
    for (double v : doc.get_doubles("observation.observed", {})) {
      require(v == std::floor(v), "config: observation.observed must list integers");
      o.observed.push_back(static_cast<Index>(v));
    }
  }
  o.lambda = doc.get_double("observation.lambda", o.lambda);
  o.noise = doc.get_string("observation.noise", o.kind == "fourier" ? "spectral" : o.noise);

  FilterSpec base;
  base.radius = doc.get_double("filter.radius", base.radius);
  base.sigma = doc.get_double("filter.sigma", base.sigma);
  base.particle.particles = static_cast<int>(doc.get_int("filter.particles", base.particle.particles));
  base.particle.jitter = doc.get_double("filter.jitter", base.particle.jitter);
  base.particle.resample_fraction =
      doc.get_double("filter.resample_fraction", base.particle.resample_fraction);
  c.filters.clear();
  for (const auto& kind : tokens(doc.get_string("filter.kinds", "truncated"), " ,\t")) {
    FilterSpec f = base;
    f.kind = kind;
    c.filters.push_back(f);
  }

  c.epsilons = doc.get_doubles("experiment.epsilons", c.epsilons);
  c.step = doc.get_double("experiment.step", c.step);
  c.final_time = doc.get_double("experiment.final_time", c.final_time);
  c.n_inits = static_cast<int>(doc.get_int("experiment.inits", c.n_inits));
  c.n_noise = static_cast<int>(doc.get_int("experiment.noise_sequences", c.n_noise));
  c.seed = static_cast<std::uint64_t>(doc.get_int("experiment.seed", static_cast<long long>(c.seed)));
  c.threads = static_cast<int>(doc.get_int("experiment.threads", c.threads));
  const std::string mode = doc.get_string("experiment.mode", "final");
  require(mode == "final" || mode == "time_average",
          fmt::format("config: experiment.mode '{}' must be final or time_average", mode));
  c.mode = mode == "final" ? MseMode::FinalTime : MseMode::TimeAverage;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return experiment_from(ConfigDocument::from_file(path));
}

ExperimentConfig parse_config(const std::string& text) {
  return experiment_from(ConfigDocument::from_text(text));
}

std::string format_config(const ExperimentConfig& c) {
  std::string out = "[model]\n";
  out += fmt::format("name = {}\n", c.model.name);
  if (c.model.name == "lorenz96") {
    out += fmt::format("dimension = {}\nforcing = {}\n", c.model.dimension, c.model.l96_forcing);
  }
  if (c.model.name == "navier_stokes") {
    out += fmt::format("viscosity = {}\nperiod = {}\nk_max = {}\n", c.model.viscosity,
                       c.model.period, c.model.k_max);
    std::string modes;
    for (const auto& f : c.model.forcing_modes) {
      modes += fmt::format("{}{} {} {} {} {} {}", modes.empty() ? "" : "; ",
                           f.n1, f.n2, f.fx.real(), f.fx.imag(), f.fy.real(), f.fy.imag());
    }
    out += fmt::format("forcing_modes = {}\n", modes);
  }
  if (c.model.max_substep > 0.0) out += fmt::format("max_substep = {}\n", c.model.max_substep);

  out += "\n[observation]\n";
  out += fmt::format("kind = {}\n", c.observation.kind);
  if (c.observation.kind == "coordinates") {
    std::string idx;
    for (Index i : c.observation.observed) idx += fmt::format("{}{}", idx.empty() ? "" : ",", i);
    out += fmt::format("observed = {}\n", idx);
  }
  if (c.observation.kind == "fourier") out += fmt::format("lambda = {}\n", c.observation.lambda);
  out += fmt::format("noise = {}\n", c.observation.noise);

  out += "\n[filter]\n";
  std::string kinds;
  for (const auto& f : c.filters) kinds += fmt::format("{}{}", kinds.empty() ? "" : ",", f.kind);
  out += fmt::format("kinds = {}\n", kinds);
  if (!c.filters.empty()) {
    const FilterSpec& f = c.filters.front();
    out += fmt::format("radius = {}\nsigma = {}\nparticles = {}\njitter = {}\n"
                       "resample_fraction = {}\n",
                       f.radius, f.sigma, f.particle.particles, f.particle.jitter,
                       f.particle.resample_fraction);
  }

  out += "\n[experiment]\n";
  out += fmt::format("epsilons = {}\nstep = {}\nfinal_time = {}\ninits = {}\n"
                     "noise_sequences = {}\nseed = {}\nmode = {}\n",
                     join(c.epsilons), c.step, c.final_time, c.n_inits, c.n_noise, c.seed,
                     c.mode == MseMode::FinalTime ? "final" : "time_average");
  return out;
}

}  // namespace filtering
