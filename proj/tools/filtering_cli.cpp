// Command-line front end: simulate, filter, mse-table, detect, squeeze-probe,
// ns-demo. Exit codes: 0 success, 1 usage or configuration error, 2 numerical
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "filtering/config.hpp"
#include "filtering/linear_theory.hpp"

namespace fs = std::filesystem;
using namespace filtering;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::string format = "csv";
  std::string observations;  // filter
  std::string truth;         // filter
  std::string histogram;     // squeeze-probe
};

std::string resolve_config(const std::string& name) {
  std::vector<fs::path> candidates = {name, name + ".ini", fs::path("configs") / name,
                                      fs::path("configs") / (name + ".ini")};
#ifdef FILTERING_CONFIG_DIR
  candidates.push_back(fs::path(FILTERING_CONFIG_DIR) / name);
  candidates.push_back(fs::path(FILTERING_CONFIG_DIR) / (name + ".ini"));
#endif
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) return c.string();
  }
  throw ConfigError(fmt::format("config: cannot find '{}'", name));
}

ConfigDocument load_document(const Options& opt) {
  ConfigDocument doc =
      opt.config.empty() ? ConfigDocument::from_text("") : ConfigDocument::from_file(resolve_config(opt.config));
  if (opt.seed) doc.set("experiment.seed", std::to_string(*opt.seed));
  if (opt.threads) {
    doc.set("experiment.threads", std::to_string(*opt.threads));
  } else if (const char* env = std::getenv("FILTERING_THREADS"); env != nullptr && *env != '\0') {
    doc.set("experiment.threads", env);
  }
  return doc;
}

/// Writes to `path`, or to stdout when it is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << text;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  return in;
}

double simulate_epsilon(const ConfigDocument& doc, const ExperimentConfig& c) {
  return doc.get_double("simulate.epsilon", c.epsilons.front());
}

int simulate_steps(const ConfigDocument& doc, const ExperimentConfig& c) {
  const long long steps = doc.get_int("simulate.steps", c.steps());
  require(steps >= 1, "config: simulate.steps must be >= 1");
  return static_cast<int>(steps);
}

TruthAndObservations simulate_data(const ConfigDocument& doc, const ExperimentConfig& c,
                                   const Problem& problem) {
  Rng signal_rng = make_rng(c.seed, "signal", 0);
  Rng noise_rng = make_rng(c.seed, "noise", 0, 0);
  TruthAndObservations data = generate_truth_and_observations(
      *problem.model, problem.observation, problem.noise, problem.init, simulate_epsilon(doc, c),
      simulate_steps(doc, c), c.step, signal_rng, noise_rng);
  data.observations.seed = c.seed;
  return data;
}

int cmd_simulate(const Options& opt) {
  const ConfigDocument doc = load_document(opt);
  const ExperimentConfig c = experiment_from(doc);
  const Problem problem = build_problem(c);
  const TruthAndObservations data = simulate_data(doc, c, problem);
  std::ostringstream truth, obs;
  write_trajectory_csv(truth, data.truth);
  write_observations_csv(obs, data.observations, problem.observation);
  if (opt.out.empty()) {
    std::cout << "# truth\n" << truth.str() << "# observations\n" << obs.str();
  } else {
    emit(opt.out + "_truth.csv", truth.str());
    emit(opt.out + "_obs.csv", obs.str());
  }
  return 0;
}

int cmd_filter(const Options& opt) {
  require(!opt.observations.empty(), "filter: --observations is required");
  const ConfigDocument doc = load_document(opt);
  const ExperimentConfig c = experiment_from(doc);
  const Problem problem = build_problem(c);
  std::ifstream obs_in = open_input(opt.observations);
  const ObservationSequence obs = read_observations_csv(obs_in, problem.model->dimension());
  Rng particle_rng = make_rng(c.seed, "particle", 0, 0);
  FilterRun run = run_filter(c.filters.front(), problem, obs, c.step, particle_rng);
  if (!opt.truth.empty()) {
    std::ifstream truth_in = open_input(opt.truth);
    const std::vector<Vector> truth = read_trajectory_csv(truth_in);
    require(truth.size() == run.estimates.size(),
            fmt::format("filter: truth has {} states, run has {}", truth.size(), run.estimates.size()));
    attach_truth(run, truth);
  }
  std::ostringstream out;
  write_filter_run_csv(out, run);
  emit(opt.out, out.str());
  return 0;
}

int cmd_mse_table(const Options& opt) {
  const ExperimentConfig c = experiment_from(load_document(opt));
  const MseReport report = run_mse_experiment(c);
  if (opt.out.empty()) {
    std::cout << format_report_csv(report);
  } else {
    write_report(report, opt.out);
  }
  if (c.epsilons.size() >= 3) {
    for (const auto& f : c.filters) {
      const ScalingFit fit = fit_scaling_exponent(report, f.kind);
      std::cerr << fmt::format("{}: slope {:.4f} +- {:.4f}\n", f.kind, fit.slope, fit.standard_error);
    }
  }
  return 0;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    out += i ? "; " : "";
    for (Index j = 0; j < m.cols(); ++j) out += fmt::format("{}{:.6g}", j ? " " : "", m(i, j));
  }
  return out;
}

int cmd_detect(const Options& opt) {
  const ConfigDocument doc = load_document(opt);
  const Matrix l = doc.get_matrix("linear.matrix");
  require(l.rows() == l.cols(), "config: linear.matrix must be square");
  std::vector<Index> observed;
  for (double v : doc.get_doubles("linear.observed", {0.0})) observed.push_back(static_cast<Index>(v));
  const ObservationOperator p = coordinate_projection(l.rows(), observed);
  const double tol = doc.get_double("linear.tolerance", 1e-9);
  const int budget = static_cast<int>(doc.get_int("linear.budget", 20000));
  const auto seed = static_cast<std::uint64_t>(doc.get_int("experiment.seed", 42));

  const DetectabilityVerdict verdict = hautus_detectable(l, p.matrix(), tol);
  std::string out = fmt::format("detectable: {}\n", verdict.detectable ? "yes" : "no");
  if (verdict.witness) {
    out += fmt::format("witness: {:.6g}{:+.6g}i\n", verdict.witness->real(), verdict.witness->imag());
  } else {
    out += "witness: none\n";
  }
  out += fmt::format("rho(L): {:.6g}\n", spectral_radius(l));
  const GainSearchResult gain = find_gain(l, p, budget, seed);
  out += fmt::format("gain_found: {}\n", gain.success ? "yes" : "no");
  out += fmt::format("gain: {}\n", format_matrix(gain.gain));
  out += fmt::format("rho(L-DP): {:.6g}\n", gain.spectral_radius);
  if (gain.success) {
    const auto norm = contractive_norm(l - gain.gain * p.matrix());
    if (norm) {
      out += fmt::format("alpha: {:.6g}\n", norm->alpha);
      out += fmt::format("V: {}\n", format_matrix(norm->form));
    } else {
      out += "alpha: none\n";
    }
  } else {
    out += "alpha: none\n";
  }
  emit(opt.out, out);
  return 0;
}

int cmd_squeeze(const Options& opt) {
  const ConfigDocument doc = load_document(opt);
  const ExperimentConfig c = experiment_from(doc);
  const ModelPtr model = build_model(c.model);
  const int samples = static_cast<int>(doc.get_int("squeeze.samples", 10000));
  const double h = doc.get_double("squeeze.step", c.step);
  const double bin = doc.get_double("squeeze.bin_width", 0.05);
  require(samples >= 1 && h > 0.0 && bin > 0.0, "config: squeeze samples, step and bin_width must be positive");

  const auto* ns = dynamic_cast<const SpectralNavierStokes*>(model.get());
  std::vector<double> lambdas = {c.observation.lambda};
  if (ns != nullptr) lambdas = doc.get_doubles("squeeze.lambdas", lambdas);

  std::string summary = "lambda,observed,alpha_hat,failed,samples\n";
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    ExperimentConfig ci = c;
    ci.observation.lambda = lambdas[i];
    Problem problem = build_problem(ci);
    const ObservationOperator& p = problem.observation;
    const VNorm vnorm = ns != nullptr ? VNorm::h1(*ns) : VNorm::euclidean_plus_observed(p);
    Rng rng = make_rng(c.seed, "squeeze", i);
    const SqueezeResult r =
        empirical_squeezing(*problem.model, p, identity_gain(p), vnorm, h, samples, rng, bin);
    summary += fmt::format("{},{},{},{},{}\n", ns ? fmt::format("{}", lambdas[i]) : std::string("-"),
                           p.mode_count(), r.alpha_hat, r.failed, samples);
    if (!opt.histogram.empty()) {
      std::string path = opt.histogram;
      if (lambdas.size() > 1) {
        const fs::path base(opt.histogram);
        path = (base.parent_path() /
                fmt::format("{}_lambda{}{}", base.stem().string(), lambdas[i], base.extension().string()))
                   .string();
      }
      emit(path, format_histogram_csv(r));
    }
  }
  emit(opt.out, summary);
  return 0;
}

int cmd_ns_demo(const Options& opt) {
  const ConfigDocument doc = load_document(opt);
  ExperimentConfig c = experiment_from(doc);
  require(c.model.name == "navier_stokes", "ns-demo: config must use model.name = navier_stokes");
  const Problem problem = build_problem(c);
  const auto& ns = static_cast<const SpectralNavierStokes&>(*problem.model);
  const TruthAndObservations data = simulate_data(doc, c, problem);
  FilterSpec spec = c.filters.front();
  spec.kind = "truncated";
  Rng unused = make_rng(c.seed, "particle", 0, 0);
  FilterRun run = run_filter(spec, problem, data.observations, c.step, unused);
  attach_truth(run, data.truth);

  const ObservationOperator& p = problem.observation;
  std::string out = fmt::format("# observed modes {} of {}, epsilon {}, absorbing radius {}\n",
                                p.mode_count(), ns.grid().modes().size() * 2,
                                data.observations.epsilon, ns.absorbing_radius());
  out += "j,time,error,observed_error,unobserved_error,signal_norm\n";
  for (std::size_t j = 0; j < run.estimates.size(); ++j) {
    const Vector e = data.truth[j] - run.estimates[j];
    out += fmt::format("{},{},{},{},{},{}\n", j, static_cast<double>(j) * c.step, ns.norm(e),
                       ns.norm(p.apply(e)), ns.norm(p.complement(e)), ns.norm(data.truth[j]));
  }
  emit(opt.out, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear observers and 3DVAR filtering for dissipative systems", "filtering"};
  app.require_subcommand(1, 1);
  Options opt;

  const auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "INI file, or a name under configs/");
    sub->add_option("-s,--seed", opt.seed, "master seed override");
    sub->add_option("-o,--out", opt.out, "output path (default stdout)");
    sub->add_option("-j,--threads", opt.threads, "worker threads (default $FILTERING_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", opt.format, "output format")->check(CLI::IsMember({"csv"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "truth and observation CSV");
  CLI::App* filter = app.add_subcommand("filter", "run one filter on stored observations");
  CLI::App* mse = app.add_subcommand("mse-table", "Monte Carlo MSE table");
  CLI::App* detect = app.add_subcommand("detect", "linear detectability verdict");
  CLI::App* squeeze = app.add_subcommand("squeeze-probe", "empirical squeezing constant");
  CLI::App* ns_demo = app.add_subcommand("ns-demo", "truncated observer on spectral Navier-Stokes");
  for (CLI::App* sub : {simulate, filter, mse, detect, squeeze, ns_demo}) add_common(sub);
  filter->add_option("--observations", opt.observations, "observation CSV")->required();
  filter->add_option("--truth", opt.truth, "trajectory CSV for error columns");
  squeeze->add_option("--histogram", opt.histogram, "histogram CSV path");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*filter) return cmd_filter(opt);
    if (*mse) return cmd_mse_table(opt);
    if (*detect) return cmd_detect(opt);
    if (*squeeze) return cmd_squeeze(opt);
    if (*ns_demo) return cmd_ns_demo(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
