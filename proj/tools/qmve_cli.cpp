// Command-line front end: config ingestion, subcommand dispatch, CSV/JSON
// emission. Every experiment writes a manifest plus its table into
// <output-dir>/<subcommand>/; results are reproducible from (config, seed)
// regardless of the job count.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmve/adaptive.hpp"
#include "qmve/experiments.hpp"
#include "qmve/kernels.hpp"
#include "qmve/model.hpp"
#include "qmve/oracle.hpp"

namespace {

using qmve::AdaptiveConfig;
using qmve::AmplifiedLevel;
using qmve::ExperimentSpec;
using qmve::NoiseModel;

constexpr const char* kVersion = "qmve 1.0.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Mutable option set shared by all subcommands; an INI config file (parsed
// first) provides defaults, explicit flags override.
struct Options {
  double pq = 0.995;
  int qubits = 20;
  double pq_likelihood = -1.0;  // <0: same as pq
  long long shots = 500;
  int steps = 8;
  double delta = 0.95;
  int range_cap = 1 << 13;
  double target = 0.5;           // adaptive-run, fisher
  std::vector<double> targets{0.042, 0.5};
  int trials = 100;
  std::uint64_t seed = 42;
  std::uint64_t stream_id = 0;
  std::vector<int> m_list{3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<long long> shot_list{5, 50, 500};
  std::vector<double> offsets{0.001, -0.001, 0.005, -0.005};
  int grid_points = 1000;
  std::string method = "adaptive";
  int alpha = 1;
  double theta = 1.0;
  int alpha_cap = 0;  // 0: default cap
  int oracle_seeds = 20;
  std::vector<int> oracle_qubits{2, 3, 4};
  std::vector<int> oracle_alphas{1, 2, 3, 4, 5, 6};
  std::vector<double> oracle_pq{1.0, 0.9, 0.5};
  std::string output_dir;
  std::string kernel = "auto";
  int jobs = 0;
  bool verbose = false;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Minimal INI reader: [section] headers group keys; keys mirror the long
// option names. Unknown keys and malformed lines are reported with their
// line number.
std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path + ": cannot open config file");
  }
  std::vector<ConfigEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed;
    for (char c : line) {
      if (c == '#' || c == ';') {
        break;
      }
      trimmed.push_back(c);
    }
    const auto first = trimmed.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      continue;
    }
    const auto last = trimmed.find_last_not_of(" \t\r");
    trimmed = trimmed.substr(first, last - first + 1);
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']') {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": unterminated section header");
      }
      continue;  // sections are organizational only; keys are global
    }
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    ConfigEntry entry;
    entry.key = trimmed.substr(0, eq);
    entry.value = trimmed.substr(eq + 1);
    const auto kl = entry.key.find_last_not_of(" \t");
    entry.key = entry.key.substr(0, kl + 1);
    const auto vf = entry.value.find_first_not_of(" \t");
    entry.value = vf == std::string::npos ? "" : entry.value.substr(vf);
    entry.line = lineno;
    entries.push_back(std::move(entry));
  }
  return entries;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) {
      continue;
    }
    std::stringstream conv(item);
    T value;
    conv >> value;
    if (conv.fail()) {
      throw std::runtime_error("bad list element: " + item);
    }
    out.push_back(value);
  }
  return out;
}

void apply_config_entries(const std::string& path,
                          const std::vector<ConfigEntry>& entries,
                          Options& opt) {
  for (const ConfigEntry& e : entries) {
    const auto fail = [&](const std::string& why) {
      throw std::runtime_error(path + ":" + std::to_string(e.line) + ": " +
                               why);
    };
    try {
      if (e.key == "pq") opt.pq = std::stod(e.value);
      else if (e.key == "qubits") opt.qubits = std::stoi(e.value);
      else if (e.key == "pq-likelihood") opt.pq_likelihood = std::stod(e.value);
      else if (e.key == "shots") opt.shots = std::stoll(e.value);
      else if (e.key == "steps") opt.steps = std::stoi(e.value);
      else if (e.key == "delta") opt.delta = std::stod(e.value);
      else if (e.key == "range-cap") opt.range_cap = std::stoi(e.value);
      else if (e.key == "target") opt.target = std::stod(e.value);
      else if (e.key == "targets") opt.targets = parse_list<double>(e.value);
      else if (e.key == "trials") opt.trials = std::stoi(e.value);
      else if (e.key == "seed") opt.seed = std::stoull(e.value);
      else if (e.key == "stream-id") opt.stream_id = std::stoull(e.value);
      else if (e.key == "m-list") opt.m_list = parse_list<int>(e.value);
      else if (e.key == "shot-list")
        opt.shot_list = parse_list<long long>(e.value);
      else if (e.key == "offsets") opt.offsets = parse_list<double>(e.value);
      else if (e.key == "grid-points") opt.grid_points = std::stoi(e.value);
      else if (e.key == "method") opt.method = e.value;
      else if (e.key == "alpha") opt.alpha = std::stoi(e.value);
      else if (e.key == "theta") opt.theta = std::stod(e.value);
      else if (e.key == "alpha-cap") opt.alpha_cap = std::stoi(e.value);
      else if (e.key == "oracle-seeds") opt.oracle_seeds = std::stoi(e.value);
      else if (e.key == "oracle-qubits")
        opt.oracle_qubits = parse_list<int>(e.value);
      else if (e.key == "oracle-alphas")
        opt.oracle_alphas = parse_list<int>(e.value);
      else if (e.key == "oracle-pq")
        opt.oracle_pq = parse_list<double>(e.value);
      else if (e.key == "output-dir") opt.output_dir = e.value;
      else if (e.key == "kernel") opt.kernel = e.value;
      else if (e.key == "jobs") opt.jobs = std::stoi(e.value);
      else if (e.key == "verbose") opt.verbose = (e.value != "0");
      else fail("unknown key '" + e.key + "'");
    } catch (const std::invalid_argument&) {
      fail("cannot parse value '" + e.value + "' for key '" + e.key + "'");
    } catch (const std::out_of_range&) {
      fail("value out of range for key '" + e.key + "'");
    }
  }
}

NoiseModel noise_from(const Options& opt) {
  return NoiseModel(opt.pq, opt.qubits);
}

AdaptiveConfig adaptive_config_from(const Options& opt) {
  AdaptiveConfig config;
  config.shots_per_step = opt.shots;
  config.steps = opt.steps;
  config.delta = opt.delta;
  config.schedule.cap = opt.range_cap;
  const double pq_lik = opt.pq_likelihood < 0.0 ? opt.pq : opt.pq_likelihood;
  config.likelihood_noise = NoiseModel(pq_lik, opt.qubits);
  return config;
}

ExperimentSpec spec_from(const Options& opt) {
  ExperimentSpec spec;
  spec.targets = opt.targets;
  spec.trials = opt.trials;
  spec.config = adaptive_config_from(opt);
  spec.true_noise = noise_from(opt);
  spec.method = qmve::method_from_name(opt.method);
  spec.calibration_offsets = opt.offsets;
  spec.base_seed = opt.seed;
  spec.m_list = opt.m_list;
  spec.shot_list = opt.shot_list;
  spec.grid_points = opt.grid_points;
  spec.jobs = opt.jobs;
  return spec;
}

nlohmann::ordered_json options_json(const Options& opt) {
  nlohmann::ordered_json j;
  j["pq"] = opt.pq;
  j["qubits"] = opt.qubits;
  j["pq_likelihood"] = opt.pq_likelihood < 0.0 ? opt.pq : opt.pq_likelihood;
  j["shots"] = opt.shots;
  j["steps"] = opt.steps;
  j["delta"] = opt.delta;
  j["range_cap"] = opt.range_cap;
  j["target"] = opt.target;
  j["targets"] = opt.targets;
  j["trials"] = opt.trials;
  j["seed"] = opt.seed;
  j["stream_id"] = opt.stream_id;
  j["m_list"] = opt.m_list;
  j["shot_list"] = opt.shot_list;
  j["offsets"] = opt.offsets;
  j["grid_points"] = opt.grid_points;
  j["method"] = opt.method;
  j["jobs"] = opt.jobs;
  return j;
}

// Writes manifest + table into <output-dir>/<name>/ when an output
// directory was requested.
class RunEmitter {
 public:
  RunEmitter(const Options& opt, const std::string& name)
      : opt_(opt), name_(name), start_(std::chrono::steady_clock::now()) {}

  void table(const std::string& filename, const std::string& csv) {
    tables_.emplace_back(filename, csv);
  }

  void finish() {
    if (opt_.output_dir.empty()) {
      for (const auto& [file, csv] : tables_) {
        std::cout << csv;
      }
      return;
    }
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(opt_.output_dir) / name_;
    fs::create_directories(dir);
    for (const auto& [file, csv] : tables_) {
      std::ofstream out(dir / file);
      out << csv;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    nlohmann::ordered_json manifest;
    manifest["command"] = name_;
    manifest["version"] = kVersion;
    manifest["kernel_backend"] =
        qmve::kernels::backend_name(qmve::kernels::active_backend());
    manifest["wall_ms"] = elapsed.count();
    manifest["effective_config"] = options_json(opt_);
    std::ofstream mout(dir / "manifest.json");
    mout << manifest.dump(2) << "\n";
    for (const auto& [file, csv] : tables_) {
      std::cerr << "wrote " << (dir / file).string() << "\n";
    }
  }

 private:
  const Options& opt_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, std::string>> tables_;
};

int run_alpha_b(const Options& opt) {
  const NoiseModel noise = noise_from(opt);
  const int cap = opt.alpha_cap > 0 ? opt.alpha_cap
                                    : qmve::default_alpha_b_cap(noise.p_q);
  std::cout << qmve::alpha_b(noise, cap) << "\n";
  return 0;
}

int run_fisher(const Options& opt) {
  const NoiseModel noise = noise_from(opt);
  const AmplifiedLevel level(opt.alpha);
  std::cout << "prob_one " << fmt17(qmve::prob_one(level, opt.theta, noise))
            << "\n";
  std::cout << "classical_fisher "
            << fmt17(qmve::classical_fisher(level, opt.theta, noise)) << "\n";
  std::cout << "quantum_fisher "
            << fmt17(qmve::quantum_fisher(level, noise)) << "\n";
  if (level.even()) {
    std::cout << "three_valued_fisher "
              << fmt17(qmve::three_valued_fisher(level, opt.theta, noise))
              << "\n";
    std::cout << "kappa_inf "
              << fmt17(qmve::kappa_inf(level, opt.theta, noise.p_q)) << "\n";
    try {
      std::cout << "kappa " << fmt17(qmve::kappa(level, opt.theta, noise))
                << "\n";
    } catch (const qmve::SingularPointError&) {
      std::cout << "kappa singular\n";
    }
  }
  return 0;
}

int run_adaptive_run(const Options& opt) {
  const AdaptiveConfig config = adaptive_config_from(opt);
  qmve::RandomStream stream(opt.seed, opt.stream_id);
  const qmve::TargetValue target = qmve::TargetValue::from_mean_value(opt.target);
  const qmve::Trajectory traj =
      qmve::run_adaptive(config, target.theta, noise_from(opt), stream);
  const std::string json = traj.to_json();
  std::cout << json << "\n";
  if (!opt.output_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(opt.output_dir) / "adaptive-run";
    fs::create_directories(dir);
    std::ofstream out(dir / "trajectory.json");
    out << json << "\n";
  }
  return 0;
}

int run_rmse_sweep(const Options& opt) {
  RunEmitter emitter(opt, "rmse-sweep");
  emitter.table("rmse.csv", qmve::to_csv(qmve::rmse_sweep(spec_from(opt))));
  emitter.finish();
  return 0;
}

int run_landscape(const Options& opt) {
  RunEmitter emitter(opt, "fisher-landscape");
  const ExperimentSpec spec = spec_from(opt);
  emitter.table("landscape.csv",
                qmve::to_csv(qmve::fisher_landscape(spec, spec.grid_points)));
  emitter.finish();
  return 0;
}

int run_alpha_convergence(const Options& opt) {
  RunEmitter emitter(opt, "alpha-convergence");
  const ExperimentSpec spec = spec_from(opt);
  emitter.table("alpha_convergence.csv",
                qmve::to_csv(qmve::alpha_convergence(spec, spec.shot_list)));
  emitter.finish();
  return 0;
}

int run_normality(const Options& opt) {
  RunEmitter emitter(opt, "normality");
  const auto summaries = qmve::normality_study(spec_from(opt));
  emitter.table("normality.csv", qmve::to_csv(summaries));
  if (!opt.output_dir.empty()) {
    // per-trial estimates go to the output directory only
    std::string estimates = "target,trial,mean_value_estimate\n";
    for (const auto& s : summaries) {
      for (std::size_t i = 0; i < s.estimates.size(); ++i) {
        estimates += fmt17(s.target) + "," + std::to_string(i) + "," +
                     fmt17(s.estimates[i]) + "\n";
      }
    }
    emitter.table("estimates.csv", estimates);
  }
  emitter.finish();
  return 0;
}

int run_calibration(const Options& opt) {
  RunEmitter emitter(opt, "calibration-sweep");
  emitter.table("calibration.csv",
                qmve::to_csv(qmve::calibration_sweep(spec_from(opt))));
  emitter.finish();
  return 0;
}

int run_oracle_verify(const Options& opt) {
  const auto report = qmve::oracle::verify_grid(
      opt.oracle_qubits, opt.oracle_seeds, opt.oracle_alphas, opt.oracle_pq,
      opt.seed);
  std::cout << "instances " << report.instances << "\n";
  std::cout << "checks " << report.checks << "\n";
  std::cout << "worst_prob_error " << fmt17(report.worst_prob_error) << "\n";
  std::cout << "worst_qfi_rel_error " << fmt17(report.worst_qfi_rel_error)
            << "\n";
  std::cout << "worst_three_valued_rel "
            << fmt17(report.worst_three_valued_rel) << "\n";
  for (const std::string& line : report.failure_lines) {
    std::cout << "FAIL " << line << "\n";
  }
  std::cout << (report.passed() ? "PASS" : "FAIL") << "\n";
  return report.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;

  // The config file seeds the defaults; explicit flags override below.
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_entries(argv[i + 1], read_config_file(argv[i + 1]), opt);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"Adaptive quantum-enhanced mean value estimation toolkit"};
  app.fallthrough();  // global flags may follow the subcommand name
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--output-dir", opt.output_dir,
                 "write tables + manifest under this directory");
  app.add_option("--jobs", opt.jobs, "worker threads (0 = all cores)")
      ->capture_default_str();
  app.add_option("--kernel", opt.kernel, "likelihood kernel: auto|scalar|avx2")
      ->capture_default_str();
  app.add_flag("--verbose", opt.verbose, "chatty progress on stderr");

  const auto add_noise = [&](CLI::App* cmd) {
    cmd->add_option("--pq", opt.pq, "survival probability per oracle call")
        ->capture_default_str();
    cmd->add_option("--qubits", opt.qubits, "qubit count n (d = 2^n)")
        ->capture_default_str();
  };
  const auto add_adaptive = [&](CLI::App* cmd) {
    add_noise(cmd);
    cmd->add_option("--shots", opt.shots, "shots per step N")
        ->capture_default_str();
    cmd->add_option("--steps", opt.steps, "number of steps M")
        ->capture_default_str();
    cmd->add_option("--delta", opt.delta, "regularization strength")
        ->capture_default_str();
    cmd->add_option("--range-cap", opt.range_cap,
                    "largest candidate amplified level")
        ->capture_default_str();
    cmd->add_option("--pq-likelihood", opt.pq_likelihood,
                    "p_q assumed by the estimator (default: --pq)");
  };
  const auto add_experiment = [&](CLI::App* cmd) {
    add_adaptive(cmd);
    cmd->add_option("--targets", opt.targets, "mean values to sweep")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--trials", opt.trials, "Monte Carlo trials per cell")
        ->capture_default_str();
    cmd->add_option("--seed", opt.seed, "base seed")->capture_default_str();
    cmd->add_option("--method", opt.method,
                    "adaptive|standard|non_adaptive")
        ->capture_default_str();
  };

  CLI::App* alpha_b_cmd =
      app.add_subcommand("alpha-b", "print the optimal coherent block level");
  add_noise(alpha_b_cmd);
  alpha_b_cmd->add_option("--cap", opt.alpha_cap, "search cap (0 = default)");

  CLI::App* fisher_cmd = app.add_subcommand(
      "fisher", "pointwise probabilities and Fisher information");
  add_noise(fisher_cmd);
  fisher_cmd->add_option("--alpha", opt.alpha, "amplified level")
      ->capture_default_str();
  fisher_cmd->add_option("--theta", opt.theta, "target angle in (0, pi)")
      ->capture_default_str();

  CLI::App* run_cmd =
      app.add_subcommand("adaptive-run", "single adaptive trajectory (JSON)");
  add_adaptive(run_cmd);
  run_cmd->add_option("--target", opt.target, "mean value cos(theta*)")
      ->capture_default_str();
  run_cmd->add_option("--seed", opt.seed, "stream seed")->capture_default_str();
  run_cmd->add_option("--stream-id", opt.stream_id, "stream id")
      ->capture_default_str();

  CLI::App* rmse_cmd =
      app.add_subcommand("rmse-sweep", "error vs queries against the bounds");
  add_experiment(rmse_cmd);
  rmse_cmd->add_option("--m-list", opt.m_list, "step counts to sweep")
      ->delimiter(',')
      ->capture_default_str();

  CLI::App* landscape_cmd = app.add_subcommand(
      "fisher-landscape", "asymptotic Fisher information over the target");
  add_experiment(landscape_cmd);
  landscape_cmd
      ->add_option("--grid-points", opt.grid_points, "targets on (0,1)")
      ->capture_default_str();

  CLI::App* conv_cmd = app.add_subcommand(
      "alpha-convergence", "level convergence vs shots per step");
  add_experiment(conv_cmd);
  conv_cmd->add_option("--shot-list", opt.shot_list, "shot counts")
      ->delimiter(',')
      ->capture_default_str();

  CLI::App* normality_cmd = app.add_subcommand(
      "normality", "distribution of the final estimate at fixed settings");
  add_experiment(normality_cmd);

  CLI::App* calibration_cmd = app.add_subcommand(
      "calibration-sweep", "sensitivity to a miscalibrated p_q");
  add_experiment(calibration_cmd);
  calibration_cmd->add_option("--offsets", opt.offsets,
                              "relative p_q errors")
      ->delimiter(',')
      ->capture_default_str();
  calibration_cmd->add_option("--m-list", opt.m_list, "step counts to sweep")
      ->delimiter(',')
      ->capture_default_str();

  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-verify", "density-matrix validation of the closed forms");
  oracle_cmd->add_option("--seeds", opt.oracle_seeds, "instances per count")
      ->capture_default_str();
  oracle_cmd->add_option("--qubits-list", opt.oracle_qubits, "qubit counts")
      ->delimiter(',')
      ->capture_default_str();
  oracle_cmd->add_option("--alphas", opt.oracle_alphas, "levels to check")
      ->delimiter(',')
      ->capture_default_str();
  oracle_cmd->add_option("--pq-list", opt.oracle_pq, "survival probabilities")
      ->delimiter(',')
      ->capture_default_str();
  oracle_cmd->add_option("--seed", opt.seed, "base seed")
      ->capture_default_str();

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (opt.kernel == "scalar") {
      qmve::kernels::set_backend(qmve::kernels::Backend::kScalar);
    } else if (opt.kernel == "avx2") {
      qmve::kernels::set_backend(qmve::kernels::Backend::kAvx2);
    } else if (opt.kernel != "auto") {
      throw std::invalid_argument("unknown kernel backend: " + opt.kernel);
    }

    if (alpha_b_cmd->parsed()) return run_alpha_b(opt);
    if (fisher_cmd->parsed()) return run_fisher(opt);
    if (run_cmd->parsed()) return run_adaptive_run(opt);
    if (rmse_cmd->parsed()) return run_rmse_sweep(opt);
    if (landscape_cmd->parsed()) return run_landscape(opt);
    if (conv_cmd->parsed()) return run_alpha_convergence(opt);
    if (normality_cmd->parsed()) return run_normality(opt);
    if (calibration_cmd->parsed()) return run_calibration(opt);
    if (oracle_cmd->parsed()) return run_oracle_verify(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
