#include "qmve/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

namespace qmve {

namespace {

constexpr double kKsCritical1e3 = 1.9494759;  // Kolmogorov K with alpha=1e-3

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int resolve_jobs(int jobs) {
  if (jobs > 0) {
    return jobs;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(trial) for trial = 0..trials-1 across a fixed-size thread pool.
// Each trial writes only to its own slot, so aggregation order is defined
// by trial index, not by scheduling.
void parallel_trials(int trials, int jobs,
                     const std::function<void(int)>& body) {
  jobs = std::min(resolve_jobs(jobs), trials);
  if (jobs <= 1) {
    for (int t = 0; t < trials; ++t) {
      body(t);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += jobs) {
        body(t);
      }
    });
  }
  for (std::thread& th : pool) {
    th.join();
  }
}

double compensated_mean_of_squares(const std::vector<double>& values) {
  // Kahan summation of squares, then divide.
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double term = v * v - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum / static_cast<double>(values.size());
}

struct CellStats {
  double rmse = 0.0;
  double rmse_filtered = 0.0;
  int outliers = 0;
  long long max_queries = 0;
};

CellStats summarize_errors(const std::vector<double>& errors,
                           const std::vector<long long>& queries,
                           double outlier_scale) {
  CellStats stats;
  stats.rmse = std::sqrt(compensated_mean_of_squares(errors));
  std::vector<double> kept;
  kept.reserve(errors.size());
  for (double e : errors) {
    if (std::abs(e) > 10.0 * outlier_scale) {
      ++stats.outliers;
    } else {
      kept.push_back(e);
    }
  }
  stats.rmse_filtered =
      kept.empty() ? 0.0 : std::sqrt(compensated_mean_of_squares(kept));
  stats.max_queries = *std::max_element(queries.begin(), queries.end());
  return stats;
}

AdaptiveConfig config_with_steps(const AdaptiveConfig& base, int steps) {
  AdaptiveConfig out = base;
  out.steps = steps;
  return out;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

char* append(char* dst, const char* end, double v) {
  dst += std::snprintf(dst, static_cast<std::size_t>(end - dst), "%.17g,", v);
  return dst;
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::kAdaptive:
      return "adaptive";
    case Method::kStandard:
      return "standard";
    case Method::kNonAdaptive:
      return "non_adaptive";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "adaptive") return Method::kAdaptive;
  if (name == "standard") return Method::kStandard;
  if (name == "non_adaptive") return Method::kNonAdaptive;
  throw std::invalid_argument("unknown method: " + name);
}

void ExperimentSpec::validate() const {
  if (targets.empty()) {
    throw std::invalid_argument("ExperimentSpec: no targets");
  }
  for (double t : targets) {
    if (!(t > -1.0) || !(t < 1.0)) {
      throw std::invalid_argument("ExperimentSpec: targets must be in (-1,1)");
    }
  }
  if (trials < 1) {
    throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  }
  config.validate();
  true_noise.validate();
  if (grid_points < 2) {
    throw std::invalid_argument("ExperimentSpec: grid_points must be >= 2");
  }
}

std::vector<int> method_levels(Method method, double theta_true,
                               const NoiseModel& noise,
                               const AdaptiveConfig& config) {
  std::vector<int> levels;
  switch (method) {
    case Method::kAdaptive:
      return asymptotic_alphas(theta_true, noise, config);
    case Method::kStandard:
      levels.assign(static_cast<std::size_t>(config.steps), 1);
      return levels;
    case Method::kNonAdaptive:
      levels.push_back(1);
      for (int k = 2; k <= config.steps; ++k) {
        levels.push_back(k >= 31 ? config.schedule.cap
                                 : std::min(config.schedule.cap, 1 << k));
      }
      return levels;
  }
  throw std::logic_error("method_levels: unreachable");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = mix(base ^ 0x517CC1B727220A95ULL);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

namespace {

// Shared trial loop for the sweep-style studies. Returns per-trial final
// errors and query counts for one (target, steps) cell.
struct CellRun {
  std::vector<double> errors;
  std::vector<long long> queries;
};

CellRun run_cell(const ExperimentSpec& spec, double target,
                 const AdaptiveConfig& config, std::uint64_t cell_seed) {
  const double theta = std::acos(target);
  CellRun run;
  run.errors.assign(static_cast<std::size_t>(spec.trials), 0.0);
  run.queries.assign(static_cast<std::size_t>(spec.trials), 0);
  std::vector<int> fixed;
  if (spec.method != Method::kAdaptive) {
    fixed = method_levels(spec.method, theta, config.likelihood_noise, config);
  }
  parallel_trials(spec.trials, spec.jobs, [&](int trial) {
    RandomStream stream(cell_seed, static_cast<std::uint64_t>(trial));
    const Trajectory traj =
        spec.method == Method::kAdaptive
            ? run_adaptive(config, theta, spec.true_noise, stream)
            : run_fixed_levels(config, fixed, theta, spec.true_noise, stream);
    run.errors[static_cast<std::size_t>(trial)] =
        traj.final_mean_value - target;
    run.queries[static_cast<std::size_t>(trial)] = traj.total_queries;
  });
  return run;
}

}  // namespace

std::vector<RmseRow> rmse_sweep(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RmseRow> rows;
  for (std::size_t ti = 0; ti < spec.targets.size(); ++ti) {
    const double target = spec.targets[ti];
    const double theta = std::acos(target);
    for (int steps : spec.m_list) {
      const AdaptiveConfig config = config_with_steps(spec.config, steps);
      const std::vector<int> levels =
          method_levels(spec.method, theta, config.likelihood_noise, config);
      const double ic = total_fisher_for_levels(
          levels, theta, spec.true_noise, config.shots_per_step,
          FisherKind::kClassical);
      const double iq = total_fisher_for_levels(
          levels, theta, spec.true_noise, config.shots_per_step,
          FisherKind::kQuantum);
      const double scale = 1.0 - target * target;
      RmseRow row;
      row.target = target;
      row.steps = steps;
      row.trials = spec.trials;
      row.ccr_bound = std::sqrt(scale / ic);
      row.qcr_bound = std::sqrt(scale / iq);

      const std::uint64_t cell_seed =
          derive_seed(spec.base_seed, ti, static_cast<std::uint64_t>(steps),
                      0x01);
      const CellRun run = run_cell(spec, target, config, cell_seed);
      const CellStats stats =
          summarize_errors(run.errors, run.queries, row.ccr_bound);
      row.rmse = stats.rmse;
      row.rmse_outlier_filtered = stats.rmse_filtered;
      row.outliers = stats.outliers;
      row.max_total_queries = stats.max_queries;
      row.precision_limit = std::sqrt(
          mse_lower_bound(stats.max_queries, spec.true_noise, target));
      row.heisenberg_reference =
          1.0 / static_cast<double>(stats.max_queries);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<LandscapeRow> fisher_landscape(const ExperimentSpec& spec,
                                           int grid_points) {
  spec.validate();
  if (grid_points < 2) {
    throw std::invalid_argument("fisher_landscape: grid_points must be >= 2");
  }
  const NoiseModel& noise = spec.true_noise;
  const int block = alpha_b(noise);
  const double iq_block_per_query =
      quantum_fisher(AmplifiedLevel(block), noise) / block;
  const long long shots = spec.config.shots_per_step;

  std::vector<LandscapeRow> rows(static_cast<std::size_t>(grid_points));
  parallel_trials(grid_points, spec.jobs, [&](int i) {
    const double target =
        static_cast<double>(i + 1) / static_cast<double>(grid_points + 1);
    const double theta = std::acos(target);
    LandscapeRow row;
    row.target = target;
    row.theta = theta;
    const std::vector<int> adaptive =
        method_levels(Method::kAdaptive, theta, noise, spec.config);
    const std::vector<int> standard =
        method_levels(Method::kStandard, theta, noise, spec.config);
    const std::vector<int> nonadaptive =
        method_levels(Method::kNonAdaptive, theta, noise, spec.config);
    row.ic_tot_adaptive = total_fisher_for_levels(adaptive, theta, noise,
                                                  shots, FisherKind::kClassical);
    row.iq_tot_adaptive = total_fisher_for_levels(adaptive, theta, noise,
                                                  shots, FisherKind::kQuantum);
    row.ic_tot_standard = total_fisher_for_levels(standard, theta, noise,
                                                  shots, FisherKind::kClassical);
    row.ic_tot_nonadaptive = total_fisher_for_levels(
        nonadaptive, theta, noise, shots, FisherKind::kClassical);
    const double scale = 1.0 - target * target;
    row.ccr_adaptive = std::sqrt(scale / row.ic_tot_adaptive);
    row.ccr_standard = std::sqrt(scale / row.ic_tot_standard);
    row.ccr_nonadaptive = std::sqrt(scale / row.ic_tot_nonadaptive);
    row.ratio_q_over_c = row.iq_tot_adaptive / row.ic_tot_adaptive;
    long long nq = 0;
    for (int a : adaptive) {
      nq += a;
    }
    row.n_q_star = shots * nq;
    row.ratio_limit_over_q =
        static_cast<double>(row.n_q_star) * iq_block_per_query /
        row.iq_tot_adaptive;
    rows[static_cast<std::size_t>(i)] = row;
  });
  return rows;
}

std::vector<AlphaConvergenceRow> alpha_convergence(
    const ExperimentSpec& spec, const std::vector<long long>& shot_list) {
  spec.validate();
  if (shot_list.empty()) {
    throw std::invalid_argument("alpha_convergence: empty shot list");
  }
  std::vector<AlphaConvergenceRow> rows;
  for (std::size_t ti = 0; ti < spec.targets.size(); ++ti) {
    const double target = spec.targets[ti];
    const double theta = std::acos(target);
    for (long long shots : shot_list) {
      AdaptiveConfig config = spec.config;
      config.shots_per_step = shots;
      const std::vector<int> star =
          asymptotic_alphas(theta, config.likelihood_noise, config);
      const int steps = config.steps;
      std::vector<std::vector<int>> alphas(
          static_cast<std::size_t>(spec.trials));
      const std::uint64_t cell_seed = derive_seed(
          spec.base_seed, ti, static_cast<std::uint64_t>(shots), 0x02);
      parallel_trials(spec.trials, spec.jobs, [&](int trial) {
        RandomStream stream(cell_seed, static_cast<std::uint64_t>(trial));
        alphas[static_cast<std::size_t>(trial)] =
            run_adaptive(config, theta, spec.true_noise, stream).alphas;
      });

      int full_matches = 0;
      for (const std::vector<int>& seq : alphas) {
        full_matches += (seq == star) ? 1 : 0;
      }
      const double full_fraction =
          static_cast<double>(full_matches) / spec.trials;

      for (int k = 0; k < steps; ++k) {
        AlphaConvergenceRow row;
        row.target = target;
        row.shots = shots;
        row.step = k + 1;
        row.alpha_star = star[static_cast<std::size_t>(k)];
        double mean = 0.0;
        int matches = 0;
        for (const std::vector<int>& seq : alphas) {
          const double ratio =
              static_cast<double>(seq[static_cast<std::size_t>(k)]) /
              star[static_cast<std::size_t>(k)];
          mean += ratio;
          matches += seq[static_cast<std::size_t>(k)] ==
                             star[static_cast<std::size_t>(k)]
                         ? 1
                         : 0;
        }
        mean /= spec.trials;
        double var = 0.0;
        for (const std::vector<int>& seq : alphas) {
          const double ratio =
              static_cast<double>(seq[static_cast<std::size_t>(k)]) /
              star[static_cast<std::size_t>(k)];
          var += (ratio - mean) * (ratio - mean);
        }
        var /= spec.trials;
        row.mean_ratio = mean;
        row.std_ratio = std::sqrt(var);
        row.match_fraction = static_cast<double>(matches) / spec.trials;
        row.full_match_fraction = full_fraction;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<NormalitySummary> normality_study(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<NormalitySummary> out;
  for (std::size_t ti = 0; ti < spec.targets.size(); ++ti) {
    const double target = spec.targets[ti];
    const double theta = std::acos(target);
    const double ic_tot = asymptotic_total_fisher(
        theta, spec.true_noise, spec.config, FisherKind::kClassical);
    const double scale = 1.0 - target * target;
    const double ccr = std::sqrt(scale / ic_tot);

    const std::uint64_t cell_seed = derive_seed(spec.base_seed, ti, 0, 0x03);
    const CellRun run = run_cell(spec, target, spec.config, cell_seed);

    NormalitySummary summary;
    summary.target = target;
    summary.shots = spec.config.shots_per_step;
    summary.trials = spec.trials;
    summary.ccr_bound = ccr;
    summary.estimates.reserve(run.errors.size());
    for (double e : run.errors) {
      summary.estimates.push_back(target + e);
    }

    std::vector<double> z;
    z.reserve(run.errors.size());
    int within = 0;
    for (double e : run.errors) {
      const double standardized = e * std::sqrt(ic_tot / scale);
      if (std::abs(standardized) <= 3.0) {
        ++within;
      }
      if (std::abs(e) > 10.0 * ccr) {
        ++summary.outliers;
        continue;
      }
      z.push_back(standardized);
    }
    summary.within_3sigma = static_cast<double>(within) / spec.trials;
    if (z.size() < 2) {
      out.push_back(std::move(summary));
      continue;
    }

    double mean = 0.0;
    for (double v : z) {
      mean += v;
    }
    mean /= static_cast<double>(z.size());
    summary.mean_standardized = mean;
    double var = 0.0;
    for (double v : z) {
      var += (v - mean) * (v - mean);
    }
    summary.variance_ratio = var / static_cast<double>(z.size() - 1);

    std::sort(z.begin(), z.end());
    double ks = 0.0;
    const double inv_n = 1.0 / static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double cdf = phi(z[i]);
      ks = std::max(ks, std::abs(cdf - static_cast<double>(i + 1) * inv_n));
      ks = std::max(ks, std::abs(cdf - static_cast<double>(i) * inv_n));
    }
    summary.ks_statistic = ks;
    summary.ks_threshold =
        kKsCritical1e3 / std::sqrt(static_cast<double>(z.size()));
    out.push_back(std::move(summary));
  }
  return out;
}

std::vector<CalibrationRow> calibration_sweep(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.calibration_offsets.empty()) {
    throw std::invalid_argument("calibration_sweep: no offsets");
  }
  std::vector<CalibrationRow> rows;
  for (std::size_t ti = 0; ti < spec.targets.size(); ++ti) {
    const double target = spec.targets[ti];
    const double theta = std::acos(target);
    for (std::size_t oi = 0; oi < spec.calibration_offsets.size(); ++oi) {
      const double offset = spec.calibration_offsets[oi];
      for (int steps : spec.m_list) {
        AdaptiveConfig config = config_with_steps(spec.config, steps);
        // Perfectly calibrated reference bound at the same step count.
        AdaptiveConfig calibrated = config;
        calibrated.likelihood_noise = spec.true_noise;
        const CrBounds bounds =
            ccr_qcr_bounds(theta, spec.true_noise, calibrated);

        config.likelihood_noise =
            NoiseModel(spec.true_noise.p_q * (1.0 + offset),
                       spec.true_noise.n_qubits);

        ExperimentSpec one = spec;
        one.method = Method::kAdaptive;
        const std::uint64_t cell_seed =
            derive_seed(spec.base_seed, ti,
                        static_cast<std::uint64_t>(steps), 0x100 + oi);
        const CellRun run = run_cell(one, target, config, cell_seed);

        CalibrationRow row;
        row.target = target;
        row.offset = offset;
        row.steps = steps;
        row.qcr_calibrated = std::sqrt(bounds.qcr);
        const CellStats stats = summarize_errors(
            run.errors, run.queries, std::sqrt(bounds.ccr));
        row.rmse = stats.rmse;
        row.rmse_outlier_filtered = stats.rmse_filtered;
        row.outliers = stats.outliers;
        row.max_total_queries = stats.max_queries;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

namespace {

template <typename Row, typename Fn>
std::string render_csv(const char* header, const std::vector<Row>& rows,
                       Fn&& emit) {
  std::string out(header);
  out.push_back('\n');
  char buf[1024];
  for (const Row& row : rows) {
    char* end = emit(row, buf, buf + sizeof(buf));
    if (end > buf && end[-1] == ',') {
      --end;  // drop trailing comma
    }
    out.append(buf, end);
    out.push_back('\n');
  }
  return out;
}

char* append_ll(char* dst, const char* end, long long v) {
  dst += std::snprintf(dst, static_cast<std::size_t>(end - dst), "%lld,", v);
  return dst;
}

char* append_int(char* dst, const char* end, int v) {
  dst += std::snprintf(dst, static_cast<std::size_t>(end - dst), "%d,", v);
  return dst;
}

}  // namespace

std::string to_csv(const std::vector<RmseRow>& rows) {
  return render_csv(
      "target,steps,max_total_queries,rmse,rmse_outlier_filtered,ccr_bound,"
      "qcr_bound,precision_limit,heisenberg_reference,outliers,trials",
      rows, [](const RmseRow& r, char* dst, const char* end) {
        dst = append(dst, end, r.target);
        dst = append_int(dst, end, r.steps);
        dst = append_ll(dst, end, r.max_total_queries);
        dst = append(dst, end, r.rmse);
        dst = append(dst, end, r.rmse_outlier_filtered);
        dst = append(dst, end, r.ccr_bound);
        dst = append(dst, end, r.qcr_bound);
        dst = append(dst, end, r.precision_limit);
        dst = append(dst, end, r.heisenberg_reference);
        dst = append_int(dst, end, r.outliers);
        dst = append_int(dst, end, r.trials);
        return dst;
      });
}

std::string to_csv(const std::vector<LandscapeRow>& rows) {
  return render_csv(
      "target,theta,ic_tot_adaptive,iq_tot_adaptive,ic_tot_standard,"
      "ic_tot_nonadaptive,ccr_adaptive,ccr_standard,ccr_nonadaptive,"
      "ratio_q_over_c,ratio_limit_over_q,n_q_star",
      rows, [](const LandscapeRow& r, char* dst, const char* end) {
        dst = append(dst, end, r.target);
        dst = append(dst, end, r.theta);
        dst = append(dst, end, r.ic_tot_adaptive);
        dst = append(dst, end, r.iq_tot_adaptive);
        dst = append(dst, end, r.ic_tot_standard);
        dst = append(dst, end, r.ic_tot_nonadaptive);
        dst = append(dst, end, r.ccr_adaptive);
        dst = append(dst, end, r.ccr_standard);
        dst = append(dst, end, r.ccr_nonadaptive);
        dst = append(dst, end, r.ratio_q_over_c);
        dst = append(dst, end, r.ratio_limit_over_q);
        dst = append_ll(dst, end, r.n_q_star);
        return dst;
      });
}

std::string to_csv(const std::vector<AlphaConvergenceRow>& rows) {
  return render_csv(
      "target,shots,step,alpha_star,mean_ratio,std_ratio,match_fraction,"
      "full_match_fraction",
      rows, [](const AlphaConvergenceRow& r, char* dst, const char* end) {
        dst = append(dst, end, r.target);
        dst = append_ll(dst, end, r.shots);
        dst = append_int(dst, end, r.step);
        dst = append_int(dst, end, r.alpha_star);
        dst = append(dst, end, r.mean_ratio);
        dst = append(dst, end, r.std_ratio);
        dst = append(dst, end, r.match_fraction);
        dst = append(dst, end, r.full_match_fraction);
        return dst;
      });
}

std::string to_csv(const std::vector<NormalitySummary>& rows) {
  return render_csv(
      "target,shots,trials,outliers,variance_ratio,mean_standardized,"
      "ks_statistic,ks_threshold,within_3sigma,ccr_bound",
      rows, [](const NormalitySummary& r, char* dst, const char* end) {
        dst = append(dst, end, r.target);
        dst = append_ll(dst, end, r.shots);
        dst = append_int(dst, end, r.trials);
        dst = append_int(dst, end, r.outliers);
        dst = append(dst, end, r.variance_ratio);
        dst = append(dst, end, r.mean_standardized);
        dst = append(dst, end, r.ks_statistic);
        dst = append(dst, end, r.ks_threshold);
        dst = append(dst, end, r.within_3sigma);
        dst = append(dst, end, r.ccr_bound);
        return dst;
      });
}

std::string to_csv(const std::vector<CalibrationRow>& rows) {
  return render_csv(
      "target,offset,steps,max_total_queries,rmse,rmse_outlier_filtered,"
      "qcr_calibrated,outliers",
      rows, [](const CalibrationRow& r, char* dst, const char* end) {
        dst = append(dst, end, r.target);
        dst = append(dst, end, r.offset);
        dst = append_int(dst, end, r.steps);
        dst = append_ll(dst, end, r.max_total_queries);
        dst = append(dst, end, r.rmse);
        dst = append(dst, end, r.rmse_outlier_filtered);
        dst = append(dst, end, r.qcr_calibrated);
        dst = append_int(dst, end, r.outliers);
        return dst;
      });
}

}  // namespace qmve
