#pragma once

// Monte Carlo harness: error-vs-queries sweeps against the Cramer-Rao
// bounds, Fisher-information landscapes over the target value, level
// convergence and normality studies, and calibration-error sensitivity.
// Trials run in parallel; every aggregate is reduced in trial order so
// tables are identical for any job count.

#include <cstdint>
#include <string>
#include <vector>

#include "qmve/adaptive.hpp"

namespace qmve {

enum class Method { kAdaptive, kStandard, kNonAdaptive };

const char* method_name(Method method);
Method method_from_name(const std::string& name);

struct ExperimentSpec {
  std::vector<double> targets{0.5};        // mean values cos(theta*)
  int trials = 100;
  AdaptiveConfig config;
  NoiseModel true_noise;
  Method method = Method::kAdaptive;
  std::vector<double> calibration_offsets;  // relative p_q errors
  std::uint64_t base_seed = 42;
  std::vector<int> m_list{3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<long long> shot_list{5, 50, 500};
  int grid_points = 1000;
  int jobs = 0;  // 0: hardware concurrency

  void validate() const;
};

// The level sequence a method uses at a given step count; adaptive returns
// the asymptotic sequence, the baselines their predefined ones
// (all-ones, or 1 followed by doubling even levels).
std::vector<int> method_levels(Method method, double theta_true,
                               const NoiseModel& noise,
                               const AdaptiveConfig& config);

struct RmseRow {
  double target = 0.0;
  int steps = 0;
  long long max_total_queries = 0;  // max over trials
  double rmse = 0.0;
  double rmse_outlier_filtered = 0.0;
  double ccr_bound = 0.0;         // rmse-scale sqrt of the asymptotic bound
  double qcr_bound = 0.0;
  double precision_limit = 0.0;   // query-budget bound at max_total_queries
  double heisenberg_reference = 0.0;  // 1 / max_total_queries
  int outliers = 0;
  int trials = 0;
};

std::vector<RmseRow> rmse_sweep(const ExperimentSpec& spec);

struct LandscapeRow {
  double target = 0.0;
  double theta = 0.0;
  double ic_tot_adaptive = 0.0;
  double iq_tot_adaptive = 0.0;
  double ic_tot_standard = 0.0;
  double ic_tot_nonadaptive = 0.0;
  double ccr_adaptive = 0.0;      // rmse scale
  double ccr_standard = 0.0;
  double ccr_nonadaptive = 0.0;
  double ratio_q_over_c = 0.0;    // Iq*/Ic* (adaptive)
  double ratio_limit_over_q = 0.0;  // [Nq* Iq(aB)/aB] / Iq*
  long long n_q_star = 0;
};

std::vector<LandscapeRow> fisher_landscape(const ExperimentSpec& spec,
                                           int grid_points);

struct AlphaConvergenceRow {
  double target = 0.0;
  long long shots = 0;
  int step = 0;        // 1-based
  int alpha_star = 0;
  double mean_ratio = 0.0;  // alpha_k / alpha*_k over trials
  double std_ratio = 0.0;
  double match_fraction = 0.0;  // alpha_k == alpha*_k
  double full_match_fraction = 0.0;  // whole sequence (same for all steps)
};

std::vector<AlphaConvergenceRow> alpha_convergence(
    const ExperimentSpec& spec, const std::vector<long long>& shot_list);

struct NormalitySummary {
  double target = 0.0;
  long long shots = 0;
  int trials = 0;
  int outliers = 0;
  double variance_ratio = 0.0;   // sample variance of the standardized stat
  double mean_standardized = 0.0;
  double ks_statistic = 0.0;     // vs N(0,1), outliers excluded
  double ks_threshold = 0.0;     // critical value at significance 1e-3
  double within_3sigma = 0.0;
  double ccr_bound = 0.0;
  std::vector<double> estimates;  // cos(theta_hat_M) per trial
};

std::vector<NormalitySummary> normality_study(const ExperimentSpec& spec);

struct CalibrationRow {
  double target = 0.0;
  double offset = 0.0;
  int steps = 0;
  long long max_total_queries = 0;
  double rmse = 0.0;
  double rmse_outlier_filtered = 0.0;
  double qcr_calibrated = 0.0;  // rmse scale, offset-free bound
  int outliers = 0;
};

std::vector<CalibrationRow> calibration_sweep(const ExperimentSpec& spec);

// CSV rendering, one header row, 17-significant-digit numerics.
std::string to_csv(const std::vector<RmseRow>& rows);
std::string to_csv(const std::vector<LandscapeRow>& rows);
std::string to_csv(const std::vector<AlphaConvergenceRow>& rows);
std::string to_csv(const std::vector<NormalitySummary>& rows);
std::string to_csv(const std::vector<CalibrationRow>& rows);

// Derived per-cell seed; stable hash of the experiment coordinates.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

}  // namespace qmve
