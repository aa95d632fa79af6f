#pragma once

// Adaptive maximum-likelihood estimation of a mean value cos(theta) from
// amplitude-amplified measurements: hierarchical binomial likelihood,
// grid MLE search with a narrowing window, per-step optimization of the
// amplified level against a regularized Fisher-information-per-query
// objective, and the deterministic asymptotic machinery the random runs
// converge to.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmve/model.hpp"
#include "qmve/rng.hpp"
#include "qmve/types.hpp"

namespace qmve {

struct MeasurementRecord {
  AmplifiedLevel level;
  long long shots = 0;
  long long hits = 0;

  void validate() const {
    if (shots < 1 || hits < 0 || hits > shots) {
      throw std::invalid_argument("MeasurementRecord: need 0 <= hits <= shots");
    }
  }
};

// Candidate-level schedule. Default for step k (1-based) is
// {2, 3, ..., min(2^(k+1), cap)}; explicit per-step sets may override.
struct RangeSchedule {
  int cap = 1 << 13;
  std::map<int, std::vector<int>> overrides;

  std::vector<int> range_for_step(int k) const;
  void validate() const;
};

struct MleGridParams {
  double eps_dom = 1e-6;         // search domain is (eps_dom, pi - eps_dom)
  int coarse_factor = 40;        // global grid: coarse_factor*alpha_max + 1
  int points_per_period = 20;    // window grid spacing pi/(ppp*alpha_max)
  double window_constant = 5.0;  // half-width multiplier on the asymptotic sd
  double golden_tol = 1e-10;     // absolute tolerance of the refinement
  double global_margin = 1e-6;   // ln-likelihood margin for the global rescue
};

struct AdaptiveConfig {
  long long shots_per_step = 500;  // N
  int steps = 8;                   // M
  double delta = 0.95;             // regularization strength
  RangeSchedule schedule;
  NoiseModel likelihood_noise;     // noise assumed by the estimator
  MleGridParams grid;

  void validate() const;
};

struct Trajectory {
  std::vector<MeasurementRecord> records;
  std::vector<double> estimates;  // theta_hat after each step
  std::vector<int> alphas;
  long long total_queries = 0;    // N * sum(alpha_k)
  double final_theta = 0.0;
  double final_mean_value = 0.0;  // cos(final_theta)
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::string to_json() const;
};

// Regularization factor sin^2(alpha theta) / (1 - delta cos^2(alpha theta)),
// in [0, 1]; suppresses levels whose outcome probability would sit too close
// to 0 or 1 for finite-shot estimation.
double regularizer(int alpha, double theta, double delta);

// Level-selection objective: classical Fisher information per query times
// the regularizer.
double objective(int alpha, double theta_hat, const NoiseModel& noise,
                 double delta);

struct AlphaChoice {
  int alpha = 1;
  bool degenerate = false;  // every candidate scored zero
};

// Exhaustive scan of the candidate range; objectives within relative 1e-9
// of the maximum count as tied and the smallest such level wins.
AlphaChoice optimize_alpha(double theta_hat, std::span<const int> range,
                           const NoiseModel& noise, double delta);

// Sum over records of x ln P1 + (N-x) ln P0, dropping the theta-independent
// binomial coefficients; probabilities clamped at 1e-300.
double log_likelihood(double theta, std::span<const MeasurementRecord> records,
                      const NoiseModel& likelihood_noise);

struct MlePrior {
  double theta_hat = 0.0;      // previous estimate (window center)
  double fisher_total = 0.0;   // running total classical Fisher information
};

// Grid MLE: full-domain scan on the first step; afterwards a window of
// half-width window_constant / sqrt(fisher_total) around the previous
// estimate, golden-section refined, with a coarse full-domain scan as a
// safety net (the global result wins if it beats the window optimum by
// more than global_margin in ln-likelihood).
double mle_search(std::span<const MeasurementRecord> records,
                  const NoiseModel& likelihood_noise,
                  const MleGridParams& grid,
                  const std::optional<MlePrior>& previous);

// One full adaptive run: alpha_1 = 1, then sample / estimate / optimize for
// each step (the level optimization is skipped after the final step).
// Sampling uses true_noise; likelihood and optimization use
// config.likelihood_noise.
Trajectory run_adaptive(const AdaptiveConfig& config, double theta_true,
                        const NoiseModel& true_noise, RandomStream& stream);

// Same loop with a caller-fixed level sequence (baseline methods).
Trajectory run_fixed_levels(const AdaptiveConfig& config,
                            std::span<const int> levels, double theta_true,
                            const NoiseModel& true_noise,
                            RandomStream& stream);

// Deterministic sequence alpha*_k obtained by running the level
// optimization at the true theta; the random alpha_k converge to it.
std::vector<int> asymptotic_alphas(double theta_true, const NoiseModel& noise,
                                   const AdaptiveConfig& config);

enum class FisherKind { kClassical, kQuantum };

// N * sum_k I(alpha*_k) for the asymptotic sequence.
double asymptotic_total_fisher(double theta_true, const NoiseModel& noise,
                               const AdaptiveConfig& config, FisherKind kind);
double total_fisher_for_levels(std::span<const int> levels, double theta_true,
                               const NoiseModel& noise, long long shots,
                               FisherKind kind);

struct CrBounds {
  double ccr = 0.0;  // (1 - cos^2 theta) / I*_c,tot  (MSE scale)
  double qcr = 0.0;  // (1 - cos^2 theta) / I*_q,tot
};

CrBounds ccr_qcr_bounds(double theta_true, const NoiseModel& noise,
                        const AdaptiveConfig& config);

}  // namespace qmve
