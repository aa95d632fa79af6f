#include "qmve/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "qmve/kernels.hpp"

namespace qmve {

namespace {

constexpr double kPi = M_PI;

std::vector<kernels::LevelTerm> make_terms(
    std::span<const MeasurementRecord> records, const NoiseModel& noise) {
  std::vector<kernels::LevelTerm> terms;
  terms.reserve(records.size());
  const double inv_d = noise.inv_dim();
  for (const MeasurementRecord& rec : records) {
    rec.validate();
    kernels::LevelTerm t;
    t.alpha = static_cast<double>(rec.level.alpha);
    t.eta = std::pow(noise.p_q, t.alpha);
    t.inv_d = inv_d;
    t.odd = rec.level.odd();
    t.hits = static_cast<double>(rec.hits);
    t.misses = static_cast<double>(rec.shots - rec.hits);
    terms.push_back(t);
  }
  return terms;
}

void scan(const std::vector<kernels::LevelTerm>& terms,
          const std::vector<double>& thetas, std::vector<double>& acc) {
  acc.assign(thetas.size(), 0.0);
  for (const kernels::LevelTerm& t : terms) {
    kernels::accumulate_log_likelihood(t, thetas.data(), thetas.size(),
                                       acc.data());
  }
}

double eval_one(const std::vector<kernels::LevelTerm>& terms, double theta) {
  double acc = 0.0;
  for (const kernels::LevelTerm& t : terms) {
    kernels::accumulate_log_likelihood(t, &theta, 1, &acc);
  }
  return acc;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + step * static_cast<double>(i);
  }
  out.back() = hi;
  return out;
}

// Golden-section maximization on [lo, hi] to absolute tolerance tol.
double golden_max(const std::vector<kernels::LevelTerm>& terms, double lo,
                  double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval_one(terms, c);
  double fd = eval_one(terms, d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval_one(terms, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval_one(terms, d);
    }
  }
  return 0.5 * (a + b);
}

struct GridBest {
  std::size_t index;
  double value;
};

GridBest best_on_grid(const std::vector<double>& values) {
  GridBest best{0, values[0]};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > best.value) {
      best = {i, values[i]};
    }
  }
  return best;
}

int max_level(std::span<const MeasurementRecord> records) {
  int alpha_max = 1;
  for (const MeasurementRecord& rec : records) {
    alpha_max = std::max(alpha_max, rec.level.alpha);
  }
  return alpha_max;
}

}  // namespace

std::vector<int> RangeSchedule::range_for_step(int k) const {
  if (k < 1) {
    throw std::invalid_argument("RangeSchedule: step index must be >= 1");
  }
  if (auto it = overrides.find(k); it != overrides.end()) {
    return it->second;
  }
  const int hi = (k + 1 >= 31) ? cap : std::min(cap, 1 << (k + 1));
  std::vector<int> range;
  range.reserve(static_cast<std::size_t>(std::max(hi - 1, 1)));
  for (int a = 2; a <= hi; ++a) {
    range.push_back(a);
  }
  if (range.empty()) {
    throw std::invalid_argument("RangeSchedule: empty candidate range");
  }
  return range;
}

void RangeSchedule::validate() const {
  if (cap < 2) {
    throw std::invalid_argument("RangeSchedule: cap must be >= 2");
  }
  for (const auto& [step, range] : overrides) {
    if (step < 1 || range.empty()) {
      throw std::invalid_argument("RangeSchedule: bad override");
    }
    for (int a : range) {
      if (a < 2) {
        throw std::invalid_argument(
            "RangeSchedule: candidate levels must be >= 2");
      }
    }
  }
}

void AdaptiveConfig::validate() const {
  if (shots_per_step < 1) {
    throw std::invalid_argument("AdaptiveConfig: shots_per_step must be >= 1");
  }
  if (steps < 1) {
    throw std::invalid_argument("AdaptiveConfig: steps must be >= 1");
  }
  if (!(delta > 0.0) || !(delta <= 1.0)) {
    throw std::invalid_argument("AdaptiveConfig: delta must be in (0, 1]");
  }
  schedule.validate();
  likelihood_noise.validate();
  if (grid.eps_dom <= 0.0 || grid.coarse_factor < 1 ||
      grid.points_per_period < 1 || grid.window_constant <= 0.0 ||
      grid.golden_tol <= 0.0) {
    throw std::invalid_argument("AdaptiveConfig: bad grid parameters");
  }
}

double regularizer(int alpha, double theta, double delta) {
  if (alpha < 1) {
    throw std::invalid_argument("regularizer: alpha must be >= 1");
  }
  if (!(delta > 0.0) || !(delta <= 1.0)) {
    throw std::invalid_argument("regularizer: delta must be in (0, 1]");
  }
  const double s = std::sin(static_cast<double>(alpha) * theta);
  const double s2 = s * s;
  if (s2 == 0.0) {
    return 0.0;
  }
  // denominator rewritten as (1-delta) + delta*sin^2; stable at delta = 1
  return s2 / ((1.0 - delta) + delta * s2);
}

double objective(int alpha, double theta_hat, const NoiseModel& noise,
                 double delta) {
  const double reg = regularizer(alpha, theta_hat, delta);
  if (reg == 0.0) {
    return 0.0;
  }
  return classical_fisher(AmplifiedLevel(alpha), theta_hat, noise) /
         static_cast<double>(alpha) * reg;
}

AlphaChoice optimize_alpha(double theta_hat, std::span<const int> range,
                           const NoiseModel& noise, double delta) {
  if (range.empty()) {
    throw std::invalid_argument("optimize_alpha: empty range");
  }
  std::vector<double> scores;
  scores.reserve(range.size());
  double best = -1.0;
  for (int a : range) {
    scores.push_back(objective(a, theta_hat, noise, delta));
    best = std::max(best, scores.back());
  }
  if (best <= 0.0) {
    return {*std::min_element(range.begin(), range.end()), true};
  }
  // ties within relative 1e-9 of the maximum resolve to the smallest level
  const double threshold = best * (1.0 - 1e-9);
  int chosen = 0;
  for (std::size_t i = 0; i < range.size(); ++i) {
    if (scores[i] >= threshold && (chosen == 0 || range[i] < chosen)) {
      chosen = range[i];
    }
  }
  return {chosen, false};
}

double log_likelihood(double theta, std::span<const MeasurementRecord> records,
                      const NoiseModel& likelihood_noise) {
  require_theta_domain(theta);
  if (records.empty()) {
    return 0.0;
  }
  return eval_one(make_terms(records, likelihood_noise), theta);
}

double mle_search(std::span<const MeasurementRecord> records,
                  const NoiseModel& likelihood_noise,
                  const MleGridParams& grid,
                  const std::optional<MlePrior>& previous) {
  if (records.empty()) {
    throw std::invalid_argument("mle_search: no records");
  }
  const auto terms = make_terms(records, likelihood_noise);
  const int alpha_max = max_level(records);
  const double lo_dom = grid.eps_dom;
  const double hi_dom = kPi - grid.eps_dom;

  const std::size_t coarse_points =
      static_cast<std::size_t>(grid.coarse_factor) *
          static_cast<std::size_t>(alpha_max) +
      1;
  const std::vector<double> coarse = linspace(lo_dom, hi_dom, coarse_points);
  std::vector<double> values;
  scan(terms, coarse, values);
  const GridBest global = best_on_grid(values);
  const auto refine = [&](const std::vector<double>& pts, std::size_t idx) {
    const double a = pts[idx == 0 ? 0 : idx - 1];
    const double b = pts[std::min(idx + 1, pts.size() - 1)];
    return golden_max(terms, a, b, grid.golden_tol);
  };

  if (!previous.has_value()) {
    return refine(coarse, global.index);
  }

  const double sd =
      1.0 / std::sqrt(std::max(previous->fisher_total, 1e-300));
  const double half_width = std::min(kPi / 2.0, grid.window_constant * sd);
  const double lo = std::max(lo_dom, previous->theta_hat - half_width);
  const double hi = std::min(hi_dom, previous->theta_hat + half_width);
  if (!(lo < hi)) {
    return refine(coarse, global.index);
  }
  const double spacing =
      kPi / (static_cast<double>(grid.points_per_period) * alpha_max);
  const std::size_t window_points = std::max<std::size_t>(
      static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1, 5);
  const std::vector<double> window = linspace(lo, hi, window_points);
  std::vector<double> window_values;
  scan(terms, window, window_values);
  const GridBest local = best_on_grid(window_values);
  const double theta_window = refine(window, local.index);
  const double ll_window = eval_one(terms, theta_window);

  // Safety net: a peak outside the window wins only if it clears the
  // refined window optimum by a real margin.
  if (global.value > ll_window + grid.global_margin) {
    const double theta_global = refine(coarse, global.index);
    if (eval_one(terms, theta_global) > ll_window) {
      return theta_global;
    }
  }
  return theta_window;
}

namespace {

Trajectory run_loop(const AdaptiveConfig& config, double theta_true,
                    const NoiseModel& true_noise, RandomStream& stream,
                    std::span<const int> fixed_levels) {
  config.validate();
  require_theta_domain(theta_true);
  true_noise.validate();
  const bool adaptive = fixed_levels.empty();
  if (!adaptive &&
      fixed_levels.size() != static_cast<std::size_t>(config.steps)) {
    throw std::invalid_argument("run_fixed_levels: need one level per step");
  }

  Trajectory out;
  out.seed = stream.seed();
  out.stream_id = stream.stream_id();
  out.alphas.push_back(adaptive ? 1 : fixed_levels[0]);

  double fisher_running = 0.0;
  double previous_theta = 0.0;
  for (int k = 1; k <= config.steps; ++k) {
    const AmplifiedLevel level(out.alphas.back());
    const long long hits = sample_step(stream, level, theta_true, true_noise,
                                       config.shots_per_step);
    out.records.push_back({level, config.shots_per_step, hits});

    std::optional<MlePrior> prior;
    if (k > 1) {
      prior = MlePrior{previous_theta, fisher_running};
    }
    const double theta_hat =
        mle_search(out.records, config.likelihood_noise, config.grid, prior);
    out.estimates.push_back(theta_hat);
    previous_theta = theta_hat;
    fisher_running = 0.0;
    for (const MeasurementRecord& rec : out.records) {
      fisher_running +=
          static_cast<double>(rec.shots) *
          classical_fisher(rec.level, theta_hat, config.likelihood_noise);
    }

    if (k < config.steps) {
      if (adaptive) {
        const std::vector<int> range = config.schedule.range_for_step(k);
        out.alphas.push_back(optimize_alpha(theta_hat, range,
                                            config.likelihood_noise,
                                            config.delta)
                                 .alpha);
      } else {
        out.alphas.push_back(fixed_levels[static_cast<std::size_t>(k)]);
      }
    }
  }

  long long query_sum = 0;
  for (int a : out.alphas) {
    query_sum += a;
  }
  out.total_queries = config.shots_per_step * query_sum;
  out.final_theta = out.estimates.back();
  out.final_mean_value = std::cos(out.final_theta);
  return out;
}

}  // namespace

Trajectory run_adaptive(const AdaptiveConfig& config, double theta_true,
                        const NoiseModel& true_noise, RandomStream& stream) {
  return run_loop(config, theta_true, true_noise, stream, {});
}

Trajectory run_fixed_levels(const AdaptiveConfig& config,
                            std::span<const int> levels, double theta_true,
                            const NoiseModel& true_noise,
                            RandomStream& stream) {
  return run_loop(config, theta_true, true_noise, stream, levels);
}

std::vector<int> asymptotic_alphas(double theta_true, const NoiseModel& noise,
                                   const AdaptiveConfig& config) {
  config.validate();
  require_theta_domain(theta_true);
  std::vector<int> levels{1};
  for (int k = 1; k < config.steps; ++k) {
    const std::vector<int> range = config.schedule.range_for_step(k);
    levels.push_back(
        optimize_alpha(theta_true, range, noise, config.delta).alpha);
  }
  return levels;
}

double total_fisher_for_levels(std::span<const int> levels, double theta_true,
                               const NoiseModel& noise, long long shots,
                               FisherKind kind) {
  double sum = 0.0;
  for (int a : levels) {
    sum += kind == FisherKind::kClassical
               ? classical_fisher(AmplifiedLevel(a), theta_true, noise)
               : quantum_fisher(AmplifiedLevel(a), noise);
  }
  return static_cast<double>(shots) * sum;
}

double asymptotic_total_fisher(double theta_true, const NoiseModel& noise,
                               const AdaptiveConfig& config, FisherKind kind) {
  const std::vector<int> levels = asymptotic_alphas(theta_true, noise, config);
  return total_fisher_for_levels(levels, theta_true, noise,
                                 config.shots_per_step, kind);
}

CrBounds ccr_qcr_bounds(double theta_true, const NoiseModel& noise,
                        const AdaptiveConfig& config) {
  const std::vector<int> levels = asymptotic_alphas(theta_true, noise, config);
  const double mean = std::cos(theta_true);
  const double scale = 1.0 - mean * mean;
  CrBounds bounds;
  bounds.ccr = scale / total_fisher_for_levels(levels, theta_true, noise,
                                               config.shots_per_step,
                                               FisherKind::kClassical);
  bounds.qcr = scale / total_fisher_for_levels(levels, theta_true, noise,
                                               config.shots_per_step,
                                               FisherKind::kQuantum);
  return bounds;
}

std::string Trajectory::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["stream_id"] = stream_id;
  j["shots_per_step"] = records.empty() ? 0 : records.front().shots;
  j["alphas"] = alphas;
  nlohmann::ordered_json hits = nlohmann::ordered_json::array();
  for (const MeasurementRecord& rec : records) {
    hits.push_back(rec.hits);
  }
  j["hits"] = std::move(hits);
  j["estimates"] = estimates;
  j["total_queries"] = total_queries;
  j["theta_estimate"] = final_theta;
  j["mean_value_estimate"] = final_mean_value;
  return j.dump(2);
}

}  // namespace qmve
