#include "qmve/model.hpp"

#include <algorithm>
#include <cmath>

namespace qmve {

namespace {

// eta = p_q^alpha; the only place the survival probability enters.
double survival(const NoiseModel& noise, int alpha) {
  return std::pow(noise.p_q, static_cast<double>(alpha));
}

double half_angle(int alpha, double theta) {
  return 0.5 * static_cast<double>(alpha) * theta;
}

}  // namespace

ProbPair prob_pair(AmplifiedLevel level, double theta,
                   const NoiseModel& noise) {
  require_theta_domain(theta);
  noise.validate();
  const double eta = survival(noise, level.alpha);
  const double x = half_angle(level.alpha, theta);
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double s2 = s * s;
  const double c2 = c * c;
  if (level.odd()) {
    return {0.5 * (1.0 - eta) + eta * s2, 0.5 * (1.0 - eta) + eta * c2};
  }
  const double inv_d = noise.inv_dim();
  return {(1.0 - eta) * (1.0 - inv_d) + eta * s2,
          (1.0 - eta) * inv_d + eta * c2};
}

double prob_one(AmplifiedLevel level, double theta, const NoiseModel& noise) {
  return prob_pair(level, theta, noise).p_one;
}

double classical_fisher(AmplifiedLevel level, double theta,
                        const NoiseModel& noise) {
  require_theta_domain(theta);
  noise.validate();
  const double a = static_cast<double>(level.alpha);
  if (noise.p_q == 1.0) {
    // 4 P (1-P) = sin^2(alpha theta) exactly, so the ratio is alpha^2
    // everywhere; the 0/0 points take the same (removable-limit) value.
    return a * a;
  }
  const double eta = survival(noise, level.alpha);
  const double x = half_angle(level.alpha, theta);
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double num = a * a * eta * eta * (s * s) * (c * c);
  if (num == 0.0) {
    return 0.0;
  }
  const ProbPair p = prob_pair(level, theta, noise);
  return num / (p.p_one * p.p_zero);
}

double quantum_fisher(AmplifiedLevel level, const NoiseModel& noise) {
  noise.validate();
  const double a = static_cast<double>(level.alpha);
  const double eta = survival(noise, level.alpha);
  const double t = noise.two_over_dim();
  return a * a * eta * eta / (t + (1.0 - t) * eta);
}

double three_valued_fisher(AmplifiedLevel level, double theta,
                           const NoiseModel& noise) {
  require_theta_domain(theta);
  noise.validate();
  if (!level.even()) {
    throw std::invalid_argument("three_valued_fisher: alpha must be even");
  }
  const double mp1 = static_cast<double>(level.m() + 1);
  const double eta = survival(noise, level.alpha);
  const double d = noise.dim();
  const double u = half_angle(level.alpha, theta);  // (m+1) theta
  const double s2 = std::sin(u) * std::sin(u);
  const double c2 = std::cos(u) * std::cos(u);
  // Factored form of the three-outcome Fisher information; equivalent to
  // the direct expression but free of cancellation:
  //   I' = 4 d eta^2 (m+1)^2 s2 c2 G / [(d eta s2 + 1-eta)(d eta c2 + 1-eta)]
  // with G = d eta + 2 (1-eta).
  const double g = d * eta + 2.0 * (1.0 - eta);
  const double denom =
      (d * eta * s2 + (1.0 - eta)) * (d * eta * c2 + (1.0 - eta));
  return 4.0 * d * eta * eta * mp1 * mp1 * s2 * c2 * g / denom;
}

double epsilon_n(AmplifiedLevel level, double theta, const NoiseModel& noise) {
  require_theta_domain(theta);
  noise.validate();
  if (!level.even()) {
    throw std::invalid_argument("epsilon_n: alpha must be even");
  }
  const double eta = survival(noise, level.alpha);
  const double u = half_angle(level.alpha, theta);
  const double c = std::cos(u);
  if (std::abs(c) < kSingularCosTolerance) {
    throw SingularPointError("epsilon_n: cos[(m+1) theta] is singular");
  }
  const double c2 = c * c;
  const double d = noise.dim();
  return (1.0 - eta) / (d * eta * c2) *
         (1.0 - (1.0 - eta) / d - 2.0 * eta * c2);
}

double kappa(AmplifiedLevel level, double theta, const NoiseModel& noise) {
  const double eps = epsilon_n(level, theta, noise);  // validates inputs
  const double eta = survival(noise, level.alpha);
  const double u = half_angle(level.alpha, theta);
  const double s2 = std::sin(u) * std::sin(u);
  const double c2 = std::cos(u) * std::cos(u);
  return s2 / (1.0 - eta * c2 + eps);
}

double kappa_inf(AmplifiedLevel level, double theta, double p_q) {
  require_theta_domain(theta);
  if (!level.even()) {
    throw std::invalid_argument("kappa_inf: alpha must be even");
  }
  if (!(p_q > 0.0) || !(p_q <= 1.0)) {
    throw std::invalid_argument("kappa_inf: p_q must be in (0, 1]");
  }
  const double eta = std::pow(p_q, static_cast<double>(level.alpha));
  const double u = half_angle(level.alpha, theta);
  const double s2 = std::sin(u) * std::sin(u);
  // 1 - eta cos^2 u rewritten as (1-eta) + eta sin^2 u.
  return s2 / ((1.0 - eta) + eta * s2);
}

int default_alpha_b_cap(double p_q) {
  const double continuous = std::ceil(-8.0 / std::log(p_q));
  return std::max(64, static_cast<int>(continuous));
}

int alpha_b(const NoiseModel& noise, int search_cap) {
  noise.validate();
  if (noise.p_q == 1.0) {
    throw std::invalid_argument(
        "alpha_b: I_q(alpha)/alpha is unbounded at p_q = 1");
  }
  const int required = static_cast<int>(std::ceil(-2.0 / std::log(noise.p_q)));
  if (search_cap < required) {
    throw std::invalid_argument("alpha_b: search_cap too small for p_q");
  }
  int best_alpha = 1;
  double best = -1.0;
  for (int a = 1; a <= search_cap; ++a) {
    const double value =
        quantum_fisher(AmplifiedLevel(a), noise) / static_cast<double>(a);
    if (value > best) {  // strict: ties keep the smallest alpha
      best = value;
      best_alpha = a;
    }
  }
  return best_alpha;
}

int alpha_b(const NoiseModel& noise) {
  noise.validate();
  if (noise.p_q == 1.0) {
    throw std::invalid_argument(
        "alpha_b: I_q(alpha)/alpha is unbounded at p_q = 1");
  }
  return alpha_b(noise, default_alpha_b_cap(noise.p_q));
}

double total_qfi_bound(long long n_queries, const NoiseModel& noise) {
  noise.validate();
  if (n_queries < 1) {
    throw std::invalid_argument("total_qfi_bound: N_q must be >= 1");
  }
  const int block = alpha_b(noise);
  if (n_queries <= block) {
    return quantum_fisher(AmplifiedLevel(static_cast<int>(n_queries)), noise);
  }
  return static_cast<double>(n_queries) *
         quantum_fisher(AmplifiedLevel(block), noise) /
         static_cast<double>(block);
}

double mse_lower_bound(long long n_queries, const NoiseModel& noise) {
  return 1.0 / total_qfi_bound(n_queries, noise);
}

double mse_lower_bound(long long n_queries, const NoiseModel& noise,
                       double mean_value) {
  if (!(mean_value > -1.0) || !(mean_value < 1.0)) {
    throw std::invalid_argument("mse_lower_bound: mean value outside (-1, 1)");
  }
  return (1.0 - mean_value * mean_value) / total_qfi_bound(n_queries, noise);
}

}  // namespace qmve
