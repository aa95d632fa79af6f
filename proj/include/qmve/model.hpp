#pragma once

// Closed-form single-level model: outcome probabilities, classical and
// quantum Fisher information, the finite-dimension correction terms, and
// the query-budget precision bounds for amplitude-amplified states under
// global depolarization.

#include "qmve/types.hpp"

namespace qmve {

// Both outcome probabilities of one measurement, computed without
// cancellation. With eta = p_q^alpha and x = alpha*theta/2:
//   odd:  P1 = (1-eta)/2 + eta sin^2 x,        P0 = (1-eta)/2 + eta cos^2 x
//   even: P1 = (1-eta)(d-1)/d + eta sin^2 x,   P0 = (1-eta)/d + eta cos^2 x
// P0 is returned directly rather than as 1-P1 so that likelihoods and
// Fisher denominators stay accurate when P1 approaches 1.
struct ProbPair {
  double p_one;
  double p_zero;
};

ProbPair prob_pair(AmplifiedLevel level, double theta, const NoiseModel& noise);

// Probability of the "1" outcome for one prepare-and-measure cycle.
// Strictly inside (0, 1) whenever p_q < 1.
double prob_one(AmplifiedLevel level, double theta, const NoiseModel& noise);

// Classical Fisher information of the binary outcome,
//   I_c = alpha^2 p^(2 alpha) sin^2(alpha theta) / [4 P (1-P)].
// For p_q = 1 the expression cancels to alpha^2 identically; that value is
// also used at the removable 0/0 points sin(alpha theta) = 0.
double classical_fisher(AmplifiedLevel level, double theta,
                        const NoiseModel& noise);

// Quantum Fisher information of the depolarized amplified state,
//   I_q = alpha^2 p^(2 alpha) / [2^(1-n) + (1 - 2^(1-n)) p^alpha],
// independent of theta.
double quantum_fisher(AmplifiedLevel level, const NoiseModel& noise);

// Classical Fisher information of the ideal three-outcome measurement
// (subspace-resolving), defined for even levels only. Never exceeds
// quantum_fisher; equal exactly when sin[2(m+1)theta] = +-1.
double three_valued_fisher(AmplifiedLevel level, double theta,
                           const NoiseModel& noise);

// Tolerance below which |cos[(m+1)theta]| counts as singular for the
// finite-dimension correction.
inline constexpr double kSingularCosTolerance = 1e-12;

struct SingularPointError : std::domain_error {
  using std::domain_error::domain_error;
};

// Finite-dimension correction epsilon_n entering kappa; diverges where
// cos[(m+1)theta] = 0 (signalled as SingularPointError). Even levels only.
double epsilon_n(AmplifiedLevel level, double theta, const NoiseModel& noise);

// kappa: ratio shaping between the binary-outcome and quantum Fisher
// information for even levels,
//   kappa = sin^2 u / (1 - eta cos^2 u + epsilon_n),  u = (m+1) theta,
// and its large-dimension limit kappa_inf (no epsilon_n term; in [0,1)).
double kappa(AmplifiedLevel level, double theta, const NoiseModel& noise);
double kappa_inf(AmplifiedLevel level, double theta, double p_q);

// Smallest alpha maximizing quantum Fisher information per query,
// I_q(alpha)/alpha, over 1..search_cap. Requires p_q < 1.
int alpha_b(const NoiseModel& noise, int search_cap);
int alpha_b(const NoiseModel& noise);  // cap = max(64, ceil(-8/ln p_q))
int default_alpha_b_cap(double p_q);

// Upper bound on the total quantum Fisher information attainable with
// N_q oracle queries split across independently prepared states:
//   I_q(N_q)                      for N_q <= alpha_B
//   N_q * I_q(alpha_B) / alpha_B  for N_q >  alpha_B.
double total_qfi_bound(long long n_queries, const NoiseModel& noise);

// Reciprocal of total_qfi_bound: the least achievable mean squared error
// of any unbiased estimate of theta. If a mean value is supplied the bound
// is scaled by (1 - mean^2) so it applies to the cos(theta) estimate.
double mse_lower_bound(long long n_queries, const NoiseModel& noise);
double mse_lower_bound(long long n_queries, const NoiseModel& noise,
                       double mean_value);

}  // namespace qmve
