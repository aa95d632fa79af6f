#include <cmath>
#include <vector>

#include <doctest.h>

#include "qmve/model.hpp"
#include "qmve/rng.hpp"

using namespace qmve;

namespace {

// Independent finite-difference route to the classical Fisher information:
// (dP/dtheta)^2 / (P (1-P)) with a central difference on prob_one.
double fd_classical_fisher(AmplifiedLevel level, double theta,
                           const NoiseModel& noise, double h = 1e-6) {
  const double plus = prob_one(level, theta + h, noise);
  const double minus = prob_one(level, theta - h, noise);
  const double deriv = (plus - minus) / (2.0 * h);
  const double p = prob_one(level, theta, noise);
  return deriv * deriv / (p * (1.0 - p));
}

}  // namespace

TEST_CASE("noise model derived dimensions") {
  const NoiseModel noise(0.9, 3);
  CHECK(noise.dim() == 8.0);
  CHECK(noise.inv_dim() == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(noise.two_over_dim() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(NoiseModel(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel(1.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel(0.9, 0), std::invalid_argument);
}

TEST_CASE("amplified level parity") {
  CHECK(AmplifiedLevel(1).odd());
  CHECK(AmplifiedLevel(1).m() == 0);
  CHECK(AmplifiedLevel(2).even());
  CHECK(AmplifiedLevel(2).m() == 0);
  CHECK(AmplifiedLevel(7).m() == 3);
  CHECK(AmplifiedLevel(8).m() == 3);
  CHECK_THROWS_AS(AmplifiedLevel(0), std::invalid_argument);
}

TEST_CASE("prob_one fixed points") {
  // odd level at theta = pi/2: the cosine term vanishes
  CHECK(prob_one(AmplifiedLevel(1), M_PI / 2, NoiseModel(0.9, 20)) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // even level, noiseless: collapses to sin^2(alpha theta / 2)
  CHECK(prob_one(AmplifiedLevel(2), M_PI / 3, NoiseModel(1.0, 20)) ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(prob_one(AmplifiedLevel(1), -0.1, NoiseModel(0.9, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(prob_one(AmplifiedLevel(1), M_PI, NoiseModel(0.9, 2)),
                  std::invalid_argument);
}

TEST_CASE("prob_one stays inside (0,1) and matches the pair") {
  RandomStream stream(2024, 0);
  for (int i = 0; i < 2000; ++i) {
    const int alpha = 1 + static_cast<int>(stream.next_u64() % 64);
    const double theta = 1e-4 + stream.next_uniform() * (M_PI - 2e-4);
    const double pq = 0.5 + 0.5 * stream.next_uniform() * 0.999;
    const int n = 1 + static_cast<int>(stream.next_u64() % 24);
    const NoiseModel noise(pq, n);
    const ProbPair pair = prob_pair(AmplifiedLevel(alpha), theta, noise);
    CHECK(pair.p_one > 0.0);
    CHECK(pair.p_one < 1.0);
    CHECK(pair.p_zero > 0.0);
    CHECK(pair.p_one + pair.p_zero == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("prob_one parity symmetry under theta -> pi - theta") {
  RandomStream stream(99, 0);
  for (int i = 0; i < 5000; ++i) {
    const int alpha = 1 + static_cast<int>(stream.next_u64() % 40);
    const double theta = 1e-3 + stream.next_uniform() * (M_PI - 2e-3);
    const NoiseModel noise(0.6 + 0.4 * stream.next_uniform(),
                           1 + static_cast<int>(stream.next_u64() % 20));
    const AmplifiedLevel level(alpha);
    const double direct = prob_one(level, theta, noise);
    const double mirrored = prob_one(level, M_PI - theta, noise);
    if (level.even()) {
      CHECK(mirrored == doctest::Approx(direct).epsilon(1e-12));
    } else {
      CHECK(mirrored == doctest::Approx(1.0 - direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("classical_fisher noiseless value and zero numerator") {
  // noiseless: alpha^2 wherever sin(alpha theta) != 0
  CHECK(classical_fisher(AmplifiedLevel(3), 0.7, NoiseModel(1.0, 20)) ==
        doctest::Approx(9.0).epsilon(1e-13));
  // sin(4 * pi/4) = sin(pi) = 0 up to roundoff
  CHECK(classical_fisher(AmplifiedLevel(4), M_PI / 4, NoiseModel(0.9, 20)) ==
        doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("classical_fisher matches the finite-difference score variance") {
  const NoiseModel noise(0.95, 10);
  const double got = classical_fisher(AmplifiedLevel(2), 0.9, noise);
  const double want = fd_classical_fisher(AmplifiedLevel(2), 0.9, noise);
  CHECK(got == doctest::Approx(want).epsilon(1e-6));

  // step 1e-6 keeps both truncation and cancellation below 1e-5 relative on
  // well-conditioned points (small n, Fisher information not near zero)
  RandomStream stream(7, 0);
  for (int i = 0; i < 300; ++i) {
    const int alpha = 1 + static_cast<int>(stream.next_u64() % 16);
    const double theta = 0.2 + stream.next_uniform() * (M_PI - 0.4);
    const NoiseModel model(0.7 + 0.29 * stream.next_uniform(),
                           2 + static_cast<int>(stream.next_u64() % 9));
    const double analytic = classical_fisher(AmplifiedLevel(alpha), theta,
                                             model);
    const double numeric = fd_classical_fisher(AmplifiedLevel(alpha), theta,
                                               model);
    if (analytic > 1e-2) {
      CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5));
    }
  }
}

TEST_CASE("quantum_fisher closed form") {
  CHECK(quantum_fisher(AmplifiedLevel(1), NoiseModel(1.0, 5)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  // 4 * 0.9^4 / (0.25 + 0.75 * 0.81) = 2.6244 / 0.8575
  CHECK(quantum_fisher(AmplifiedLevel(2), NoiseModel(0.9, 3)) ==
        doctest::Approx(2.6244 / 0.8575).epsilon(1e-12));
}

TEST_CASE("three_valued_fisher equality and zero conditions") {
  const NoiseModel noise(0.9, 4);
  // sin(2(m+1)theta) = 1 at alpha=2, theta=pi/4: reaches quantum_fisher
  const double three = three_valued_fisher(AmplifiedLevel(2), M_PI / 4, noise);
  const double qfi = quantum_fisher(AmplifiedLevel(2), noise);
  CHECK(three == doctest::Approx(qfi).epsilon(1e-12));
  // sin(2 theta) = 0 at theta = pi/2 zeroes it
  CHECK(three_valued_fisher(AmplifiedLevel(2), M_PI / 2, noise) ==
        doctest::Approx(0.0).epsilon(1e-25));
  CHECK_THROWS_AS(three_valued_fisher(AmplifiedLevel(3), 0.5, noise),
                  std::invalid_argument);
}

TEST_CASE("three_valued_fisher never exceeds quantum_fisher") {
  RandomStream stream(11, 0);
  for (int i = 0; i < 20000; ++i) {
    const int alpha = 2 * (1 + static_cast<int>(stream.next_u64() % 16));
    const double theta = 1e-3 + stream.next_uniform() * (M_PI - 2e-3);
    const NoiseModel noise(0.5 + 0.5 * stream.next_uniform(),
                           1 + static_cast<int>(stream.next_u64() % 20));
    const double three = three_valued_fisher(AmplifiedLevel(alpha), theta,
                                             noise);
    const double qfi = quantum_fisher(AmplifiedLevel(alpha), noise);
    CHECK(three <= qfi * (1.0 + 1e-9));
  }
}

TEST_CASE("epsilon_n prefactor and dimension scaling") {
  // eta = 1 kills the prefactor
  CHECK(epsilon_n(AmplifiedLevel(2), 0.5, NoiseModel(1.0, 10)) ==
        doctest::Approx(0.0).epsilon(1e-20));
  // |epsilon_n| at least halves per added qubit (explicit 1/d dependence)
  double previous = std::abs(epsilon_n(AmplifiedLevel(2), 0.5,
                                       NoiseModel(0.95, 10)));
  for (int n = 11; n <= 20; ++n) {
    const double current =
        std::abs(epsilon_n(AmplifiedLevel(2), 0.5, NoiseModel(0.95, n)));
    CHECK(current <= previous / 2.0 * (1.0 + 1e-9));
    previous = current;
  }
  // re-derivation: epsilon_n is the unique value making the Fisher identity
  // hold, so solve the identity for it and compare
  const NoiseModel noise(0.95, 8);
  const AmplifiedLevel level(4);
  const double theta = 0.7;
  const double eps = epsilon_n(level, theta, noise);
  const double eta = std::pow(noise.p_q, 4);
  const double u = 2.0 * theta;  // (m+1) theta
  const double ic = classical_fisher(level, theta, noise);
  const double qfi = quantum_fisher(level, noise);
  const double factor = 1.0 + 2.0 * (1.0 - eta) / (noise.dim() * eta);
  // kappa from the identity, then epsilon from kappa
  const double kappa_from_identity = ic / (qfi * factor);
  const double eps_solved =
      std::sin(u) * std::sin(u) / kappa_from_identity -
      (1.0 - eta * std::cos(u) * std::cos(u));
  CHECK(eps == doctest::Approx(eps_solved).epsilon(1e-9));
  // alpha=4 at pi/2 has cos(2 theta) = -1: regular. alpha=2 at pi/2 has
  // cos(theta) = 0: singular.
  CHECK_NOTHROW(epsilon_n(AmplifiedLevel(4), M_PI / 2, noise));
  CHECK_THROWS_AS(epsilon_n(AmplifiedLevel(2), M_PI / 2, NoiseModel(0.9, 4)),
                  SingularPointError);
}

TEST_CASE("kappa limits") {
  // alpha=2: (m+1)theta = theta; at pi/2 the cosine dies and kappa_inf = 1
  CHECK(kappa_inf(AmplifiedLevel(2), M_PI / 2, 0.9) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // theta -> 0+: numerator -> 0, denominator -> 1 - eta > 0
  CHECK(kappa_inf(AmplifiedLevel(2), 1e-8, 0.9) < 1e-12);
  CHECK(kappa_inf(AmplifiedLevel(2), 0.3, 0.9) < 1.0);
}

TEST_CASE("fisher identity for even levels on a grid") {
  RandomStream stream(31337, 0);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const int alpha = 2 * (1 + static_cast<int>(stream.next_u64() % 32));
    const double theta = 1e-3 + stream.next_uniform() * (M_PI - 2e-3);
    const NoiseModel noise(0.5 + 0.4999 * stream.next_uniform(),
                           1 + static_cast<int>(stream.next_u64() % 20));
    const AmplifiedLevel level(alpha);
    const double u = 0.5 * alpha * theta;
    if (std::abs(std::cos(u)) < 1e-12) {
      continue;
    }
    const double eta = std::pow(noise.p_q, alpha);
    const double factor = 1.0 + 2.0 * (1.0 - eta) / (noise.dim() * eta);
    const double lhs = classical_fisher(level, theta, noise);
    const double rhs = kappa(level, theta, noise) *
                       quantum_fisher(level, noise) * factor;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 9900);
}

TEST_CASE("data processing: classical never exceeds quantum") {
  RandomStream stream(5150, 0);
  for (int i = 0; i < 100000; ++i) {
    const int alpha = 1 + static_cast<int>(stream.next_u64() % 64);
    const double theta = 1e-3 + stream.next_uniform() * (M_PI - 2e-3);
    const NoiseModel noise(0.5 + 0.5 * stream.next_uniform(),
                           1 + static_cast<int>(stream.next_u64() % 22));
    const AmplifiedLevel level(alpha);
    const double ic = classical_fisher(level, theta, noise);
    const double qfi = quantum_fisher(level, noise);
    CHECK(ic <= qfi * (1.0 + 1e-9));
  }
}

TEST_CASE("odd levels have a strict Fisher gap under noise") {
  RandomStream stream(8080, 0);
  for (int i = 0; i < 20000; ++i) {
    const int alpha = 1 + 2 * static_cast<int>(stream.next_u64() % 20);
    const double theta = 1e-3 + stream.next_uniform() * (M_PI - 2e-3);
    const NoiseModel noise(0.5 + 0.4999 * stream.next_uniform(),
                           2 + static_cast<int>(stream.next_u64() % 20));
    const AmplifiedLevel level(alpha);
    const double a = alpha;
    const double eta = std::pow(noise.p_q, a);
    const double cap = a * a * eta * eta;
    CHECK(classical_fisher(level, theta, noise) <= cap * (1.0 + 1e-9));
    CHECK(cap < quantum_fisher(level, noise));
  }
}

TEST_CASE("alpha_b reference values and brute force") {
  CHECK(alpha_b(NoiseModel(0.995, 20)) == 199);
  CHECK(alpha_b(NoiseModel(0.5, 2), 100) == 1);

  // exhaustive scan is both the oracle and the implementation; compare a
  // bounded rerun against the default-cap result
  const NoiseModel fine(0.999, 20);
  const int from_default = alpha_b(fine);
  int best = 1;
  double best_value = -1.0;
  for (int a = 1; a <= 5000; ++a) {
    const double value = quantum_fisher(AmplifiedLevel(a), fine) / a;
    if (value > best_value) {
      best_value = value;
      best = a;
    }
  }
  CHECK(from_default == best);
  CHECK_THROWS_AS(alpha_b(NoiseModel(1.0, 4)), std::invalid_argument);
  CHECK_THROWS_AS(alpha_b(NoiseModel(0.995, 20), 10), std::invalid_argument);
}

TEST_CASE("total_qfi_bound saturating partitions") {
  const NoiseModel noise(0.995, 20);
  const int block = alpha_b(noise);
  // single query
  CHECK(total_qfi_bound(1, noise) ==
        doctest::Approx(quantum_fisher(AmplifiedLevel(1), noise))
            .epsilon(1e-15));
  // whole-budget coherent use below the block size
  CHECK(total_qfi_bound(57, noise) ==
        doctest::Approx(quantum_fisher(AmplifiedLevel(57), noise))
            .epsilon(1e-15));
  // r identical blocks attain the bound exactly
  for (int r : {2, 3}) {
    const double bound = total_qfi_bound(
        static_cast<long long>(r) * block, noise);
    CHECK(bound == doctest::Approx(r * quantum_fisher(AmplifiedLevel(block),
                                                      noise))
                       .epsilon(1e-12));
  }
}

TEST_CASE("random partitions never beat the query-budget bound") {
  const NoiseModel noise(0.995, 20);
  const int block = alpha_b(noise);
  const long long budget = 3LL * block;
  const double bound = total_qfi_bound(budget, noise);
  RandomStream stream(4242, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    long long remaining = budget;
    double total = 0.0;
    while (remaining > 0) {
      const long long draw =
          1 + static_cast<long long>(stream.next_u64() %
                                     static_cast<std::uint64_t>(remaining));
      total += quantum_fisher(AmplifiedLevel(static_cast<int>(draw)), noise);
      remaining -= draw;
    }
    CHECK(total <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("mse_lower_bound direct substitution") {
  const NoiseModel noise(0.995, 20);
  const double expected =
      (std::exp2(-19.0) + (1.0 - std::exp2(-19.0)) * 0.995) / (0.995 * 0.995);
  CHECK(mse_lower_bound(1, noise) == doctest::Approx(expected).epsilon(1e-14));
  // zero mean value leaves the bound untouched
  CHECK(mse_lower_bound(123456, noise, 0.0) ==
        doctest::Approx(mse_lower_bound(123456, noise)).epsilon(1e-15));
  CHECK(mse_lower_bound(1000000, noise, 0.5) ==
        doctest::Approx(0.75 * mse_lower_bound(1000000, noise))
            .epsilon(1e-15));
  // beyond the block level the bound is linear in the query budget
  const int block = alpha_b(noise);
  const double per_query = quantum_fisher(AmplifiedLevel(block), noise) / block;
  CHECK(mse_lower_bound(1000000, noise, 0.5) ==
        doctest::Approx(0.75 / (1e6 * per_query)).epsilon(1e-13));
}
