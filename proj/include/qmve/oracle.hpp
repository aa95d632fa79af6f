#pragma once

// First-principles validation backend: explicit density-matrix simulation
// of the amplified-and-depolarized states for up to four qubits. Every
// closed-form probability and Fisher quantity in the model is checked
// against matrix traces, finite differences, and an eigendecomposition of
// the symmetric logarithmic derivative.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qmve/model.hpp"
#include "qmve/rng.hpp"
#include "qmve/types.hpp"

namespace qmve::oracle {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// A concrete estimation instance: state-preparation unitary A, Hermitian
// unitary observable O with eigenvalues +-1, and the derived rotation
// angle theta* = arccos(<0|A^dag O A|0>).
struct SmallSystem {
  int n_qubits = 1;
  Matrix prep;        // A
  Matrix observable;  // O
  double theta_star = 0.0;

  long dim() const { return prep.rows(); }

  // Haar-random preparation (QR of a seeded complex Gaussian matrix) with a
  // random non-identity Pauli-string observable. Instances whose mean value
  // lies within 1e-3 of +-1 are rejected and redrawn: the two-dimensional
  // invariant subspace degenerates at an eigenstate.
  static SmallSystem random(int n_qubits, std::uint64_t seed);
  // Caller-supplied operators; validates unitarity, O^2 = I, O = O^dag and
  // the non-eigenstate condition.
  static SmallSystem make(int n_qubits, Matrix prep, Matrix observable);
};

// Amplification operator Q = A (2|0><0| - I) A^dag O. Restricted to the
// invariant subspace spanned by A|0> and O A|0> it is a rotation by
// theta*.
Matrix build_grover(const SmallSystem& sys);

// Depolarized output state of the level-alpha circuit, with the channel
// applied after each of the alpha oracle calls along the circuit.
Matrix amplified_state(const SmallSystem& sys, AmplifiedLevel level,
                       const NoiseModel& noise);

// Probability of the "1" outcome, by measurement operator trace; matches
// prob_one to 1e-10 over the validation grid.
double oracle_prob_one(const SmallSystem& sys, AmplifiedLevel level,
                       const NoiseModel& noise);

// Outcome probabilities of the three-valued subspace measurement
// {|0><0|, A^dag |A_perp><A_perp| A, rest}; even levels only.
std::array<double, 3> oracle_three_valued_probs(const SmallSystem& sys,
                                                AmplifiedLevel level,
                                                const NoiseModel& noise);

// Fisher information of those three outcomes by central finite differences
// over theta, re-preparing the circuit at perturbed angles with the
// measurement fixed.
double oracle_three_valued_fisher(const SmallSystem& sys, AmplifiedLevel level,
                                  const NoiseModel& noise);

// Quantum Fisher information from the spectral form of the symmetric
// logarithmic derivative, with d(rho)/d(theta) from Richardson-extrapolated
// central differences.
double oracle_qfi(const SmallSystem& sys, AmplifiedLevel level,
                  const NoiseModel& noise);

// A copy of the instance re-prepared at a different target angle: the
// preparation is rotated inside the invariant subspace so that
// <A'|O|A'> = cos(theta_new) while the measurement bases stay fixed.
SmallSystem reprepare(const SmallSystem& sys, double theta_new);

struct VerificationReport {
  int instances = 0;
  int checks = 0;
  int failures = 0;
  double worst_prob_error = 0.0;        // |oracle - closed form|
  double worst_qfi_rel_error = 0.0;     // relative
  double worst_three_valued_rel = 0.0;  // relative
  std::vector<std::string> failure_lines;
  bool passed() const { return failures == 0; }
};

// Full validation grid: for each qubit count and seed, checks prob_one
// (tolerance 1e-10) for alpha in `alphas` and every p_q in `p_list`, the
// quantum Fisher information (relative 1e-4), and the three-valued Fisher
// information (relative 1e-5) on even levels.
VerificationReport verify_grid(const std::vector<int>& qubit_counts,
                               int seeds_per_count,
                               const std::vector<int>& alphas,
                               const std::vector<double>& p_list,
                               std::uint64_t base_seed);

}  // namespace qmve::oracle
