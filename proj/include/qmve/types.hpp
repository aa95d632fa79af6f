#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qmve {

// Global depolarization acting once per query to the state-preparation
// oracle: rho -> p_q * rho + (1 - p_q) / d * I, with d = 2^n.
struct NoiseModel {
  double p_q = 1.0;   // survival probability per oracle call, in (0, 1]
  int n_qubits = 1;

  NoiseModel() = default;
  NoiseModel(double survival, int qubits) : p_q(survival), n_qubits(qubits) {
    validate();
  }

  void validate() const {
    if (!(p_q > 0.0) || !(p_q <= 1.0)) {
      throw std::invalid_argument("NoiseModel: p_q must be in (0, 1]");
    }
    if (n_qubits < 1) {
      throw std::invalid_argument("NoiseModel: n_qubits must be >= 1");
    }
  }

  // d = 2^n as a real; exact in double precision for n <= 52.
  double dim() const { return std::exp2(static_cast<double>(n_qubits)); }
  // 1/d and 2/d; every formula below depends on d only through these.
  double inv_dim() const { return std::exp2(static_cast<double>(-n_qubits)); }
  double two_over_dim() const {
    return std::exp2(static_cast<double>(1 - n_qubits));
  }
};

// Amplified level: the number of oracle queries consumed by one
// prepare-and-measure cycle. Odd levels use the observable-projector
// measurement, even levels the |0>-projector measurement.
struct AmplifiedLevel {
  int alpha = 1;

  AmplifiedLevel() = default;
  explicit AmplifiedLevel(int a) : alpha(a) {
    if (alpha < 1) {
      throw std::invalid_argument("AmplifiedLevel: alpha must be >= 1");
    }
  }

  bool odd() const { return (alpha & 1) != 0; }
  bool even() const { return !odd(); }
  // alpha = 2m+1 (odd) or 2m+2 (even).
  int m() const { return odd() ? (alpha - 1) / 2 : (alpha - 2) / 2; }
};

// Target of the estimation: theta in (0, pi) with mean value cos(theta).
struct TargetValue {
  double theta = 0.0;

  TargetValue() = default;
  explicit TargetValue(double t) : theta(t) {
    if (!(theta > 0.0) || !(theta < M_PI)) {
      throw std::invalid_argument("TargetValue: theta must be in (0, pi)");
    }
  }
  static TargetValue from_mean_value(double mean) {
    if (!(mean > -1.0) || !(mean < 1.0)) {
      throw std::invalid_argument("TargetValue: mean value must be in (-1, 1)");
    }
    return TargetValue(std::acos(mean));
  }

  double mean_value() const { return std::cos(theta); }
};

inline void require_theta_domain(double theta) {
  if (!(theta > 0.0) || !(theta < M_PI)) {
    throw std::invalid_argument("theta must be in (0, pi)");
  }
}

}  // namespace qmve
