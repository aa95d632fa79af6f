#pragma once

// Batched likelihood kernels. The maximum-likelihood grid scans evaluate
// x*ln P1(theta) + (N-x)*ln P0(theta) over thousands of theta points per
// step; this is the toolkit's hot loop. A scalar reference kernel and an
// AVX2 variant compute it; the variant is selected once at startup from
// CPU capabilities and can be overridden.

#include <cstddef>
#include <cstdint>

namespace qmve::kernels {

enum class Backend { kScalar, kAvx2 };

// Per-record constants for one grid scan.
struct LevelTerm {
  double alpha;   // amplified level
  double eta;     // p_q^alpha under the likelihood model
  double inv_d;   // 2^-n
  bool odd;       // measurement parity
  double hits;    // observed "1" count x
  double misses;  // N - x
};

bool avx2_supported();
Backend active_backend();
// Force a backend (tests, CLI flag). Throws std::invalid_argument if the
// requested backend is not available on this machine/build.
void set_backend(Backend backend);
const char* backend_name(Backend backend);

// acc[i] += hits * ln P1(thetas[i]) + misses * ln P0(thetas[i]), with the
// probabilities clamped below at 1e-300 before the logarithm. Thetas must
// satisfy alpha*theta/2 < 2^20 (holds for every schedule this toolkit
// builds); inputs are in (0, pi).
void accumulate_log_likelihood(const LevelTerm& term, const double* thetas,
                               std::size_t count, double* acc);

// Direct entry points for the equivalence tests.
void accumulate_log_likelihood_scalar(const LevelTerm& term,
                                      const double* thetas, std::size_t count,
                                      double* acc);
#if defined(QMVE_HAVE_AVX2)
void accumulate_log_likelihood_avx2(const LevelTerm& term,
                                    const double* thetas, std::size_t count,
                                    double* acc);

namespace detail {
// 4-wide transcendental helpers exposed for accuracy tests.
void sincos4(const double in[4], double sin_out[4], double cos_out[4]);
void log4(const double in[4], double out[4]);
}  // namespace detail
#endif

}  // namespace qmve::kernels
