#include "qmve/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmve::kernels {

namespace {

Backend detect_backend() {
  return avx2_supported() ? Backend::kAvx2 : Backend::kScalar;
}

Backend g_backend = detect_backend();

}  // namespace

bool avx2_supported() {
#if defined(QMVE_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend backend) {
  if (backend == Backend::kAvx2 && !avx2_supported()) {
    throw std::invalid_argument("kernels: AVX2 backend not available");
  }
  g_backend = backend;
}

const char* backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

void accumulate_log_likelihood_scalar(const LevelTerm& term,
                                      const double* thetas, std::size_t count,
                                      double* acc) {
  const double half_alpha = 0.5 * term.alpha;
  const double eta = term.eta;
  const double one_m_eta = 1.0 - eta;
  // Outcome probabilities in the cancellation-free split form; see
  // qmve::prob_pair.
  const double base_one =
      term.odd ? 0.5 * one_m_eta : one_m_eta * (1.0 - term.inv_d);
  const double base_zero = term.odd ? 0.5 * one_m_eta : one_m_eta * term.inv_d;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = half_alpha * thetas[i];
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double p1 = std::max(base_one + eta * (s * s), 1e-300);
    const double p0 = std::max(base_zero + eta * (c * c), 1e-300);
    acc[i] += term.hits * std::log(p1) + term.misses * std::log(p0);
  }
}

void accumulate_log_likelihood(const LevelTerm& term, const double* thetas,
                               std::size_t count, double* acc) {
#if defined(QMVE_HAVE_AVX2)
  if (g_backend == Backend::kAvx2) {
    accumulate_log_likelihood_avx2(term, thetas, count, acc);
    return;
  }
#endif
  accumulate_log_likelihood_scalar(term, thetas, count, acc);
}

}  // namespace qmve::kernels
