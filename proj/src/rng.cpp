#include "qmve/rng.hpp"

namespace qmve {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output mixing (Stafford variant 13).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Two mixing rounds place streams at well-separated counter offsets.
  state_ = mix64(seed + kGolden * (stream_id + 1));
  state_ = mix64(state_ ^ 0xA3C59AC2F1E4B8D7ULL);
}

std::uint64_t RandomStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RandomStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

long long sample_binomial(RandomStream& stream, long long n, double p) {
  if (n < 1) {
    throw std::invalid_argument("sample_binomial: N must be >= 1");
  }
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::invalid_argument("sample_binomial: p must be in [0, 1]");
  }
  long long hits = 0;
  for (long long i = 0; i < n; ++i) {
    if (stream.next_uniform() < p) {
      ++hits;
    }
  }
  return hits;
}

long long sample_step(RandomStream& stream, AmplifiedLevel level,
                      double theta_true, const NoiseModel& noise,
                      long long shots) {
  return sample_binomial(stream, shots, prob_one(level, theta_true, noise));
}

}  // namespace qmve
