#pragma once

#include <cstdint>
#include <stdexcept>

#include "qmve/model.hpp"
#include "qmve/types.hpp"

namespace qmve {

// Deterministic, splittable random stream. The generator is a SplitMix64
// counter sequence whose starting point is derived from (seed, stream_id),
// so identical (seed, stream_id, draw order) reproduces bit-identical
// output on every platform, and distinct stream_ids give statistically
// independent streams. Not cryptographic.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform double in [0, 1), 53 random bits.
  double next_uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
};

// Exact binomial draw: counts N uniform variates below p, consuming
// exactly N draws from the stream. O(N); the shot counts in this toolkit
// stay small enough that no large-N method is needed.
long long sample_binomial(RandomStream& stream, long long n, double p);

// One adaptive step's outcome count: Bin(N, prob_one(level, theta, noise)).
long long sample_step(RandomStream& stream, AmplifiedLevel level,
                      double theta_true, const NoiseModel& noise,
                      long long shots);

}  // namespace qmve
