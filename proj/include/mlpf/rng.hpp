#pragma once

#include <cmath>
#include <cstdint>

namespace mlpf::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer; full-period 64-bit mixer used for seeding and
// for deriving child stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Identifier of a reproducible random stream. Child keys are derived by
/// hashing, so every (seed, path-of-tags) pair names the same stream on
/// every run, and introducing new sibling tags never perturbs existing
/// streams.
struct StreamKey {
  std::uint64_t value = 0;

  StreamKey child(std::uint64_t word) const {
    return StreamKey{mix64(value ^ (mix64(word) + kGolden))};
  }
};

// Tags for the named substreams used across the library. One substream
// per (level, role) so that adding levels or roles leaves the draws of
// the others untouched.
enum StreamTag : std::uint64_t {
  kTagMutation = 1,
  kTagResample = 2,
  kTagLevel = 3,
  kTagDatasetLatent = 4,
  kTagDatasetObs = 5,
  kTagReference = 6,
  kTagRateCell = 7,
  kTagBenchCell = 8,
  kTagDataset = 9,
};

// xoshiro256++ (Blackman & Vigna), seeded through SplitMix64.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) {
      sm += kGolden;
      w = mix64(sm);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// A seeded stream of uniforms and standard Gaussians. Gaussians use the
/// Marsaglia polar method with one cached spare, so the sequence depends
/// only on the seed, never on the platform's library internals. Draw
/// counts are tracked to support cost accounting in tests.
class GaussianStream {
 public:
  explicit GaussianStream(StreamKey key) : engine_(key.value) {}

  double uniform() { return (engine_.next() >> 11) * 0x1.0p-53; }

  double normal() {
    ++normal_count_;
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    has_spare_ = true;
    return v1 * f;
  }

  std::uint64_t normals_drawn() const { return normal_count_; }

 private:
  Xoshiro256pp engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t normal_count_ = 0;
};

}  // namespace mlpf::rng
