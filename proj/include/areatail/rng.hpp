#pragma once

#include <cstdint>

namespace areatail {

// Counter-derived random stream: the state for excursion i is obtained by
// mixing (seed, i) through SplitMix64, so sample i is the same no matter
// which worker draws it or in which order.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t stream_index) {
    state_ = mix(seed ^ mix(stream_index + 0x9e3779b97f4a7c15ULL));
    // burn one value so that streams with small seeds decorrelate
    (void)next_u64();
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform on the open interval (0,1); never returns 0 or 1
  double next_u01() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

}  // namespace areatail
