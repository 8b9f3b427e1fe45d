#pragma once

// Stateless counter-based random numbers. A draw is a pure function of
// (key, stream, index, attempt), so sample i of a stream never depends on how
// many samples were requested: enlarging a sample extends it.

#include <cstdint>

namespace plantmf {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  // SplitMix64 finalizer.
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  constexpr std::uint64_t key() const { return key_; }

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t index,
                               std::uint64_t attempt = 0) const {
    std::uint64_t h = mix64(key_ ^ (stream * 0xd1b54a32d192ed03ULL));
    h = mix64(h ^ (index * 0xaef17502108ef2d9ULL));
    h = mix64(h ^ (attempt * 0xf58c4a3d5e7b9a1bULL));
    return h;
  }

  // Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t stream, std::uint64_t index,
                           std::uint64_t attempt = 0) const {
    return (static_cast<double>(bits(stream, index, attempt) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Independent generator for a named sub-stream (cloud, training set, ...).
  constexpr CounterRng substream(std::uint64_t tag) const {
    return CounterRng(key_ ^ mix64(tag * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
  }

 private:
  std::uint64_t key_;
};

}  // namespace plantmf
