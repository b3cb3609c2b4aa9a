#pragma once

#include <cstdint>
#include <random>

namespace lowrank {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Names one independent random stream: every draw is a function of
/// (seed, stream_id, substream) only, so trials never share draw order.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::mt19937_64 engine(std::uint64_t substream = 0) const {
    return std::mt19937_64(mix64(mix64(mix64(seed) ^ stream_id) ^ substream));
  }

  RngStream child(std::uint64_t id) const { return RngStream{mix64(seed ^ mix64(stream_id)), id}; }
};

/// Substream tags used by the generators, so that e.g. the sensing matrices
/// do not depend on how many draws the ground truth consumed.
namespace substream {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kSampling = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kInit = 4;
}  // namespace substream

}  // namespace lowrank
