/**
 * @file random.hpp
 * @brief Reproducible, platform-independent random streams.
 *
 * A stream is identified by a (seed, stream_id) pair. Uniforms come from
 * SplitMix64 keyed by that pair, so draw i of a stream is a pure function of
 * (seed, stream_id, i). Normals use Box-Muller on two consecutive uniforms.
 * Substreams are derived by hashing a stage tag and up to two indices into
 * the stream id; parallel lanes each own a substream, which keeps results
 * independent of scheduling.
 */
#pragma once

#include <cstdint>

namespace cfseq {

struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// SplitMix64 output finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child stream of `parent` for (tag, a, b). Same seed, hashed stream id.
[[nodiscard]] RngSeed substream(RngSeed parent, std::uint64_t tag, std::uint64_t a = 0,
                                std::uint64_t b = 0) noexcept;

/// Stage tags used by the library when fanning a master seed out.
namespace stream_tag {
inline constexpr std::uint64_t kSimulateHidden = 1;
inline constexpr std::uint64_t kObserve = 2;
inline constexpr std::uint64_t kFilter = 3;
inline constexpr std::uint64_t kFilterInit = 4;     // (m)
inline constexpr std::uint64_t kJitter = 5;         // (t, m)
inline constexpr std::uint64_t kPropagate = 6;      // (t, m)
inline constexpr std::uint64_t kOuterResample = 7;  // (t)
inline constexpr std::uint64_t kInnerResample = 8;  // (t, m)
inline constexpr std::uint64_t kCounterfactual = 9;
inline constexpr std::uint64_t kCfTheta = 10;  // (i)
inline constexpr std::uint64_t kCfNoise = 11;  // (i)
inline constexpr std::uint64_t kGridCell = 12;  // (noise pair)
}  // namespace stream_tag

class RandomStream {
 public:
  explicit RandomStream(RngSeed seed) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cfseq
