#include "cfseq/random.hpp"

#include <cmath>
#include <numbers>

namespace cfseq {

RngSeed substream(RngSeed parent, std::uint64_t tag, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = mix64(parent.stream_id ^ 0x6A09E667F3BCC908ULL);
  h = mix64(h ^ tag);
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x3C6EF372FE94F82BULL));
  return RngSeed{parent.seed, h};
}

RandomStream::RandomStream(RngSeed seed) noexcept
    : key_(mix64(mix64(seed.seed) ^ (seed.stream_id * 0xD1B54A32D192ED03ULL + 1))) {}

std::uint64_t RandomStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double RandomStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

}  // namespace cfseq
