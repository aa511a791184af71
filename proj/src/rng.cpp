// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/rng.hpp"

namespace sgdlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t replica, StreamPurpose purpose)
    : key_(splitmix64(splitmix64(splitmix64(seed) ^ replica) ^
                      static_cast<std::uint64_t>(purpose))) {}

Stream Stream::split(std::uint64_t child) const {
  return Stream(splitmix64(key_ ^ splitmix64(child + 0x632BE59BD9B4E019ull)));
}

void Stream::seek(std::uint64_t position) {
  position_ = position & ~std::uint64_t{1};
  lane_ = 2;
  if (position & 1u) {
    refill();
    lane_ = 1;
    position_ = position;
  }
}

void Stream::refill() {
  // Each block yields two 64-bit outputs; block index = position / 2.
  const std::uint64_t block = position_ >> 1;
  const auto out = philox4x32_10(
      {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0u, 0u},
      {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  lane_ = 0;
}

std::uint64_t Stream::next_u64() {
  if (lane_ >= 2) refill();
  ++position_;
  return buffer_[lane_++];
}

}  // namespace sgdlab
