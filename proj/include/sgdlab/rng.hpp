// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sgdlab {

/// Independent randomness roles a replica can draw from.
enum class StreamPurpose : std::uint32_t {
  kChain = 1,
  kBurnIn = 2,
  kStart = 3,
  kMember = 4,
  kTest = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 keyed stream.
///
/// The key is derived from (seed, replica, purpose); the 128-bit counter is
/// the stream position, so any draw can be regenerated without replaying the
/// stream. split() derives a child key, giving a tree of independent streams.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t replica, StreamPurpose purpose);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Number of 64-bit outputs consumed so far.
  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position);

  Stream split(std::uint64_t child) const;

  std::uint64_t key() const { return key_; }

 private:
  explicit Stream(std::uint64_t key) : key_(key) {}
  void refill();

  std::uint64_t key_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
};

/// One Philox4x32-10 block for (counter, key); exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

}  // namespace sgdlab
