// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>
#include <vector>

#include "sgdlab/rng.hpp"

using namespace sgdlab;

// Known-answer vectors from the Random123 distribution.
TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and seekable") {
  Stream a(7, 3, StreamPurpose::kChain), b(7, 3, StreamPurpose::kChain);
  std::vector<std::uint64_t> xs;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(a.next_u64());
    CHECK(xs.back() == b.next_u64());
  }
  Stream c(7, 3, StreamPurpose::kChain);
  c.seek(57);
  CHECK(c.position() == 57);
  CHECK(c.next_u64() == xs[57]);
  c.seek(4);
  CHECK(c.next_u64() == xs[4]);
}

TEST_CASE("seed, replica, purpose and split give distinct streams") {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {1, 2})
    for (std::uint64_t rep : {0, 1})
      for (auto p : {StreamPurpose::kChain, StreamPurpose::kBurnIn, StreamPurpose::kStart})
        first.insert(Stream(seed, rep, p).next_u64());
  CHECK(first.size() == 12);
  const Stream root(1, 0, StreamPurpose::kMember);
  Stream s0 = root.split(0), s1 = root.split(1), s0b = root.split(0);
  const auto x0 = s0.next_u64();
  CHECK(x0 != s1.next_u64());
  CHECK(x0 == s0b.next_u64());
}

TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
  Stream s(11, 0, StreamPurpose::kTest);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.005));
}
