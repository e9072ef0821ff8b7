#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <stdexcept>
#include <vector>

#include "qokd/bits.hpp"
#include "qokd/random.hpp"

using namespace qokd;

TEST_CASE("bitstring get/set round trip with packed layout") {
  BitString b(12);
  CHECK(b.size() == 12);
  CHECK(b.popcount() == 0);
  b.set(0, true);
  b.set(2, true);
  b.set(3, true);
  b.set(11, true);
  CHECK(b.get(0));
  CHECK_FALSE(b.get(1));
  CHECK(b.get(2));
  CHECK(b.get(3));
  CHECK(b.get(11));
  CHECK(b.popcount() == 4);
  // Little-endian bit order within each byte.
  CHECK(b.bytes() == std::vector<std::uint8_t>{0x0d, 0x08});
  CHECK(b.ones() == std::vector<std::uint64_t>{0, 2, 3, 11});
  b.set(2, false);
  CHECK_FALSE(b.get(2));
  CHECK(b.popcount() == 3);
}

TEST_CASE("filled construction masks the tail") {
  BitString b(10, true);
  CHECK(b.popcount() == 10);
  CHECK(b.bytes() == std::vector<std::uint8_t>{0xff, 0x03});
}

TEST_CASE("from_bytes validates size and masks tail bits") {
  BitString b = BitString::from_bytes({0xff, 0xff}, 12);
  CHECK(b.size() == 12);
  CHECK(b.popcount() == 12);  // top 4 bits of the second byte dropped
  CHECK(b.bytes()[1] == 0x0f);
  CHECK_THROWS_AS(BitString::from_bytes({0xff}, 12), std::invalid_argument);
  CHECK_THROWS_AS(BitString::from_bytes({0xff, 0xff, 0x00}, 12),
                  std::invalid_argument);
}

TEST_CASE("xor is pointwise and rejects length mismatch") {
  BitString a(9), b(9);
  a.set(1, true);
  a.set(4, true);
  b.set(4, true);
  b.set(8, true);
  BitString c = a ^ b;
  CHECK(c.ones() == std::vector<std::uint64_t>{1, 8});
  CHECK((c ^ b) == a);  // xor is its own inverse
  BitString shorter(8);
  CHECK_THROWS_AS(a ^= shorter, std::invalid_argument);
}

TEST_CASE("base64 matches the reference vectors") {
  auto enc = [](const char* s) {
    return base64_encode(std::vector<std::uint8_t>(s, s + std::strlen(s)));
  };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foob") == "Zm9vYg==");
  CHECK(enc("fooba") == "Zm9vYmE=");
  CHECK(enc("foobar") == "Zm9vYmFy");
}

TEST_CASE("base64 decode inverts encode and rejects malformed input") {
  std::vector<std::uint8_t> data;
  for (int i = 0; i < 97; ++i) data.push_back(static_cast<std::uint8_t>(i * 37));
  CHECK(base64_decode(base64_encode(data)) == data);
  CHECK(base64_decode("") == std::vector<std::uint8_t>{});
  CHECK_THROWS_AS(base64_decode("Zg"), std::invalid_argument);       // bad length
  CHECK_THROWS_AS(base64_decode("Z!=="), std::invalid_argument);     // bad char
  CHECK_THROWS_AS(base64_decode("=AAA"), std::invalid_argument);     // pad first
  CHECK_THROWS_AS(base64_decode("Zg==Zg=="), std::invalid_argument); // pad mid
}

TEST_CASE("bit strings round-trip through base64 with explicit length") {
  BitString b(4);
  b.set(0, true);
  b.set(2, true);
  b.set(3, true);
  CHECK(bits_to_base64(b) == "DQ==");  // 0b00001101
  CHECK(bits_from_base64("DQ==", 4) == b);
  CHECK_THROWS_AS(bits_from_base64("DQ==", 42), std::invalid_argument);

  RandomStream rng(99);
  BitString big = BitString::random(1234, rng);
  CHECK(bits_from_base64(bits_to_base64(big), 1234) == big);
}

TEST_CASE("random bit strings are seed-deterministic and roughly balanced") {
  RandomStream r1(7), r2(7), r3(8);
  BitString a = BitString::random(4096, r1);
  BitString b = BitString::random(4096, r2);
  BitString c = BitString::random(4096, r3);
  CHECK(a == b);
  CHECK(a != c);
  // 6 sigma around 2048 for a fair coin.
  CHECK(a.popcount() > 1856);
  CHECK(a.popcount() < 2240);
}

TEST_CASE("derived seed streams are independent of each other") {
  RandomStream alice = RandomStream::derive(42, "alice");
  RandomStream bob = RandomStream::derive(42, "bob");
  RandomStream alice_again = RandomStream::derive(42, "alice");
  CHECK(alice.next_u64() != bob.next_u64());
  RandomStream alice2 = RandomStream::derive(42, "alice");
  CHECK(alice_again.next_u64() == alice2.next_u64());
  // Indexed derivation separates parallel substreams.
  CHECK(derive_seed(42, "run", 0) != derive_seed(42, "run", 1));
  CHECK(derive_seed(42, "run", 0) != derive_seed(43, "run", 0));
}

TEST_CASE("below() is uniform enough and rejects an empty range") {
  RandomStream rng(5);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 10000; ++i) ++counts[rng.below(5)];
  for (int c : counts) {
    CHECK(c > 1700);
    CHECK(c < 2300);
  }
  CHECK_THROWS_AS(rng.below(0), std::invalid_argument);
}
