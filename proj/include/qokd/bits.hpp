#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qokd/random.hpp"

namespace qokd {

// Packed bit string. Bit j lives at byte j/8, bit position j%8 (little-endian
// bit order), which is also the byte layout used on the wire.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::uint64_t n, bool fill = false)
      : bytes_((n + 7) / 8, fill ? 0xff : 0x00), size_(n) {
    trim_tail();
  }

  static BitString random(std::uint64_t n, RandomStream& rng) {
    BitString b(n);
    for (std::uint64_t i = 0; i < n; ++i) b.set(i, rng.bernoulli(0.5));
    return b;
  }

  static BitString from_bytes(std::vector<std::uint8_t> bytes, std::uint64_t n);

  std::uint64_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::uint64_t i) const {
    return (bytes_[i >> 3] >> (i & 7)) & 1;
  }

  void set(std::uint64_t i, bool v) {
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (i & 7));
    if (v)
      bytes_[i >> 3] |= mask;
    else
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
  }

  std::uint64_t popcount() const;

  BitString& operator^=(const BitString& other);
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  bool operator==(const BitString&) const = default;

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  // Indices of set bits, ascending.
  std::vector<std::uint64_t> ones() const;

 private:
  void trim_tail();

  std::vector<std::uint8_t> bytes_;
  std::uint64_t size_ = 0;
};

std::string base64_encode(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string bits_to_base64(const BitString& bits);
BitString bits_from_base64(std::string_view text, std::uint64_t n);

}  // namespace qokd
