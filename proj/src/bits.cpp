#include "qokd/bits.hpp"

#include <bit>
#include <stdexcept>

namespace qokd {

BitString BitString::from_bytes(std::vector<std::uint8_t> bytes,
                                std::uint64_t n) {
  if (bytes.size() != (n + 7) / 8)
    throw std::invalid_argument("BitString::from_bytes: size mismatch");
  BitString b;
  b.bytes_ = std::move(bytes);
  b.size_ = n;
  b.trim_tail();
  return b;
}

void BitString::trim_tail() {
  if (size_ % 8 != 0 && !bytes_.empty())
    bytes_.back() &= static_cast<std::uint8_t>((1u << (size_ % 8)) - 1);
}

std::uint64_t BitString::popcount() const {
  std::uint64_t n = 0;
  for (std::uint8_t b : bytes_) n += std::popcount(b);
  return n;
}

BitString& BitString::operator^=(const BitString& other) {
  if (size_ != other.size_)
    throw std::invalid_argument("BitString: XOR of different lengths");
  for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= other.bytes_[i];
  return *this;
}

std::vector<std::uint64_t> BitString::ones() const {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < size_; ++i)
    if (get(i)) out.push_back(i);
  return out;
}

namespace {
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8) |
                            data[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0)
    throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2)
          throw std::invalid_argument("base64: misplaced padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw std::invalid_argument("base64: data after padding");
      const int d = b64_value(c);
      if (d < 0) throw std::invalid_argument("base64: bad character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::string bits_to_base64(const BitString& bits) {
  return base64_encode(bits.bytes());
}

BitString bits_from_base64(std::string_view text, std::uint64_t n) {
  return BitString::from_bytes(base64_decode(text), n);
}

}  // namespace qokd
