#include "qokd/extraction.hpp"

#include <algorithm>
#include <stdexcept>

#include "qokd/analytics.hpp"
#include "qokd/combinatorics.hpp"

namespace qokd {
namespace {

void write_u64_be(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void write_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    const std::uint8_t* p = take(8);
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
  }
  std::vector<std::uint8_t> blob(std::size_t len) {
    const std::uint8_t* p = take(len);
    return {p, p + len};
  }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  const std::uint8_t* take(std::size_t len) {
    if (bytes_.size() - pos_ < len) {
      throw std::invalid_argument("truncated key serialization");
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += len;
    return p;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

// Calls fn(j, indices) for each of the scheme's N definitions, reusing one
// index buffer; the generalized path advances a colex enumerator instead of
// unranking every subset.
template <typename Fn>
void for_each_definition(const ExtractionScheme& scheme, Fn&& fn) {
  std::vector<std::uint64_t> indices(scheme.k);
  if (scheme.kind == ExtractionScheme::Kind::Generalized) {
    std::vector<std::uint32_t> subset(scheme.k);
    for (std::uint32_t i = 0; i < scheme.k; ++i) subset[i] = i;
    for (std::uint64_t j = 0; j < scheme.n; ++j) {
      std::copy(subset.begin(), subset.end(), indices.begin());
      fn(j, indices);
      if (j + 1 < scheme.n) colex_successor(subset);
    }
    return;
  }
  for (std::uint64_t j = 0; j < scheme.n; ++j) {
    for (std::uint32_t t = 0; t < scheme.k; ++t) {
      indices[t] = scheme.kind == ExtractionScheme::Kind::Original
                       ? j * scheme.k + t
                       : (j + t) % scheme.n;
    }
    fn(j, indices);
  }
}

}  // namespace

ExtractionScheme ExtractionScheme::original(std::uint64_t n, std::uint32_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  return {Kind::Original, n, k, 0};
}

ExtractionScheme ExtractionScheme::modified(std::uint64_t n, std::uint32_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (k > n) {
    throw std::invalid_argument("circular windows need k <= n");
  }
  return {Kind::Modified, n, k, 0};
}

ExtractionScheme ExtractionScheme::generalized(std::uint64_t n, std::uint32_t k,
                                               std::uint64_t m) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (m < k || binom_saturating(m, k) < n) {
    throw std::invalid_argument("pool too small: binom(m, k) < n");
  }
  return {Kind::Generalized, n, k, m};
}

std::uint64_t ExtractionScheme::raw_length() const {
  switch (kind) {
    case Kind::Original: return n * k;
    case Kind::Modified: return n;
    case Kind::Generalized: return m;
  }
  throw std::logic_error("unreachable");
}

std::string ExtractionScheme::name() const {
  switch (kind) {
    case Kind::Original: return "original";
    case Kind::Modified: return "modified";
    case Kind::Generalized: return "generalized";
  }
  throw std::logic_error("unreachable");
}

KeyBitDefinition key_bit_definition(const ExtractionScheme& scheme,
                                    std::uint64_t j) {
  if (j >= scheme.n) throw std::invalid_argument("key index out of range");
  KeyBitDefinition def;
  def.key_index = j;
  def.qubit_indices.resize(scheme.k);
  switch (scheme.kind) {
    case ExtractionScheme::Kind::Original:
      for (std::uint32_t t = 0; t < scheme.k; ++t) {
        def.qubit_indices[t] = j * scheme.k + t;
      }
      break;
    case ExtractionScheme::Kind::Modified:
      for (std::uint32_t t = 0; t < scheme.k; ++t) {
        def.qubit_indices[t] = (j + t) % scheme.n;
      }
      break;
    case ExtractionScheme::Kind::Generalized: {
      auto subset = colex_unrank(j, scheme.k);
      std::copy(subset.begin(), subset.end(), def.qubit_indices.begin());
      break;
    }
  }
  return def;
}

ObliviousKeyView extract_alice(const BitString& conclusive,
                               const BitString& alice_bits,
                               const ExtractionScheme& scheme,
                               const ExtractOptions& opts) {
  if (conclusive.size() != scheme.raw_length() ||
      alice_bits.size() != scheme.raw_length()) {
    throw std::invalid_argument("raw length does not match scheme");
  }
  ObliviousKeyView key;
  key.n = scheme.n;
  key.bob_defined = false;
  key.bob_key = BitString(scheme.n);
  if (opts.with_guesses) key.alice_guesses.emplace();

  for_each_definition(scheme, [&](std::uint64_t j,
                                  const std::vector<std::uint64_t>& indices) {
    bool alice_bit = false;
    std::uint32_t inconclusive = 0;
    for (std::uint64_t idx : indices) {
      alice_bit ^= alice_bits.get(idx);
      inconclusive += !conclusive.get(idx);
    }
    if (inconclusive == 0) {
      key.alice_known.emplace(j, static_cast<std::uint8_t>(alice_bit));
    } else if (opts.with_guesses) {
      key.alice_guesses->emplace(
          j, AliceGuess{static_cast<std::uint8_t>(alice_bit),
                        guess_prob_group(inconclusive)});
    }
  });
  return key;
}

BitString extract_bob_key(const BitString& bob_bits,
                          const ExtractionScheme& scheme) {
  if (bob_bits.size() != scheme.raw_length()) {
    throw std::invalid_argument("raw length does not match scheme");
  }
  BitString key(scheme.n);
  for_each_definition(scheme, [&](std::uint64_t j,
                                  const std::vector<std::uint64_t>& indices) {
    bool bit = false;
    for (std::uint64_t idx : indices) bit ^= bob_bits.get(idx);
    key.set(j, bit);
  });
  return key;
}

ObliviousKeyView extract(const RawKeyTranscript& t,
                         const ExtractionScheme& scheme,
                         const ExtractOptions& opts) {
  if (t.length() != scheme.raw_length()) {
    throw std::invalid_argument("transcript length does not match scheme");
  }
  ObliviousKeyView key =
      extract_alice(t.conclusive_mask(), t.alice_bits(), scheme, opts);
  if (t.bob_defined()) {
    key.bob_defined = true;
    key.bob_key = extract_bob_key(t.bob_bits(), scheme);
  }
  return key;
}

std::uint64_t count_known(const BitString& conclusive,
                          const ExtractionScheme& scheme) {
  if (conclusive.size() != scheme.raw_length()) {
    throw std::invalid_argument("mask length does not match scheme");
  }
  std::uint64_t count = 0;
  for_each_definition(scheme, [&](std::uint64_t,
                                  const std::vector<std::uint64_t>& indices) {
    for (std::uint64_t idx : indices) {
      if (!conclusive.get(idx)) return;
    }
    ++count;
  });
  return count;
}

std::uint64_t count_known_full_space(const BitString& conclusive,
                                     std::uint32_t k) {
  std::uint64_t m = conclusive.size();
  if (k < 1 || k > m) throw std::invalid_argument("need 1 <= k <= pool size");
  std::uint64_t total = binom_saturating(m, k);
  std::vector<std::uint32_t> subset(k);
  for (std::uint32_t i = 0; i < k; ++i) subset[i] = i;
  std::uint64_t count = 0;
  for (std::uint64_t j = 0; j < total; ++j) {
    bool all = true;
    for (std::uint32_t e : subset) {
      if (!conclusive.get(e)) {
        all = false;
        break;
      }
    }
    count += all;
    if (j + 1 < total) colex_successor(subset);
  }
  return count;
}

std::vector<std::uint64_t> knowable_adjacent_parities(
    const BitString& conclusive, std::uint32_t k) {
  std::uint64_t n = conclusive.size();
  if (k < 1 || k > n) throw std::invalid_argument("need 1 <= k <= n");
  std::vector<std::uint64_t> result;
  for (std::uint64_t j = 0; j < n; ++j) {
    if (conclusive.get(j) && conclusive.get((j + k) % n)) {
      result.push_back(j);
    }
  }
  return result;
}

std::uint64_t count_knowable_pair_parities(const BitString& conclusive,
                                           const ExtractionScheme& scheme) {
  if (scheme.kind != ExtractionScheme::Kind::Generalized) {
    throw std::invalid_argument("pair-parity counting is for the "
                                "generalized scheme");
  }
  if (conclusive.size() != scheme.raw_length()) {
    throw std::invalid_argument("mask length does not match scheme");
  }
  std::vector<std::vector<std::uint64_t>> defs;
  defs.reserve(scheme.n);
  for_each_definition(scheme, [&](std::uint64_t,
                                  const std::vector<std::uint64_t>& indices) {
    defs.push_back(indices);
  });
  std::uint64_t count = 0;
  std::vector<std::uint64_t> sym;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    for (std::size_t j = i + 1; j < defs.size(); ++j) {
      sym.clear();
      std::set_symmetric_difference(defs[i].begin(), defs[i].end(),
                                    defs[j].begin(), defs[j].end(),
                                    std::back_inserter(sym));
      bool all = true;
      for (std::uint64_t idx : sym) {
        if (!conclusive.get(idx)) {
          all = false;
          break;
        }
      }
      count += all;
    }
  }
  return count;
}

std::uint64_t min_m(std::uint64_t n, std::uint32_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  std::uint64_t m = k;
  while (binom_saturating(m, k) < n) ++m;
  return m;
}

ObliviousKeyView dilute(const std::vector<ObliviousKeyView>& keys,
                        const std::vector<std::uint64_t>& shifts) {
  if (keys.empty() || keys.size() != shifts.size()) {
    throw std::invalid_argument("need one shift per key and at least one key");
  }
  std::uint64_t n = keys[0].n;
  for (const auto& key : keys) {
    if (key.n != n) throw std::invalid_argument("key lengths differ");
  }

  ObliviousKeyView out;
  out.n = n;
  out.bob_defined = std::all_of(keys.begin(), keys.end(),
                                [](const auto& k) { return k.bob_defined; });
  out.bob_key = BitString(n);
  if (out.bob_defined) {
    for (std::uint64_t j = 0; j < n; ++j) {
      bool bit = false;
      for (std::size_t m = 0; m < keys.size(); ++m) {
        bit ^= keys[m].bob_key.get((j + shifts[m]) % n);
      }
      out.bob_key.set(j, bit);
    }
  }

  // Candidates come from the first key's known set pulled back by its shift;
  // each must be known in every other component as well.
  for (const auto& [idx0, bit0] : keys[0].alice_known) {
    std::uint64_t j = (idx0 + n - shifts[0] % n) % n;
    std::uint8_t bit = bit0;
    bool known_everywhere = true;
    for (std::size_t m = 1; m < keys.size(); ++m) {
      auto it = keys[m].alice_known.find((j + shifts[m]) % n);
      if (it == keys[m].alice_known.end()) {
        known_everywhere = false;
        break;
      }
      bit ^= it->second;
    }
    if (known_everywhere) out.alice_known.emplace(j, bit);
  }

  // Guesses combine only when every component carries them: the XOR of
  // independent guesses with accuracies c_m is correct with probability
  // (1 + prod(2c_m - 1)) / 2.
  bool all_guesses = std::all_of(keys.begin(), keys.end(), [](const auto& k) {
    return k.alice_guesses.has_value();
  });
  if (all_guesses) {
    out.alice_guesses.emplace();
    for (std::uint64_t j = 0; j < n; ++j) {
      if (out.alice_known.count(j)) continue;
      bool bit = false;
      double margin = 1.0;
      bool available = true;
      for (std::size_t m = 0; m < keys.size(); ++m) {
        std::uint64_t src = (j + shifts[m]) % n;
        if (auto it = keys[m].alice_known.find(src);
            it != keys[m].alice_known.end()) {
          bit ^= it->second != 0;
        } else if (auto gt = keys[m].alice_guesses->find(src);
                   gt != keys[m].alice_guesses->end()) {
          bit ^= gt->second.bit != 0;
          margin *= 2.0 * gt->second.confidence - 1.0;
        } else {
          available = false;
          break;
        }
      }
      if (available) {
        out.alice_guesses->emplace(
            j, AliceGuess{static_cast<std::uint8_t>(bit),
                          0.5 * (1.0 + margin)});
      }
    }
  }
  return out;
}

std::uint64_t overlap_count(const std::vector<std::uint64_t>& known_a,
                            const std::vector<std::uint64_t>& known_b,
                            std::uint64_t shift, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  std::vector<std::uint8_t> in_b(n, 0);
  for (std::uint64_t b : known_b) in_b.at(b) = 1;
  std::uint64_t count = 0;
  for (std::uint64_t a : known_a) count += in_b.at((a + shift) % n);
  return count;
}

std::pair<std::uint64_t, std::uint64_t> optimal_shift(
    const std::vector<std::uint64_t>& known_a,
    const std::vector<std::uint64_t>& known_b, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  // Every surviving pair (a, b) pins the shift to (b - a) mod n, so the best
  // shift is the mode of the pairwise-difference multiset.
  std::vector<std::uint64_t> histogram(n, 0);
  for (std::uint64_t a : known_a) {
    if (a >= n) throw std::invalid_argument("known index out of range");
    for (std::uint64_t b : known_b) {
      if (b >= n) throw std::invalid_argument("known index out of range");
      ++histogram[(b + n - a % n) % n];
    }
  }
  std::uint64_t best_shift = 0;
  std::uint64_t best_count = histogram[0];
  for (std::uint64_t s = 1; s < n; ++s) {
    if (histogram[s] > best_count) {
      best_count = histogram[s];
      best_shift = s;
    }
  }
  return {best_shift, best_count};
}

std::vector<std::uint8_t> serialize_key(const ObliviousKeyView& key,
                                        const ExtractionScheme& scheme) {
  if (key.n != scheme.n) {
    throw std::invalid_argument("key length does not match scheme");
  }
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(scheme.kind));
  write_u64_be(out, scheme.n);
  write_u32_be(out, scheme.k);
  write_u64_be(out, scheme.m);
  out.push_back(key.bob_defined ? 1 : 0);
  const auto& bob = key.bob_key.bytes();
  out.insert(out.end(), bob.begin(), bob.end());
  write_u64_be(out, key.alice_known.size());
  for (const auto& [idx, bit] : key.alice_known) {
    write_u64_be(out, idx);
    out.push_back(bit);
  }
  return out;
}

std::pair<ObliviousKeyView, ExtractionScheme> deserialize_key(
    const std::vector<std::uint8_t>& bytes) {
  ByteReader reader(bytes);
  std::uint8_t tag = reader.u8();
  std::uint64_t n = reader.u64();
  std::uint32_t k = reader.u32();
  std::uint64_t m = reader.u64();
  ExtractionScheme scheme;
  switch (tag) {
    case 0: scheme = ExtractionScheme::original(n, k); break;
    case 1: scheme = ExtractionScheme::modified(n, k); break;
    case 2: scheme = ExtractionScheme::generalized(n, k, m); break;
    default: throw std::invalid_argument("unknown scheme tag");
  }
  ObliviousKeyView key;
  key.n = n;
  key.bob_defined = reader.u8() != 0;
  key.bob_key = BitString::from_bytes(reader.blob((n + 7) / 8), n);
  std::uint64_t count = reader.u64();
  std::uint64_t prev = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t idx = reader.u64();
    std::uint8_t bit = reader.u8();
    if (idx >= n || bit > 1 || (i > 0 && idx <= prev)) {
      throw std::invalid_argument("malformed known-set entry");
    }
    prev = idx;
    key.alice_known.emplace(idx, bit);
  }
  if (!reader.exhausted()) {
    throw std::invalid_argument("trailing bytes in key serialization");
  }
  return {std::move(key), scheme};
}

}  // namespace qokd
