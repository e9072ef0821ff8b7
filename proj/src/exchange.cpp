#include "qokd/exchange.hpp"

#include <sstream>
#include <stdexcept>

namespace qokd {
namespace {

QubitState state_from_name(const std::string& name) {
  if (name == "up") return kUp;
  if (name == "ne") return kNorthEast;
  if (name == "right") return kRight;
  if (name == "down") return kDown;
  if (name == "sw") return kSouthWest;
  if (name == "left") return kLeft;
  throw std::invalid_argument("unknown state name '" + name + "'");
}

}  // namespace

RawKeyRecord draw_honest_bob_round(std::uint64_t index, RandomStream& rng) {
  RawKeyRecord rec;
  rec.index = index;
  std::uint8_t bit = static_cast<std::uint8_t>(rng.below(2));
  Basis basis = static_cast<Basis>(bit);
  rec.bob_bit = bit;
  rec.sent = basis_states(basis)[rng.below(2)];
  QubitState decoy =
      basis_states(static_cast<Basis>(1 - bit))[rng.below(2)];
  rec.announcement = Announcement(rec.sent, decoy);
  return rec;
}

BobStrategy BobStrategy::bias(BitString plus_positions) {
  BobStrategy s;
  s.kind = Kind::Bias;
  s.plus_mask = std::move(plus_positions);
  return s;
}

BitString RawKeyTranscript::conclusive_mask() const {
  BitString mask(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].alice_verdict.conclusive) mask.set(i, true);
  }
  return mask;
}

BitString RawKeyTranscript::alice_bits() const {
  BitString bits(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    bits.set(i, records[i].alice_verdict.bit != 0);
  }
  return bits;
}

BitString RawKeyTranscript::bob_bits() const {
  BitString bits(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].bob_bit) {
      throw std::invalid_argument("transcript has undefined bob bits");
    }
    bits.set(i, *records[i].bob_bit != 0);
  }
  return bits;
}

bool RawKeyTranscript::bob_defined() const {
  for (const auto& r : records) {
    if (!r.bob_bit) return false;
  }
  return true;
}

BiasedRound biased_round(bool plus, RandomStream& rng) {
  // Each conclusiveness level has two equivalent realizations, mirror images
  // of each other; drawing uniformly between them keeps the announcement
  // distribution symmetric.
  bool alt = rng.below(2) != 0;
  if (plus) {
    return alt ? BiasedRound{kNorthEast, Announcement(kDown, kLeft)}
               : BiasedRound{kSouthWest, Announcement(kUp, kRight)};
  }
  return alt ? BiasedRound{kSouthWest, Announcement(kDown, kLeft)}
             : BiasedRound{kNorthEast, Announcement(kUp, kRight)};
}

RawKeyTranscript run_exchange(std::uint64_t n, AliceStrategy alice,
                              BobStrategy bob, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("exchange length must be >= 1");
  if (bob.kind == BobStrategy::Kind::Bias) {
    if (bob.plus_mask.size() != n) {
      throw std::invalid_argument("bias plus-mask length must equal n");
    }
    if (alice.kind == AliceStrategy::Kind::UsdIndividual) {
      throw std::invalid_argument(
          "discrimination of an announced pair is undefined when the sent "
          "state is outside it");
    }
  }

  RawKeyTranscript t;
  t.alice = alice;
  t.bob = bob;
  t.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    RawKeyRecord rec;
    if (bob.kind == BobStrategy::Kind::Honest) {
      rec = draw_honest_bob_round(i, rng);
    } else {
      rec.index = i;
      BiasedRound br = biased_round(bob.plus_mask.get(i), rng);
      rec.sent = br.sent;
      rec.announcement = br.announcement;
    }

    if (alice.kind == AliceStrategy::Kind::HonestImmediate) {
      Basis basis = static_cast<Basis>(rng.below(2));
      rec.outcome = measure(rec.sent, basis, rng);
      rec.alice_verdict = evaluate_conclusiveness(*rec.outcome, rec.announcement);
    } else {
      if (rng.bernoulli(kUsdSuccessProb)) {
        rec.alice_verdict = Conclusiveness::conclusive_bit(bit_of(rec.sent));
      } else {
        rec.alice_verdict = Conclusiveness::inconclusive_guess(0);
      }
    }
    t.records.push_back(rec);
  }
  return t;
}

double bias_conclusive_probability(QubitState sent, const Announcement& ann) {
  if (!sent.is_diagonal()) {
    throw std::invalid_argument("conclusiveness bias needs a diagonal state");
  }
  double p = 0.0;
  for (Basis basis : {Basis::UpDown, Basis::LeftRight}) {
    for (QubitState outcome : basis_states(basis)) {
      if (evaluate_conclusiveness(outcome, ann).conclusive) {
        p += 0.5 * overlap_sq(sent, outcome);
      }
    }
  }
  return p;
}

GuessAccuracyStats guess_accuracy_stats(const RawKeyTranscript& t) {
  if (t.alice.kind == AliceStrategy::Kind::UsdIndividual) {
    throw std::invalid_argument(
        "guess accuracy undefined for discrimination transcripts");
  }
  GuessAccuracyStats s;
  for (const auto& r : t.records) {
    if (!r.bob_bit) {
      throw std::invalid_argument("guess accuracy needs defined bob bits");
    }
    bool correct = r.alice_verdict.bit == *r.bob_bit;
    if (r.alice_verdict.conclusive) {
      ++s.conclusive;
      s.conclusive_correct += correct;
    } else {
      ++s.inconclusive;
      s.inconclusive_correct += correct;
    }
  }
  std::uint64_t total = s.conclusive + s.inconclusive;
  s.conclusive_fraction = total ? double(s.conclusive) / double(total) : 0.0;
  if (s.inconclusive > 0) {
    s.inconclusive_guess_accuracy =
        double(s.inconclusive_correct) / double(s.inconclusive);
  }
  return s;
}

std::string format_raw_key_lines(const RawKeyTranscript& t) {
  std::ostringstream out;
  for (const auto& r : t.records) {
    out << r.index << ' ';
    if (r.bob_bit) {
      out << int(*r.bob_bit);
    } else {
      out << '-';
    }
    out << ' ' << r.sent.name() << ' ' << r.announcement.name() << ' ';
    if (r.outcome) {
      out << r.outcome->name();
    } else {
      out << '-';
    }
    out << ' ' << (r.alice_verdict.conclusive ? 'C' : 'I')
        << int(r.alice_verdict.bit) << '\n';
  }
  return out.str();
}

RawKeyTranscript parse_raw_key_lines(const std::string& text) {
  RawKeyTranscript t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string bob, sent, pair, outcome, verdict;
    RawKeyRecord rec;
    if (!(ls >> rec.index >> bob >> sent >> pair >> outcome >> verdict)) {
      throw std::invalid_argument("malformed raw-key line: " + line);
    }
    if (bob != "-") {
      if (bob != "0" && bob != "1") {
        throw std::invalid_argument("bad bob bit in line: " + line);
      }
      rec.bob_bit = static_cast<std::uint8_t>(bob == "1");
    }
    rec.sent = state_from_name(sent);
    if (pair.size() < 5 || pair.front() != '{' || pair.back() != '}') {
      throw std::invalid_argument("bad announcement in line: " + line);
    }
    std::size_t comma = pair.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("bad announcement in line: " + line);
    }
    rec.announcement =
        Announcement(state_from_name(pair.substr(1, comma - 1)),
                     state_from_name(pair.substr(comma + 1, pair.size() - comma - 2)));
    if (outcome != "-") rec.outcome = state_from_name(outcome);
    if (verdict.size() != 2 || (verdict[0] != 'C' && verdict[0] != 'I') ||
        (verdict[1] != '0' && verdict[1] != '1')) {
      throw std::invalid_argument("bad verdict in line: " + line);
    }
    rec.alice_verdict = {verdict[0] == 'C',
                         static_cast<std::uint8_t>(verdict[1] - '0')};
    t.records.push_back(rec);
  }
  return t;
}

}  // namespace qokd
