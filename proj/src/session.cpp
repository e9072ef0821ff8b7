#include "qokd/session.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <tuple>

#include "qokd/random.hpp"

namespace qokd {
namespace {

// Internal control-flow signal for a session that cannot proceed. remote
// means the abort was received from a peer (do not re-broadcast it).
struct SessionAbort {
  std::string reason;
  bool remote = false;
};

std::uint64_t require_u64(const Json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_number_unsigned()) {
    throw SessionAbort{std::string("malformed payload: ") + key, false};
  }
  return payload[key].get<std::uint64_t>();
}

std::string require_str(const Json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_string()) {
    throw SessionAbort{std::string("malformed payload: ") + key, false};
  }
  return payload[key].get<std::string>();
}

const char* mode_name(const AliceStrategy& alice) {
  return alice.kind == AliceStrategy::Kind::UsdIndividual ? "usd" : "basis";
}

// Per-role bookkeeping: logs every sent message and turns protocol
// violations into ABORTs broadcast to both peers.
class RoleContext {
 public:
  RoleContext(Role self, const SessionConfig& config, Channel& peer_a,
              Channel& peer_b, Role peer_a_role, Role peer_b_role,
              std::vector<TranscriptEntry>& log)
      : self_(self),
        config_(config),
        peer_a_(peer_a),
        peer_b_(peer_b),
        peer_a_role_(peer_a_role),
        peer_b_role_(peer_b_role),
        log_(log) {}

  std::uint32_t attempt = 0;
  std::uint32_t part = 0;

  void send(Channel& channel, Role to, MessageType type, Json payload) {
    WireMessage message{type, std::move(payload)};
    log_.push_back({attempt, part, self_, to, message});
    channel.send(message);
  }

  // Broadcasts an ABORT (best effort) and raises the local signal.
  [[noreturn]] void fail(const std::string& reason) {
    Json payload{{"attempt", attempt}, {"reason", reason}};
    try {
      send(peer_a_, peer_a_role_, MessageType::Abort, payload);
    } catch (...) {
    }
    try {
      send(peer_b_, peer_b_role_, MessageType::Abort, payload);
    } catch (...) {
    }
    throw SessionAbort{reason, false};
  }

  // Directed read: the next message on `channel` must be one of `allowed`
  // and must carry the current attempt; remote ABORTs propagate as-is.
  WireMessage expect(Channel& channel,
                     std::initializer_list<MessageType> allowed) {
    WireMessage message = channel.recv();
    if (message.type == MessageType::Abort) {
      std::string reason = message.payload.value("reason", "unspecified");
      throw SessionAbort{reason, true};
    }
    bool ok = std::find(allowed.begin(), allowed.end(), message.type) !=
              allowed.end();
    if (!ok) {
      fail(std::string("protocol-order: unexpected ") +
           message_type_name(message.type));
    }
    if (message.type != MessageType::Hello &&
        require_u64(message.payload, "attempt") != attempt) {
      fail("protocol-order: attempt mismatch");
    }
    return message;
  }

  Json hello_payload(Role role) const {
    return Json{{"k", config_.scheme.k},
                {"m", config_.scheme.m},
                {"mode", mode_name(config_.alice)},
                {"n", config_.scheme.n},
                {"r", config_.r},
                {"raw_length", config_.scheme.raw_length()},
                {"role", role_name(role)},
                {"scheme", config_.scheme.name()}};
  }

  void validate_hello(const WireMessage& message, Role expected_role) {
    if (message.payload != hello_payload(expected_role)) {
      fail("config-mismatch");
    }
  }

 private:
  Role self_;
  const SessionConfig& config_;
  Channel& peer_a_;
  Channel& peer_b_;
  Role peer_a_role_;
  Role peer_b_role_;
  std::vector<TranscriptEntry>& log_;
};

void validate_config(const SessionConfig& config) {
  if (config.r < 1) throw std::invalid_argument("need r >= 1 dilution keys");
  if (config.target_index && *config.target_index >= config.scheme.n) {
    throw std::invalid_argument("target index out of range");
  }
}

std::vector<std::uint64_t> known_indices(const ObliviousKeyView& key) {
  std::vector<std::uint64_t> indices;
  indices.reserve(key.alice_known.size());
  for (const auto& [idx, bit] : key.alice_known) indices.push_back(idx);
  return indices;
}

}  // namespace

const char* role_name(Role role) {
  switch (role) {
    case Role::Alice: return "alice";
    case Role::Bob: return "bob";
    case Role::Referee: return "referee";
  }
  throw std::invalid_argument("unknown role");
}

std::uint64_t announce_shift(std::uint64_t j, std::uint64_t b,
                             std::uint64_t n) {
  if (n < 1 || j >= n || b >= n) {
    throw std::invalid_argument("indices must lie in [0, n)");
  }
  return (j + n - b) % n;
}

BitString encrypt_db(const BitString& db, const BitString& ok,
                     std::uint64_t s) {
  if (db.size() != ok.size()) {
    throw std::invalid_argument("database and key lengths differ");
  }
  std::uint64_t n = db.size();
  BitString out(n);
  for (std::uint64_t a = 0; a < n; ++a) {
    out.set(a, db.get(a) ^ ok.get((a + s) % n));
  }
  return out;
}

std::uint8_t decrypt_bit(const BitString& enc, std::uint64_t b,
                         std::uint8_t ok_j) {
  if (b >= enc.size()) throw std::invalid_argument("index out of range");
  return static_cast<std::uint8_t>(enc.get(b) ^ (ok_j & 1));
}

AliceRunResult run_alice(const SessionConfig& config, Channel& to_referee,
                         Channel& to_bob, std::vector<TranscriptEntry>& sent) {
  AliceRunResult result;
  RoleContext ctx(Role::Alice, config, to_referee, to_bob, Role::Referee,
                  Role::Bob, sent);
  try {
    RandomStream rng = RandomStream::derive(config.seed, "alice");
    const ExtractionScheme& scheme = config.scheme;
    const std::uint64_t raw = scheme.raw_length();
    const std::uint64_t n = scheme.n;
    const bool usd = config.alice.kind == AliceStrategy::Kind::UsdIndividual;

    ctx.send(to_bob, Role::Bob, MessageType::Hello,
             ctx.hello_payload(Role::Alice));
    ctx.send(to_referee, Role::Referee, MessageType::Hello,
             ctx.hello_payload(Role::Alice));

    for (std::uint32_t attempt = 0;; ++attempt) {
      ctx.attempt = attempt;
      std::vector<ObliviousKeyView> views;
      views.reserve(config.r);
      for (std::uint32_t part = 0; part < config.r; ++part) {
        ctx.part = part;
        BitString bases;
        if (usd) {
          ctx.send(to_referee, Role::Referee, MessageType::MeasureRequest,
                   Json{{"attempt", attempt}, {"mode", "usd"}, {"part", part}});
        } else {
          bases = BitString::random(raw, rng);
          ctx.send(to_referee, Role::Referee, MessageType::MeasureRequest,
                   Json{{"attempt", attempt},
                        {"bases", bits_to_base64(bases)},
                        {"mode", "basis"},
                        {"part", part}});
        }
        WireMessage res =
            ctx.expect(to_referee, {MessageType::MeasureResult});
        if (require_u64(res.payload, "part") != part ||
            require_str(res.payload, "mode") != mode_name(config.alice)) {
          ctx.fail("protocol-order: measurement result mismatch");
        }
        WireMessage ann = ctx.expect(to_bob, {MessageType::Announce});
        if (require_u64(ann.payload, "part") != part) {
          ctx.fail("protocol-order: announcement part mismatch");
        }
        std::vector<Announcement> pairs =
            announcements_from_base64(require_str(ann.payload, "pairs"));
        if (pairs.size() != raw) ctx.fail("announcement length mismatch");

        BitString conclusive(raw);
        BitString bits(raw);
        if (usd) {
          BitString success =
              bits_from_base64(require_str(res.payload, "success"), raw);
          std::vector<std::uint8_t> octants =
              optional_states_from_base64(require_str(res.payload, "states"));
          if (octants.size() != raw) ctx.fail("result length mismatch");
          for (std::uint64_t i = 0; i < raw; ++i) {
            if (!success.get(i)) continue;
            if (octants[i] == kNoState) ctx.fail("missing revealed state");
            conclusive.set(i, true);
            bits.set(i, bit_of(QubitState{octants[i]}) != 0);
          }
        } else {
          std::vector<QubitState> outcomes =
              states_from_base64(require_str(res.payload, "outcomes"));
          if (outcomes.size() != raw) ctx.fail("result length mismatch");
          for (std::uint64_t i = 0; i < raw; ++i) {
            Conclusiveness verdict =
                evaluate_conclusiveness(outcomes[i], pairs[i]);
            conclusive.set(i, verdict.conclusive);
            bits.set(i, verdict.bit != 0);
          }
        }
        views.push_back(extract_alice(conclusive, bits, scheme));
      }
      ctx.part = config.r - 1;

      // Dilution: align each further key against the bits still surviving.
      std::vector<std::uint64_t> shifts{0};
      std::vector<std::uint64_t> survivors = known_indices(views[0]);
      for (std::uint32_t m = 1; m < config.r; ++m) {
        auto [s, count] =
            optimal_shift(survivors, known_indices(views[m]), n);
        shifts.push_back(s);
        std::vector<std::uint64_t> next;
        next.reserve(count);
        for (std::uint64_t j : survivors) {
          if (views[m].alice_known.count((j + s) % n)) next.push_back(j);
        }
        survivors = std::move(next);
      }
      ObliviousKeyView final_key = dilute(views, shifts);
      result.known_count = final_key.alice_known.size();

      if (final_key.alice_known.empty()) {
        if (attempt == config.restart_cap) {
          Json payload{{"attempt", attempt}, {"reason", "restart-cap"}};
          ctx.send(to_bob, Role::Bob, MessageType::Abort, payload);
          ctx.send(to_referee, Role::Referee, MessageType::Abort, payload);
          result.status = SessionStatus::Restarted;
          result.restarts = attempt;
          result.abort_reason = "restart-cap";
          return result;
        }
        ctx.send(to_bob, Role::Bob, MessageType::Restart,
                 Json{{"attempt", attempt}});
        ctx.send(to_referee, Role::Referee, MessageType::Restart,
                 Json{{"attempt", attempt}});
        ++result.restarts;
        continue;
      }

      auto it = final_key.alice_known.begin();
      std::advance(it, rng.below(final_key.alice_known.size()));
      std::uint64_t j = it->first;
      std::uint8_t key_bit = it->second;
      std::uint64_t b = config.target_index ? *config.target_index
                                            : rng.below(n);
      ctx.send(to_bob, Role::Bob, MessageType::Shift,
               Json{{"attempt", attempt},
                    {"dilution_shifts", shifts},
                    {"shift", announce_shift(j, b, n)}});
      WireMessage enc_msg = ctx.expect(to_bob, {MessageType::EncDb});
      BitString enc = bits_from_base64(require_str(enc_msg.payload, "bits"), n);
      result.retrieved_bit = decrypt_bit(enc, b, key_bit);
      result.chosen_index = b;
      ctx.send(to_bob, Role::Bob, MessageType::Done, Json{{"attempt", attempt}});
      ctx.send(to_referee, Role::Referee, MessageType::Done,
               Json{{"attempt", attempt}});
      result.status = SessionStatus::Completed;
      return result;
    }
  } catch (const SessionAbort& abort) {
    result.status = SessionStatus::Aborted;
    result.abort_reason = abort.reason;
  } catch (const std::exception& error) {
    result.status = SessionStatus::Aborted;
    result.abort_reason = error.what();
  }
  return result;
}

BobRunResult run_bob(const SessionConfig& config, Channel& to_referee,
                     Channel& to_alice, std::vector<TranscriptEntry>& sent) {
  BobRunResult result;
  RoleContext ctx(Role::Bob, config, to_referee, to_alice, Role::Referee,
                  Role::Alice, sent);
  try {
    const ExtractionScheme& scheme = config.scheme;
    const std::uint64_t raw = scheme.raw_length();
    const std::uint64_t n = scheme.n;
    RandomStream db_rng = RandomStream::derive(config.seed, "db");
    result.db = BitString::random(n, db_rng);
    RandomStream rng = RandomStream::derive(config.seed, "bob");

    ctx.send(to_referee, Role::Referee, MessageType::Hello,
             ctx.hello_payload(Role::Bob));
    ctx.validate_hello(ctx.expect(to_alice, {MessageType::Hello}),
                       Role::Alice);

    for (std::uint32_t attempt = 0; attempt <= config.restart_cap; ++attempt) {
      ctx.attempt = attempt;
      std::vector<BitString> keys;
      keys.reserve(config.r);
      for (std::uint32_t part = 0; part < config.r; ++part) {
        ctx.part = part;
        std::vector<QubitState> states;
        std::vector<Announcement> pairs;
        states.reserve(raw);
        pairs.reserve(raw);
        BitString bob_bits(raw);
        for (std::uint64_t i = 0; i < raw; ++i) {
          RawKeyRecord rec = draw_honest_bob_round(i, rng);
          states.push_back(rec.sent);
          pairs.push_back(rec.announcement);
          bob_bits.set(i, *rec.bob_bit != 0);
        }
        ctx.send(to_referee, Role::Referee, MessageType::StateDeposit,
                 Json{{"attempt", attempt},
                      {"part", part},
                      {"states", states_to_base64(states)}});
        ctx.send(to_alice, Role::Alice, MessageType::Announce,
                 Json{{"attempt", attempt},
                      {"pairs", announcements_to_base64(pairs)},
                      {"part", part}});
        keys.push_back(extract_bob_key(bob_bits, scheme));
      }
      ctx.part = config.r - 1;

      WireMessage msg =
          ctx.expect(to_alice, {MessageType::Restart, MessageType::Shift});
      if (msg.type == MessageType::Restart) continue;

      const Json& shifts_json = msg.payload.contains("dilution_shifts")
                                    ? msg.payload["dilution_shifts"]
                                    : Json();
      if (!shifts_json.is_array() || shifts_json.size() != config.r) {
        ctx.fail("malformed payload: dilution_shifts");
      }
      std::uint64_t s = require_u64(msg.payload, "shift");
      if (s >= n) ctx.fail("shift out of range");
      BitString final_key(n);
      for (std::uint64_t j = 0; j < n; ++j) {
        bool bit = false;
        for (std::uint32_t m = 0; m < config.r; ++m) {
          if (!shifts_json[m].is_number_unsigned()) {
            ctx.fail("malformed payload: dilution_shifts");
          }
          std::uint64_t shift = shifts_json[m].get<std::uint64_t>();
          if (shift >= n) ctx.fail("dilution shift out of range");
          bit ^= keys[m].get((j + shift) % n);
        }
        final_key.set(j, bit);
      }
      ctx.send(to_alice, Role::Alice, MessageType::EncDb,
               Json{{"attempt", attempt},
                    {"bits", bits_to_base64(encrypt_db(result.db, final_key, s))}});
      ctx.expect(to_alice, {MessageType::Done});
      return result;
    }
    ctx.fail("restart-cap");
  } catch (const SessionAbort& abort) {
    result.aborted = true;
    result.abort_reason = abort.reason;
  } catch (const std::exception& error) {
    result.aborted = true;
    result.abort_reason = error.what();
  }
  return result;
}

RefereeRunResult run_referee(const SessionConfig& config, Channel& to_alice,
                             Channel& to_bob,
                             std::vector<TranscriptEntry>& sent) {
  RefereeRunResult result;
  RoleContext ctx(Role::Referee, config, to_alice, to_bob, Role::Alice,
                  Role::Bob, sent);
  try {
    const std::uint64_t raw = config.scheme.raw_length();
    RandomStream rng = RandomStream::derive(config.seed, "referee");
    const bool usd = config.alice.kind == AliceStrategy::Kind::UsdIndividual;

    ctx.validate_hello(ctx.expect(to_alice, {MessageType::Hello}),
                       Role::Alice);
    ctx.validate_hello(ctx.expect(to_bob, {MessageType::Hello}), Role::Bob);

    for (std::uint32_t attempt = 0; attempt <= config.restart_cap; ++attempt) {
      ctx.attempt = attempt;
      for (std::uint32_t part = 0; part < config.r; ++part) {
        ctx.part = part;
        WireMessage dep = ctx.expect(to_bob, {MessageType::StateDeposit});
        if (require_u64(dep.payload, "part") != part) {
          ctx.fail("protocol-order: deposit part mismatch");
        }
        std::vector<QubitState> states =
            states_from_base64(require_str(dep.payload, "states"));
        if (states.size() != raw) ctx.fail("deposit length mismatch");

        WireMessage req = ctx.expect(to_alice, {MessageType::MeasureRequest});
        if (require_u64(req.payload, "part") != part ||
            require_str(req.payload, "mode") != mode_name(config.alice)) {
          ctx.fail("protocol-order: measurement request mismatch");
        }
        if (usd) {
          BitString success(raw);
          std::vector<std::uint8_t> octants(raw, kNoState);
          for (std::uint64_t i = 0; i < raw; ++i) {
            if (rng.bernoulli(kUsdSuccessProb)) {
              success.set(i, true);
              octants[i] = states[i].octant();
            }
          }
          ctx.send(to_alice, Role::Alice, MessageType::MeasureResult,
                   Json{{"attempt", attempt},
                        {"mode", "usd"},
                        {"part", part},
                        {"states", optional_states_to_base64(octants)},
                        {"success", bits_to_base64(success)}});
        } else {
          BitString bases =
              bits_from_base64(require_str(req.payload, "bases"), raw);
          std::vector<QubitState> outcomes;
          outcomes.reserve(raw);
          for (std::uint64_t i = 0; i < raw; ++i) {
            Basis basis = bases.get(i) ? Basis::LeftRight : Basis::UpDown;
            outcomes.push_back(measure(states[i], basis, rng));
          }
          ctx.send(to_alice, Role::Alice, MessageType::MeasureResult,
                   Json{{"attempt", attempt},
                        {"mode", "basis"},
                        {"outcomes", states_to_base64(outcomes)},
                        {"part", part}});
        }
      }
      ctx.part = config.r - 1;

      WireMessage msg =
          ctx.expect(to_alice, {MessageType::Restart, MessageType::Done});
      if (msg.type == MessageType::Done) return result;
    }
    ctx.fail("restart-cap");
  } catch (const SessionAbort& abort) {
    result.aborted = true;
    result.abort_reason = abort.reason;
  } catch (const std::exception& error) {
    result.aborted = true;
    result.abort_reason = error.what();
  }
  return result;
}

std::vector<TranscriptEntry> merge_transcripts(
    std::vector<std::vector<TranscriptEntry>> logs) {
  std::vector<TranscriptEntry> merged;
  for (auto& log : logs) {
    merged.insert(merged.end(), log.begin(), log.end());
  }
  std::sort(merged.begin(), merged.end(),
            [](const TranscriptEntry& a, const TranscriptEntry& b) {
              return std::tuple(a.attempt, a.part, a.message.type, a.from,
                                a.to) <
                     std::tuple(b.attempt, b.part, b.message.type, b.from,
                                b.to);
            });
  return merged;
}

SessionTranscript run_session(const SessionConfig& config, TransportKind kind,
                              std::uint16_t port) {
  validate_config(config);
  SessionEndpoints endpoints = make_endpoints(kind, port);

  std::vector<TranscriptEntry> alice_log;
  std::vector<TranscriptEntry> bob_log;
  std::vector<TranscriptEntry> referee_log;
  AliceRunResult alice_result;
  BobRunResult bob_result;
  RefereeRunResult referee_result;

  // Each thread owns its endpoints; dropping them on exit releases peers
  // that would otherwise block on a vanished counterparty.
  std::thread alice_thread(
      [&, to_ref = std::move(endpoints.alice_to_referee),
       to_bob = std::move(endpoints.alice_to_bob)] {
        alice_result = run_alice(config, *to_ref, *to_bob, alice_log);
      });
  std::thread bob_thread(
      [&, to_ref = std::move(endpoints.bob_to_referee),
       to_alice = std::move(endpoints.bob_to_alice)] {
        bob_result = run_bob(config, *to_ref, *to_alice, bob_log);
      });
  std::thread referee_thread(
      [&, to_alice = std::move(endpoints.referee_to_alice),
       to_bob = std::move(endpoints.referee_to_bob)] {
        referee_result = run_referee(config, *to_alice, *to_bob, referee_log);
      });
  alice_thread.join();
  bob_thread.join();
  referee_thread.join();

  SessionTranscript transcript;
  transcript.entries = merge_transcripts(
      {std::move(alice_log), std::move(bob_log), std::move(referee_log)});
  SessionOutcome& outcome = transcript.outcome;
  outcome.status = alice_result.status;
  outcome.restarts = alice_result.restarts;
  outcome.abort_reason = alice_result.abort_reason;
  outcome.retrieved_bit = alice_result.retrieved_bit;
  outcome.chosen_index = alice_result.chosen_index;
  outcome.alice_known_count = alice_result.known_count;
  if (outcome.abort_reason.empty()) {
    if (bob_result.aborted) outcome.abort_reason = bob_result.abort_reason;
    else if (referee_result.aborted) {
      outcome.abort_reason = referee_result.abort_reason;
    }
  }
  if (outcome.chosen_index && *outcome.chosen_index < bob_result.db.size()) {
    outcome.expected_bit =
        static_cast<std::uint8_t>(bob_result.db.get(*outcome.chosen_index));
  }
  return transcript;
}

const char* session_status_name(SessionStatus status) {
  switch (status) {
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Restarted: return "restarted";
    case SessionStatus::Aborted: return "aborted";
  }
  throw std::invalid_argument("unknown status");
}

std::string transcript_to_jsonl(const SessionTranscript& transcript) {
  std::string out;
  std::size_t seq = 0;
  for (const TranscriptEntry& entry : transcript.entries) {
    Json line{{"attempt", entry.attempt},
              {"from", role_name(entry.from)},
              {"part", entry.part},
              {"payload", entry.message.payload},
              {"seq", seq++},
              {"to", role_name(entry.to)},
              {"type", message_type_name(entry.message.type)}};
    out += canonical_json(line);
    out += '\n';
  }
  Json outcome{{"known_count", transcript.outcome.alice_known_count},
               {"restarts", transcript.outcome.restarts},
               {"retrieved_bit", transcript.outcome.retrieved_bit
                                     ? Json(*transcript.outcome.retrieved_bit)
                                     : Json(nullptr)},
               {"status", session_status_name(transcript.outcome.status)}};
  if (!transcript.outcome.abort_reason.empty()) {
    outcome["abort_reason"] = transcript.outcome.abort_reason;
  }
  out += canonical_json(Json{{"outcome", outcome}});
  out += '\n';
  return out;
}

void check_information_boundary(const SessionTranscript& transcript) {
  auto violation = [](const TranscriptEntry& entry, const char* why) {
    throw std::logic_error(std::string("information boundary: ") + why +
                           " (" + message_type_name(entry.message.type) +
                           " " + role_name(entry.from) + "->" +
                           role_name(entry.to) + ")");
  };
  for (const TranscriptEntry& entry : transcript.entries) {
    if (entry.from == entry.to) violation(entry, "self-addressed message");
    switch (entry.message.type) {
      case MessageType::StateDeposit:
        if (entry.from != Role::Bob || entry.to != Role::Referee) {
          violation(entry, "sent states may only flow Bob->Referee");
        }
        break;
      case MessageType::MeasureRequest:
        if (entry.from != Role::Alice || entry.to != Role::Referee) {
          violation(entry, "basis choices may only flow Alice->Referee");
        }
        break;
      case MessageType::MeasureResult:
        if (entry.from != Role::Referee || entry.to != Role::Alice) {
          violation(entry, "outcomes may only flow Referee->Alice");
        }
        break;
      case MessageType::Announce:
      case MessageType::EncDb:
        if (entry.from != Role::Bob || entry.to != Role::Alice) {
          violation(entry, "must flow Bob->Alice");
        }
        break;
      case MessageType::Restart:
      case MessageType::Shift:
      case MessageType::Done:
        if (entry.from != Role::Alice) violation(entry, "must originate at Alice");
        break;
      case MessageType::Hello:
        if (entry.from == Role::Referee) violation(entry, "referee does not hello");
        break;
      case MessageType::Abort:
        break;
    }
  }
}

}  // namespace qokd
