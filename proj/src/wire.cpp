#include "qokd/wire.hpp"

#include <stdexcept>

#include "qokd/bits.hpp"

namespace qokd {
namespace {

// Frames larger than this indicate corruption, not data.
constexpr std::uint32_t kMaxPayload = 64u << 20;

bool valid_type(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(MessageType::Hello) &&
         t <= static_cast<std::uint8_t>(MessageType::Abort);
}

}  // namespace

const char* message_type_name(MessageType type) {
  switch (type) {
    case MessageType::Hello: return "HELLO";
    case MessageType::StateDeposit: return "STATE_DEPOSIT";
    case MessageType::MeasureRequest: return "MEASURE_REQUEST";
    case MessageType::MeasureResult: return "MEASURE_RESULT";
    case MessageType::Announce: return "ANNOUNCE";
    case MessageType::Restart: return "RESTART";
    case MessageType::Shift: return "SHIFT";
    case MessageType::EncDb: return "ENC_DB";
    case MessageType::Done: return "DONE";
    case MessageType::Abort: return "ABORT";
  }
  throw std::invalid_argument("unknown message type");
}

MessageType message_type_from_name(const std::string& name) {
  for (std::uint8_t t = 1; t <= 10; ++t) {
    MessageType type = static_cast<MessageType>(t);
    if (name == message_type_name(type)) return type;
  }
  throw std::invalid_argument("unknown message type name '" + name + "'");
}

std::string canonical_json(const Json& value) {
  // nlohmann keeps object keys sorted; a compact dump is already canonical.
  return value.dump();
}

std::vector<std::uint8_t> encode_frame(const WireMessage& message) {
  std::string payload = canonical_json(message.payload);
  if (payload.size() > kMaxPayload) {
    throw std::invalid_argument("payload exceeds frame limit");
  }
  std::vector<std::uint8_t> frame;
  frame.reserve(kFrameHeaderSize + payload.size());
  std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  frame.push_back(static_cast<std::uint8_t>(len >> 24));
  frame.push_back(static_cast<std::uint8_t>(len >> 16));
  frame.push_back(static_cast<std::uint8_t>(len >> 8));
  frame.push_back(static_cast<std::uint8_t>(len));
  frame.push_back(kWireVersion);
  frame.push_back(static_cast<std::uint8_t>(message.type));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

std::uint32_t decode_frame_header(const std::uint8_t header[kFrameHeaderSize],
                                  MessageType& type_out) {
  std::uint32_t len = (std::uint32_t(header[0]) << 24) |
                      (std::uint32_t(header[1]) << 16) |
                      (std::uint32_t(header[2]) << 8) | std::uint32_t(header[3]);
  if (len > kMaxPayload) {
    throw std::invalid_argument("frame payload length out of range");
  }
  if (header[4] != kWireVersion) {
    throw std::invalid_argument("unsupported wire version " +
                                std::to_string(int(header[4])));
  }
  if (!valid_type(header[5])) {
    throw std::invalid_argument("unknown wire message type " +
                                std::to_string(int(header[5])));
  }
  type_out = static_cast<MessageType>(header[5]);
  return len;
}

WireMessage decode_frame_body(MessageType type,
                              const std::vector<std::uint8_t>& body) {
  WireMessage message;
  message.type = type;
  message.payload = Json::parse(body.begin(), body.end(), nullptr,
                                /*allow_exceptions=*/false);
  if (message.payload.is_discarded() || !message.payload.is_object()) {
    throw std::invalid_argument("frame payload is not a JSON object");
  }
  return message;
}

WireMessage decode_frame(const std::vector<std::uint8_t>& frame) {
  if (frame.size() < kFrameHeaderSize) {
    throw std::invalid_argument("frame shorter than header");
  }
  MessageType type;
  std::uint32_t len = decode_frame_header(frame.data(), type);
  if (frame.size() != kFrameHeaderSize + len) {
    throw std::invalid_argument("frame length mismatch");
  }
  return decode_frame_body(
      type, std::vector<std::uint8_t>(frame.begin() + kFrameHeaderSize,
                                      frame.end()));
}

std::string states_to_base64(const std::vector<QubitState>& states) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(states.size());
  for (QubitState s : states) bytes.push_back(s.octant());
  return base64_encode(bytes);
}

std::vector<QubitState> states_from_base64(const std::string& text) {
  std::vector<QubitState> states;
  for (std::uint8_t b : base64_decode(text)) {
    QubitState s{b};
    overlap_sq(s, s);  // validates the octant
    states.push_back(s);
  }
  return states;
}

std::string announcements_to_base64(const std::vector<Announcement>& pairs) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(pairs.size());
  for (const Announcement& a : pairs) {
    bytes.push_back(
        static_cast<std::uint8_t>(a.first().octant() | (a.second().octant() << 4)));
  }
  return base64_encode(bytes);
}

std::vector<Announcement> announcements_from_base64(const std::string& text) {
  std::vector<Announcement> pairs;
  for (std::uint8_t b : base64_decode(text)) {
    pairs.emplace_back(QubitState{static_cast<std::uint8_t>(b & 0x0f)},
                       QubitState{static_cast<std::uint8_t>(b >> 4)});
  }
  return pairs;
}

std::string optional_states_to_base64(const std::vector<std::uint8_t>& octants) {
  for (std::uint8_t b : octants) {
    if (b != kNoState) {
      QubitState s{b};
      overlap_sq(s, s);
    }
  }
  return base64_encode(octants);
}

std::vector<std::uint8_t> optional_states_from_base64(const std::string& text) {
  std::vector<std::uint8_t> octants = base64_decode(text);
  for (std::uint8_t b : octants) {
    if (b != kNoState) {
      QubitState s{b};
      overlap_sq(s, s);
    }
  }
  return octants;
}

}  // namespace qokd
