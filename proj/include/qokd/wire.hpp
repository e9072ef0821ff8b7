#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qokd/qubit.hpp"

namespace qokd {

using Json = nlohmann::json;

inline constexpr std::uint8_t kWireVersion = 0x01;

// Values double as the canonical ordering of message types within a protocol
// phase: the numeric order IS the order a well-formed session emits them in.
enum class MessageType : std::uint8_t {
  Hello = 1,
  StateDeposit = 2,
  MeasureRequest = 3,
  MeasureResult = 4,
  Announce = 5,
  Restart = 6,
  Shift = 7,
  EncDb = 8,
  Done = 9,
  Abort = 10,
};

const char* message_type_name(MessageType type);
MessageType message_type_from_name(const std::string& name);

struct WireMessage {
  MessageType type = MessageType::Hello;
  Json payload;  // objects only; keys serialize sorted (canonical form)

  bool operator==(const WireMessage&) const = default;
};

// Compact JSON with sorted keys and no insignificant whitespace.
std::string canonical_json(const Json& value);

// Frame layout: 4-byte big-endian payload length, version byte, type byte,
// canonical JSON payload.
std::vector<std::uint8_t> encode_frame(const WireMessage& message);

// Decodes one complete frame; rejects version or type mismatches, malformed
// JSON, and length errors.
WireMessage decode_frame(const std::vector<std::uint8_t>& frame);

// Header helpers for stream transports that read the 6-byte prefix first.
inline constexpr std::size_t kFrameHeaderSize = 6;
// Returns the payload length; validates version and type.
std::uint32_t decode_frame_header(const std::uint8_t header[kFrameHeaderSize],
                                  MessageType& type_out);
WireMessage decode_frame_body(MessageType type,
                              const std::vector<std::uint8_t>& body);

// --- payload field codecs ----------------------------------------------------

// Qubit states as one octant byte each, base64-wrapped.
std::string states_to_base64(const std::vector<QubitState>& states);
std::vector<QubitState> states_from_base64(const std::string& text);

// Announcements as one byte each: low nibble first octant, high nibble second.
std::string announcements_to_base64(const std::vector<Announcement>& pairs);
std::vector<Announcement> announcements_from_base64(const std::string& text);

// Octet streams where some entries may be absent (0xff placeholder).
inline constexpr std::uint8_t kNoState = 0xff;
std::string optional_states_to_base64(const std::vector<std::uint8_t>& octants);
std::vector<std::uint8_t> optional_states_from_base64(const std::string& text);

}  // namespace qokd
