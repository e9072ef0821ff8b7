#pragma once

#include <cstdint>
#include <memory>

#include "qokd/wire.hpp"

namespace qokd {

enum class TransportKind : std::uint8_t { InProc, Tcp };

// One end of a duplex message link. recv blocks; both operations throw
// std::runtime_error on timeout or when the peer is gone.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const WireMessage& message) = 0;
  virtual WireMessage recv() = 0;
};

struct ChannelPair {
  std::unique_ptr<Channel> a;
  std::unique_ptr<Channel> b;
};

// Queue-backed duplex link; messages still round-trip through the frame
// codec so both transports exercise identical validation.
ChannelPair make_inproc_pair();

// The three duplex links of one session, handed out per role.
struct SessionEndpoints {
  std::unique_ptr<Channel> alice_to_referee;
  std::unique_ptr<Channel> alice_to_bob;
  std::unique_ptr<Channel> bob_to_referee;
  std::unique_ptr<Channel> bob_to_alice;
  std::unique_ptr<Channel> referee_to_alice;
  std::unique_ptr<Channel> referee_to_bob;
};

SessionEndpoints make_inproc_endpoints();

// Loopback sockets: the referee listens on `port`, Bob on `port + 1` for
// Alice's direct link; port 0 lets the kernel pick both. Blocks until all
// three links are connected.
SessionEndpoints make_tcp_endpoints(std::uint16_t port = 0);

SessionEndpoints make_endpoints(TransportKind kind, std::uint16_t port = 0);

}  // namespace qokd
