#include "qokd/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <string>

namespace qokd {
namespace {

constexpr auto kRecvTimeout = std::chrono::seconds(30);

// --- in-process --------------------------------------------------------------

struct Mailbox {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::vector<std::uint8_t>> frames;
  bool closed = false;
};

class InProcChannel : public Channel {
 public:
  InProcChannel(std::shared_ptr<Mailbox> inbox, std::shared_ptr<Mailbox> outbox)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)) {}

  ~InProcChannel() override {
    std::lock_guard<std::mutex> lock(outbox_->mutex);
    outbox_->closed = true;
    outbox_->ready.notify_all();
  }

  void send(const WireMessage& message) override {
    std::vector<std::uint8_t> frame = encode_frame(message);
    std::lock_guard<std::mutex> lock(outbox_->mutex);
    if (outbox_->closed) throw std::runtime_error("channel closed by peer");
    outbox_->frames.push_back(std::move(frame));
    outbox_->ready.notify_one();
  }

  WireMessage recv() override {
    std::unique_lock<std::mutex> lock(inbox_->mutex);
    if (!inbox_->ready.wait_for(lock, kRecvTimeout, [this] {
          return !inbox_->frames.empty() || inbox_->closed;
        })) {
      throw std::runtime_error("transport timeout");
    }
    if (inbox_->frames.empty()) {
      throw std::runtime_error("channel closed by peer");
    }
    std::vector<std::uint8_t> frame = std::move(inbox_->frames.front());
    inbox_->frames.pop_front();
    lock.unlock();
    return decode_frame(frame);
  }

 private:
  std::shared_ptr<Mailbox> inbox_;
  std::shared_ptr<Mailbox> outbox_;
};

// --- TCP ----------------------------------------------------------------------

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

class Socket {
 public:
  Socket() : fd_(::socket(AF_INET, SOCK_STREAM, 0)) {
    if (fd_ < 0) throw_errno("socket");
  }
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  int fd() const { return fd_; }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd_ = -1;
};

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

Socket make_listener(std::uint16_t port, std::uint16_t& actual_port) {
  Socket sock;
  int one = 1;
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = loopback(port);
  if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    throw_errno("bind");
  }
  if (::listen(sock.fd(), 4) < 0) throw_errno("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
    throw_errno("getsockname");
  }
  actual_port = ntohs(addr.sin_port);
  return sock;
}

void configure_stream(int fd) {
  timeval tv{};
  tv.tv_sec = std::chrono::duration_cast<std::chrono::seconds>(kRecvTimeout).count();
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::recv(fd, data, len, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw std::runtime_error("transport timeout");
      }
      throw_errno("recv");
    }
    if (n == 0) throw std::runtime_error("channel closed by peer");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(Socket sock) : sock_(std::move(sock)) {
    configure_stream(sock_.fd());
  }

  void send(const WireMessage& message) override {
    std::vector<std::uint8_t> frame = encode_frame(message);
    write_all(sock_.fd(), frame.data(), frame.size());
  }

  WireMessage recv() override {
    std::uint8_t header[kFrameHeaderSize];
    read_all(sock_.fd(), header, kFrameHeaderSize);
    MessageType type;
    std::uint32_t len = decode_frame_header(header, type);
    std::vector<std::uint8_t> body(len);
    read_all(sock_.fd(), body.data(), len);
    return decode_frame_body(type, body);
  }

 private:
  Socket sock_;
};

Socket connect_with_tag(std::uint16_t port, char tag) {
  Socket sock;
  sockaddr_in addr = loopback(port);
  if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
      0) {
    throw_errno("connect");
  }
  std::uint8_t byte = static_cast<std::uint8_t>(tag);
  write_all(sock.fd(), &byte, 1);
  return sock;
}

Socket accept_one(Socket& listener, char& tag_out) {
  int fd = ::accept(listener.fd(), nullptr, nullptr);
  if (fd < 0) throw_errno("accept");
  Socket sock(fd);
  configure_stream(sock.fd());
  std::uint8_t byte = 0;
  read_all(sock.fd(), &byte, 1);
  tag_out = static_cast<char>(byte);
  return sock;
}

}  // namespace

ChannelPair make_inproc_pair() {
  auto ab = std::make_shared<Mailbox>();
  auto ba = std::make_shared<Mailbox>();
  ChannelPair pair;
  pair.a = std::make_unique<InProcChannel>(ba, ab);
  pair.b = std::make_unique<InProcChannel>(ab, ba);
  return pair;
}

SessionEndpoints make_inproc_endpoints() {
  SessionEndpoints endpoints;
  ChannelPair ar = make_inproc_pair();
  ChannelPair br = make_inproc_pair();
  ChannelPair ab = make_inproc_pair();
  endpoints.alice_to_referee = std::move(ar.a);
  endpoints.referee_to_alice = std::move(ar.b);
  endpoints.bob_to_referee = std::move(br.a);
  endpoints.referee_to_bob = std::move(br.b);
  endpoints.alice_to_bob = std::move(ab.a);
  endpoints.bob_to_alice = std::move(ab.b);
  return endpoints;
}

SessionEndpoints make_tcp_endpoints(std::uint16_t port) {
  std::uint16_t referee_port = 0;
  Socket referee_listener = make_listener(port, referee_port);
  std::uint16_t bob_port = 0;
  Socket bob_listener = make_listener(
      port == 0 ? 0 : static_cast<std::uint16_t>(port + 1), bob_port);

  // Loopback connects complete against the listen backlog, so a single
  // thread can dial all three links before accepting any of them.
  Socket alice_to_referee = connect_with_tag(referee_port, 'A');
  Socket bob_to_referee = connect_with_tag(referee_port, 'B');
  Socket alice_to_bob = connect_with_tag(bob_port, 'A');
  configure_stream(alice_to_referee.fd());
  configure_stream(bob_to_referee.fd());
  configure_stream(alice_to_bob.fd());

  Socket referee_sides[2] = {Socket{-1}, Socket{-1}};
  for (int i = 0; i < 2; ++i) {
    char tag = 0;
    Socket accepted = accept_one(referee_listener, tag);
    if (tag == 'A') {
      referee_sides[0] = std::move(accepted);
    } else if (tag == 'B') {
      referee_sides[1] = std::move(accepted);
    } else {
      throw std::runtime_error("unexpected connection tag");
    }
  }
  if (referee_sides[0].fd() < 0 || referee_sides[1].fd() < 0) {
    throw std::runtime_error("referee links incomplete");
  }
  char tag = 0;
  Socket bob_side = accept_one(bob_listener, tag);
  if (tag != 'A') throw std::runtime_error("unexpected connection tag");

  SessionEndpoints endpoints;
  endpoints.alice_to_referee =
      std::make_unique<TcpChannel>(std::move(alice_to_referee));
  endpoints.bob_to_referee =
      std::make_unique<TcpChannel>(std::move(bob_to_referee));
  endpoints.alice_to_bob = std::make_unique<TcpChannel>(std::move(alice_to_bob));
  endpoints.referee_to_alice =
      std::make_unique<TcpChannel>(std::move(referee_sides[0]));
  endpoints.referee_to_bob =
      std::make_unique<TcpChannel>(std::move(referee_sides[1]));
  endpoints.bob_to_alice = std::make_unique<TcpChannel>(std::move(bob_side));
  return endpoints;
}

SessionEndpoints make_endpoints(TransportKind kind, std::uint16_t port) {
  return kind == TransportKind::InProc ? make_inproc_endpoints()
                                       : make_tcp_endpoints(port);
}

}  // namespace qokd
