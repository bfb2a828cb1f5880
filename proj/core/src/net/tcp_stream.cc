#include "scits/net/tcp_stream.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <utility>

#include "scits/errors.h"

namespace scits::net {
namespace {

constexpr std::size_t kReadBufferSize = 1 << 16;

[[noreturn]] void ThrowIo(const std::string& what) {
  throw BackendError(what + ": " + std::strerror(errno), /*retryable=*/true);
}

void ApplyTimeout(int fd, Millis timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

}  // namespace

TcpStream::TcpStream(TcpStream&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      buffer_(std::move(other.buffer_)),
      begin_(other.begin_),
      end_(other.end_) {}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    Close();
    fd_ = std::exchange(other.fd_, -1);
    buffer_ = std::move(other.buffer_);
    begin_ = other.begin_;
    end_ = other.end_;
  }
  return *this;
}

TcpStream::~TcpStream() { Close(); }

void TcpStream::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::Connect(const std::string& host, int port, Millis timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found);
  if (rc != 0) {
    throw BackendError("cannot resolve " + host + ": " + ::gai_strerror(rc), /*retryable=*/true);
  }

  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    ApplyTimeout(fd, timeout);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(found);
      int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return TcpStream(fd);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(found);
  throw BackendError("cannot connect to " + host + ":" + service + ": " + last_error,
                     /*retryable=*/true);
}

TcpStream TcpStream::FromFd(int fd) { return TcpStream(fd); }

void TcpStream::SetTimeout(Millis timeout) {
  if (fd_ >= 0) ApplyTimeout(fd_, timeout);
}

void TcpStream::WriteAll(std::string_view data) {
  if (fd_ < 0) throw BackendError("write on closed connection", true);
  while (!data.empty()) {
    ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowIo("send failed");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void TcpStream::Fill() {
  if (fd_ < 0) throw BackendError("read on closed connection", true);
  if (buffer_.size() < kReadBufferSize) buffer_.resize(kReadBufferSize);
  for (;;) {
    ssize_t n = ::recv(fd_, buffer_.data(), buffer_.size(), 0);
    if (n > 0) {
      begin_ = 0;
      end_ = static_cast<std::size_t>(n);
      return;
    }
    if (n == 0) throw BackendError("connection closed by peer", true);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      throw BackendError("timed out waiting for server", true);
    }
    ThrowIo("recv failed");
  }
}

void TcpStream::ReadExact(void* out, std::size_t n) {
  auto* dst = static_cast<char*>(out);
  while (n > 0) {
    if (begin_ == end_) Fill();
    std::size_t take = std::min(n, end_ - begin_);
    std::memcpy(dst, buffer_.data() + begin_, take);
    begin_ += take;
    dst += take;
    n -= take;
  }
}

std::string TcpStream::ReadString(std::size_t n) {
  std::string s(n, '\0');
  ReadExact(s.data(), n);
  return s;
}

std::uint8_t TcpStream::ReadByte() {
  std::uint8_t b;
  ReadExact(&b, 1);
  return b;
}

TcpListener::TcpListener() {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) ThrowIo("socket failed");
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) ThrowIo("bind failed");
  if (::listen(fd_, 16) != 0) ThrowIo("listen failed");
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpListener::Accept() {
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) ThrowIo("accept failed");
  return TcpStream::FromFd(fd);
}

}  // namespace scits::net
