#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scits/types.h"

namespace scits::net {

// Blocking TCP connection with a buffered reader. I/O failures and timeouts
// raise BackendError with retryable() == true.
class TcpStream {
 public:
  TcpStream() = default;
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream Connect(const std::string& host, int port, Millis timeout);

  // Adopts an already connected socket (used by test servers).
  static TcpStream FromFd(int fd);

  // Applies to every subsequent send and receive.
  void SetTimeout(Millis timeout);

  void WriteAll(std::string_view data);
  void ReadExact(void* out, std::size_t n);
  std::string ReadString(std::size_t n);
  std::uint8_t ReadByte();

  bool is_open() const { return fd_ >= 0; }
  void Close();

 private:
  explicit TcpStream(int fd) : fd_(fd) {}
  void Fill();

  int fd_ = -1;
  std::vector<char> buffer_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
};

// Listening socket on 127.0.0.1 with an ephemeral port, for in-process stubs.
class TcpListener {
 public:
  TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  int port() const { return port_; }
  TcpStream Accept();

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace scits::net
