#pragma once

#include <string>
#include <string_view>

namespace scits::net {

// Thin wrappers over OpenSSL. Binary values travel as std::string.
std::string Sha256(std::string_view data);
std::string HmacSha256(std::string_view key, std::string_view data);
std::string Pbkdf2HmacSha256(std::string_view password, std::string_view salt, int iterations);
std::string Md5Hex(std::string_view data);
std::string HexEncode(std::string_view data);
std::string Base64Encode(std::string_view data);
// Throws std::invalid_argument on malformed input.
std::string Base64Decode(std::string_view text);
std::string RandomBytes(std::size_t n);

// Client side of SCRAM-SHA-256 (RFC 5802 / RFC 7677) without channel binding.
class ScramSha256 {
 public:
  ScramSha256(std::string user, std::string password, std::string client_nonce);

  // "n,,n=<user>,r=<nonce>"
  std::string ClientFirstMessage() const;

  // Consumes "r=...,s=...,i=..." and returns "c=biws,r=...,p=<proof>".
  // Throws std::runtime_error on a malformed or inconsistent challenge.
  std::string ClientFinalMessage(std::string_view server_first);

  // Checks "v=<signature>"; throws std::runtime_error on mismatch.
  void VerifyServerFinal(std::string_view server_final) const;

 private:
  std::string user_;
  std::string password_;
  std::string client_nonce_;
  std::string expected_server_signature_;
};

}  // namespace scits::net
