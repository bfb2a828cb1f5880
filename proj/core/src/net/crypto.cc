#include "scits/net/crypto.h"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <map>
#include <stdexcept>
#include <vector>

namespace scits::net {
namespace {

const unsigned char* Bytes(std::string_view s) {
  return reinterpret_cast<const unsigned char*>(s.data());
}

std::string Digest(const EVP_MD* md, std::string_view data) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out, &len, md, nullptr) != 1) {
    throw std::runtime_error("digest failed");
  }
  return std::string(reinterpret_cast<char*>(out), len);
}

std::string Xor(std::string a, std::string_view b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<char>(a[i] ^ b[i]);
  return a;
}

// Splits "k=v,k=v" into a map; values may contain '='.
std::map<char, std::string> ParseAttributes(std::string_view msg) {
  std::map<char, std::string> attrs;
  std::size_t pos = 0;
  while (pos < msg.size()) {
    std::size_t comma = msg.find(',', pos);
    if (comma == std::string_view::npos) comma = msg.size();
    std::string_view item = msg.substr(pos, comma - pos);
    if (item.size() < 2 || item[1] != '=') {
      throw std::runtime_error("malformed SCRAM attribute '" + std::string(item) + "'");
    }
    attrs[item[0]] = std::string(item.substr(2));
    pos = comma + 1;
  }
  return attrs;
}

}  // namespace

std::string Sha256(std::string_view data) { return Digest(EVP_sha256(), data); }

std::string HmacSha256(std::string_view key, std::string_view data) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), Bytes(data), data.size(), out,
           &len) == nullptr) {
    throw std::runtime_error("HMAC failed");
  }
  return std::string(reinterpret_cast<char*>(out), len);
}

std::string Pbkdf2HmacSha256(std::string_view password, std::string_view salt, int iterations) {
  std::string out(32, '\0');
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), Bytes(salt),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(out.size()),
                        reinterpret_cast<unsigned char*>(out.data())) != 1) {
    throw std::runtime_error("PBKDF2 failed");
  }
  return out;
}

std::string Md5Hex(std::string_view data) { return HexEncode(Digest(EVP_md5(), data)); }

std::string HexEncode(std::string_view data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (unsigned char c : data) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

std::string Base64Encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), Bytes(data),
                          static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()), Bytes(text),
                          static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("malformed base64");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string RandomBytes(std::size_t n) {
  std::string out(n, '\0');
  if (RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(n)) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
  return out;
}

ScramSha256::ScramSha256(std::string user, std::string password, std::string client_nonce)
    : user_(std::move(user)), password_(std::move(password)), client_nonce_(std::move(client_nonce)) {}

std::string ScramSha256::ClientFirstMessage() const {
  return "n,,n=" + user_ + ",r=" + client_nonce_;
}

std::string ScramSha256::ClientFinalMessage(std::string_view server_first) {
  auto attrs = ParseAttributes(server_first);
  if (!attrs.count('r') || !attrs.count('s') || !attrs.count('i')) {
    throw std::runtime_error("SCRAM server-first message lacks r, s or i");
  }
  const std::string& nonce = attrs['r'];
  if (nonce.compare(0, client_nonce_.size(), client_nonce_) != 0) {
    throw std::runtime_error("SCRAM server nonce does not extend the client nonce");
  }
  std::string salt = Base64Decode(attrs['s']);
  int iterations = std::stoi(attrs['i']);

  std::string salted = Pbkdf2HmacSha256(password_, salt, iterations);
  std::string client_key = HmacSha256(salted, "Client Key");
  std::string stored_key = Sha256(client_key);
  std::string server_key = HmacSha256(salted, "Server Key");

  std::string without_proof = "c=biws,r=" + nonce;
  std::string auth_message = "n=" + user_ + ",r=" + client_nonce_ + "," +
                             std::string(server_first) + "," + without_proof;
  std::string client_signature = HmacSha256(stored_key, auth_message);
  expected_server_signature_ = HmacSha256(server_key, auth_message);
  return without_proof + ",p=" + Base64Encode(Xor(client_key, client_signature));
}

void ScramSha256::VerifyServerFinal(std::string_view server_final) const {
  auto attrs = ParseAttributes(server_final);
  if (attrs.count('e')) throw std::runtime_error("SCRAM server error: " + attrs['e']);
  if (!attrs.count('v') || Base64Decode(attrs['v']) != expected_server_signature_) {
    throw std::runtime_error("SCRAM server signature mismatch");
  }
}

}  // namespace scits::net
