#include "scits/pg/pg_connection.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "scits/errors.h"
#include "scits/net/crypto.h"

namespace scits::pg {
namespace {

constexpr std::int32_t kProtocolVersion = 196608;  // 3.0
constexpr std::size_t kCopyChunk = 1 << 20;

void PutInt32(std::string& out, std::int32_t v) {
  auto u = static_cast<std::uint32_t>(v);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>(u >> shift));
}

void PutInt16(std::string& out, std::int16_t v) {
  auto u = static_cast<std::uint16_t>(v);
  out.push_back(static_cast<char>(u >> 8));
  out.push_back(static_cast<char>(u));
}

void PutInt64(std::string& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>(u >> shift));
}

void PutCString(std::string& out, std::string_view s) {
  out.append(s);
  out.push_back('\0');
}

// Cursor over a message body.
class BodyReader {
 public:
  explicit BodyReader(std::string_view body) : body_(body) {}

  std::int32_t Int32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(body_[pos_++]);
    return static_cast<std::int32_t>(v);
  }
  std::int16_t Int16() {
    Need(2);
    std::uint16_t v = static_cast<std::uint16_t>(
        (static_cast<unsigned char>(body_[pos_]) << 8) | static_cast<unsigned char>(body_[pos_ + 1]));
    pos_ += 2;
    return static_cast<std::int16_t>(v);
  }
  std::string CString() {
    std::size_t end = body_.find('\0', pos_);
    if (end == std::string_view::npos) throw BackendError("unterminated string in message", false);
    std::string s(body_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s(body_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view Rest() const { return body_.substr(pos_); }
  bool AtEnd() const { return pos_ >= body_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > body_.size()) throw BackendError("truncated protocol message", false);
  }
  std::string_view body_;
  std::size_t pos_ = 0;
};

std::string FormatServerError(std::string_view body) {
  BodyReader r(body);
  std::string severity, code, message, detail;
  while (!r.AtEnd()) {
    std::string field = r.Bytes(1);
    if (field[0] == '\0') break;
    std::string value = r.CString();
    switch (field[0]) {
      case 'S': severity = value; break;
      case 'C': code = value; break;
      case 'M': message = value; break;
      case 'D': detail = value; break;
      default: break;
    }
  }
  std::string out = (severity.empty() ? "ERROR" : severity) + " " + code + ": " + message;
  if (!detail.empty()) out += " (" + detail + ")";
  return out;
}

}  // namespace

PgConnection PgConnection::Connect(const PgParams& params) {
  PgConnection conn(net::TcpStream::Connect(params.host, params.port, params.timeout));
  std::string body;
  PutInt32(body, kProtocolVersion);
  PutCString(body, "user");
  PutCString(body, params.user);
  PutCString(body, "database");
  PutCString(body, params.database);
  PutCString(body, "application_name");
  PutCString(body, "scits");
  PutCString(body, "client_encoding");
  PutCString(body, "UTF8");
  body.push_back('\0');
  std::string packet;
  PutInt32(packet, static_cast<std::int32_t>(body.size() + 4));
  packet += body;
  conn.stream_.WriteAll(packet);
  conn.Authenticate(params);
  return conn;
}

PgConnection::Message PgConnection::Read() {
  Message m;
  m.type = static_cast<char>(stream_.ReadByte());
  std::string len_bytes = stream_.ReadString(4);
  std::int32_t len = BodyReader(len_bytes).Int32();
  if (len < 4) throw BackendError("invalid message length from server", false);
  m.body = stream_.ReadString(static_cast<std::size_t>(len - 4));
  return m;
}

void PgConnection::Send(char type, std::string_view body) {
  std::string packet;
  packet.reserve(body.size() + 5);
  packet.push_back(type);
  PutInt32(packet, static_cast<std::int32_t>(body.size() + 4));
  packet.append(body);
  stream_.WriteAll(packet);
}

void PgConnection::Authenticate(const PgParams& params) {
  std::optional<net::ScramSha256> scram;
  for (;;) {
    Message m = Read();
    if (m.type == 'E') throw BackendError(FormatServerError(m.body), false);
    if (m.type != 'R') throw BackendError(std::string("unexpected message '") + m.type +
                                              "' during authentication", false);
    BodyReader r(m.body);
    std::int32_t code = r.Int32();
    if (code == 0) break;
    switch (code) {
      case 3: {  // cleartext
        std::string reply;
        PutCString(reply, params.password);
        Send('p', reply);
        break;
      }
      case 5: {  // MD5
        std::string salt = r.Bytes(4);
        std::string inner = net::Md5Hex(params.password + params.user);
        std::string reply;
        PutCString(reply, "md5" + net::Md5Hex(inner + salt));
        Send('p', reply);
        break;
      }
      case 10: {  // SASL
        bool offered = false;
        while (!r.AtEnd()) {
          std::string mech = r.CString();
          if (mech.empty()) break;
          if (mech == "SCRAM-SHA-256") offered = true;
        }
        if (!offered) throw BackendError("server offers no supported SASL mechanism", false);
        // The server takes the user name from the startup packet.
        scram.emplace("", params.password, net::Base64Encode(net::RandomBytes(18)));
        std::string first = scram->ClientFirstMessage();
        std::string reply;
        PutCString(reply, "SCRAM-SHA-256");
        PutInt32(reply, static_cast<std::int32_t>(first.size()));
        reply += first;
        Send('p', reply);
        break;
      }
      case 11: {  // SASL continue
        if (!scram) throw BackendError("SASL continue without SASL start", false);
        try {
          Send('p', scram->ClientFinalMessage(r.Rest()));
        } catch (const std::runtime_error& e) {
          throw BackendError(e.what(), false);
        }
        break;
      }
      case 12: {  // SASL final
        if (!scram) throw BackendError("SASL final without SASL start", false);
        try {
          scram->VerifyServerFinal(r.Rest());
        } catch (const std::runtime_error& e) {
          throw BackendError(e.what(), false);
        }
        break;
      }
      default:
        throw BackendError("unsupported authentication method " + std::to_string(code), false);
    }
  }

  for (;;) {
    Message m = Read();
    switch (m.type) {
      case 'S': {
        BodyReader r(m.body);
        std::string name = r.CString();
        std::string value = r.CString();
        if (name == "server_version") server_version_ = value;
        break;
      }
      case 'E':
        throw BackendError(FormatServerError(m.body), false);
      case 'Z':
        return;
      default:
        break;  // BackendKeyData, notices
    }
  }
}

PgResult PgConnection::DrainResults() {
  PgResult current;
  PgResult last;
  std::optional<std::string> error;
  for (;;) {
    Message m = Read();
    switch (m.type) {
      case 'T': {
        current = PgResult{};
        BodyReader r(m.body);
        std::int16_t n = r.Int16();
        for (std::int16_t i = 0; i < n; ++i) {
          current.columns.push_back(r.CString());
          r.Bytes(18);  // table oid, attnum, type oid, typlen, typmod, format
        }
        break;
      }
      case 'D': {
        BodyReader r(m.body);
        std::int16_t n = r.Int16();
        std::vector<std::optional<std::string>> row;
        row.reserve(static_cast<std::size_t>(n));
        for (std::int16_t i = 0; i < n; ++i) {
          std::int32_t len = r.Int32();
          if (len < 0) {
            row.emplace_back(std::nullopt);
          } else {
            row.emplace_back(r.Bytes(static_cast<std::size_t>(len)));
          }
        }
        current.rows.push_back(std::move(row));
        break;
      }
      case 'C': {
        current.command_tag = BodyReader(m.body).CString();
        if (!current.columns.empty() || last.columns.empty()) last = std::move(current);
        current = PgResult{};
        break;
      }
      case 'E':
        if (!error) error = FormatServerError(m.body);
        break;
      case 'G':
        // COPY FROM STDIN issued through Query(); refuse it.
        Send('f', std::string("COPY must go through CopyIn") + '\0');
        break;
      case 'Z':
        if (error) throw BackendError(*error, false);
        return last;
      default:
        break;  // EmptyQueryResponse, notices, parameter status
    }
  }
}

PgResult PgConnection::Query(std::string_view sql) {
  std::string body(sql);
  body.push_back('\0');
  Send('Q', body);
  return DrainResults();
}

std::uint64_t PgConnection::CopyIn(std::string_view copy_sql, std::string_view payload) {
  std::string body(copy_sql);
  body.push_back('\0');
  Send('Q', body);

  for (;;) {
    Message m = Read();
    if (m.type == 'G') break;
    if (m.type == 'E') {
      std::string error = FormatServerError(m.body);
      while (Read().type != 'Z') {
      }
      throw BackendError(error, false);
    }
    if (m.type == 'Z') throw BackendError("server did not enter COPY mode", false);
  }

  while (!payload.empty()) {
    std::size_t n = std::min(payload.size(), kCopyChunk);
    Send('d', payload.substr(0, n));
    payload.remove_prefix(n);
  }
  Send('c', {});

  PgResult result = DrainResults();
  const std::string& tag = result.command_tag;
  if (tag.rfind("COPY ", 0) != 0) throw BackendError("unexpected COPY completion '" + tag + "'", false);
  return std::stoull(tag.substr(5));
}

std::string EncodeBinaryCopy(std::span<const SensorRecord> records) {
  std::string out;
  out.reserve(19 + records.size() * 38 + 2);
  out.append("PGCOPY\n\xff\r\n\0", 11);
  PutInt32(out, 0);  // flags
  PutInt32(out, 0);  // header extension length
  for (const auto& r : records) {
    PutInt16(out, 3);
    PutInt32(out, 8);
    PutInt64(out, EpochMillis(r.timestamp) * 1000 - kPgEpochOffsetMicros);
    PutInt32(out, 8);
    PutInt64(out, static_cast<std::int64_t>(r.sensor_id));
    PutInt32(out, 8);
    PutInt64(out, std::bit_cast<std::int64_t>(r.value));
  }
  PutInt16(out, -1);
  return out;
}

}  // namespace scits::pg
