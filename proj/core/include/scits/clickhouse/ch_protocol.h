#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scits::ch {

// Protocol revision this client speaks. The server answers in the lower of
// its own and ours, so every revision-gated field below this one is present
// and nothing newer is.
inline constexpr std::uint64_t kClientRevision = 54405;

inline constexpr std::uint64_t kRevisionWithTemporaryTables = 50264;
inline constexpr std::uint64_t kRevisionWithTotalRowsInProgress = 51554;
inline constexpr std::uint64_t kRevisionWithBlockInfo = 51903;
inline constexpr std::uint64_t kRevisionWithClientInfo = 54032;
inline constexpr std::uint64_t kRevisionWithServerTimezone = 54058;
inline constexpr std::uint64_t kRevisionWithQuotaKeyInClientInfo = 54060;
inline constexpr std::uint64_t kRevisionWithServerDisplayName = 54372;
inline constexpr std::uint64_t kRevisionWithVersionPatch = 54401;
inline constexpr std::uint64_t kRevisionWithClientWriteInfo = 54420;

namespace client_code {
inline constexpr std::uint64_t kHello = 0;
inline constexpr std::uint64_t kQuery = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kPing = 4;
}  // namespace client_code

namespace server_code {
inline constexpr std::uint64_t kHello = 0;
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kException = 2;
inline constexpr std::uint64_t kProgress = 3;
inline constexpr std::uint64_t kPong = 4;
inline constexpr std::uint64_t kEndOfStream = 5;
inline constexpr std::uint64_t kProfileInfo = 6;
inline constexpr std::uint64_t kTotals = 7;
inline constexpr std::uint64_t kExtremes = 8;
inline constexpr std::uint64_t kLog = 10;
inline constexpr std::uint64_t kTableColumns = 11;
inline constexpr std::uint64_t kProfileEvents = 14;
}  // namespace server_code

inline constexpr std::uint64_t kStageComplete = 2;

// Appends native-format primitives to a byte buffer.
class WireWriter {
 public:
  void VarUInt(std::uint64_t v);
  void String(std::string_view s);
  void UInt8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void Int32(std::int32_t v) { Fixed(&v, sizeof(v)); }
  void Int64(std::int64_t v) { Fixed(&v, sizeof(v)); }
  void UInt64(std::uint64_t v) { Fixed(&v, sizeof(v)); }
  void Float64(double v) { Fixed(&v, sizeof(v)); }
  void Raw(std::string_view bytes) { buf_.append(bytes); }

  const std::string& bytes() const { return buf_; }
  std::string Take() { return std::move(buf_); }

 private:
  // Native format is little-endian; so is every supported host.
  void Fixed(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

// Source of bytes for WireReader: a socket in production, a string in tests.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual void Read(void* out, std::size_t n) = 0;
};

class WireReader {
 public:
  explicit WireReader(ByteSource& src) : src_(src) {}

  std::uint64_t VarUInt();
  std::string String();
  std::string Bytes(std::size_t n);
  std::uint8_t UInt8();
  std::int32_t Int32();

 private:
  ByteSource& src_;
};

// One column of a native block: raw little-endian payload, not yet decoded.
struct Column {
  std::string name;
  std::string type;
  std::string data;
};

struct Block {
  std::uint64_t rows = 0;
  std::vector<Column> columns;
};

// Serializes a block (block info, dimensions, columns) without the packet
// header or temporary-table name.
void WriteBlock(WireWriter& w, const Block& block);

// Reads a block, sizing each column's payload from its type name. Supports
// (U)Int8-64, Float32/64, Date, DateTime, DateTime64, String and Nullable(T).
// Throws std::runtime_error for anything else.
Block ReadBlock(WireReader& r);

// Typed views over a column. Nullable(Float64) yields nullopt for NULL rows;
// NaN is passed through.
std::vector<std::int64_t> ColumnAsInt64(const Column& c, std::uint64_t rows);
std::vector<std::uint64_t> ColumnAsUInt64(const Column& c, std::uint64_t rows);
std::vector<std::optional<double>> ColumnAsFloat64(const Column& c, std::uint64_t rows);

}  // namespace scits::ch
