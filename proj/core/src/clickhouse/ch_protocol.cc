#include "scits/clickhouse/ch_protocol.h"

#include <cstring>
#include <stdexcept>

namespace scits::ch {
namespace {

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::optional<std::size_t> FixedWidth(std::string_view type) {
  if (type == "UInt8" || type == "Int8" || type == "Bool") return 1;
  if (type == "UInt16" || type == "Int16" || type == "Date") return 2;
  if (type == "UInt32" || type == "Int32" || type == "Float32" || type == "DateTime" ||
      StartsWith(type, "DateTime(")) {
    return 4;
  }
  if (type == "UInt64" || type == "Int64" || type == "Float64" || StartsWith(type, "DateTime64(")) {
    return 8;
  }
  return std::nullopt;
}

std::string_view NullableInner(std::string_view type) {
  constexpr std::string_view kPrefix = "Nullable(";
  if (StartsWith(type, kPrefix) && type.back() == ')') {
    return type.substr(kPrefix.size(), type.size() - kPrefix.size() - 1);
  }
  return {};
}

void ReadColumnData(WireReader& r, std::string_view type, std::uint64_t rows, std::string& out) {
  if (auto inner = NullableInner(type); !inner.empty()) {
    out += r.Bytes(rows);  // null map
    ReadColumnData(r, inner, rows, out);
    return;
  }
  if (auto width = FixedWidth(type)) {
    out += r.Bytes(*width * rows);
    return;
  }
  if (type == "String") {
    WireWriter w;
    for (std::uint64_t i = 0; i < rows; ++i) w.String(r.String());
    out += w.Take();
    return;
  }
  throw std::runtime_error("unsupported column type '" + std::string(type) + "'");
}

template <typename T>
T Load(const std::string& data, std::size_t offset) {
  if (offset + sizeof(T) > data.size()) throw std::runtime_error("column payload too short");
  T v;
  std::memcpy(&v, data.data() + offset, sizeof(T));
  return v;
}

std::int64_t LoadInteger(std::string_view type, const std::string& data, std::size_t row) {
  if (type == "Int64" || StartsWith(type, "DateTime64(")) return Load<std::int64_t>(data, row * 8);
  if (type == "UInt64") return static_cast<std::int64_t>(Load<std::uint64_t>(data, row * 8));
  if (type == "Int32") return Load<std::int32_t>(data, row * 4);
  if (type == "UInt32" || type == "DateTime" || StartsWith(type, "DateTime(")) {
    return Load<std::uint32_t>(data, row * 4);
  }
  if (type == "Int16") return Load<std::int16_t>(data, row * 2);
  if (type == "UInt16" || type == "Date") return Load<std::uint16_t>(data, row * 2);
  if (type == "Int8") return Load<std::int8_t>(data, row);
  if (type == "UInt8" || type == "Bool") return Load<std::uint8_t>(data, row);
  throw std::runtime_error("column type '" + std::string(type) + "' is not an integer");
}

}  // namespace

void WireWriter::VarUInt(std::uint64_t v) {
  while (v >= 0x80) {
    buf_.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  buf_.push_back(static_cast<char>(v));
}

void WireWriter::String(std::string_view s) {
  VarUInt(s.size());
  buf_.append(s);
}

std::uint64_t WireReader::VarUInt() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    std::uint8_t b = UInt8();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw std::runtime_error("VarUInt too long");
}

std::string WireReader::String() {
  std::uint64_t n = VarUInt();
  if (n > (1ULL << 30)) throw std::runtime_error("string length out of range");
  return Bytes(n);
}

std::string WireReader::Bytes(std::size_t n) {
  std::string s(n, '\0');
  if (n > 0) src_.Read(s.data(), n);
  return s;
}

std::uint8_t WireReader::UInt8() {
  std::uint8_t b;
  src_.Read(&b, 1);
  return b;
}

std::int32_t WireReader::Int32() {
  std::int32_t v;
  src_.Read(&v, sizeof(v));
  return v;
}

void WriteBlock(WireWriter& w, const Block& block) {
  w.VarUInt(1);
  w.UInt8(0);  // is_overflows
  w.VarUInt(2);
  w.Int32(-1);  // bucket_num
  w.VarUInt(0);
  w.VarUInt(block.columns.size());
  w.VarUInt(block.rows);
  for (const auto& c : block.columns) {
    w.String(c.name);
    w.String(c.type);
    w.Raw(c.data);
  }
}

Block ReadBlock(WireReader& r) {
  for (;;) {
    std::uint64_t field = r.VarUInt();
    if (field == 0) break;
    if (field == 1) {
      r.UInt8();
    } else if (field == 2) {
      r.Int32();
    } else {
      throw std::runtime_error("unknown block info field " + std::to_string(field));
    }
  }
  Block block;
  std::uint64_t num_columns = r.VarUInt();
  block.rows = r.VarUInt();
  for (std::uint64_t i = 0; i < num_columns; ++i) {
    Column c;
    c.name = r.String();
    c.type = r.String();
    ReadColumnData(r, c.type, block.rows, c.data);
    block.columns.push_back(std::move(c));
  }
  return block;
}

std::vector<std::int64_t> ColumnAsInt64(const Column& c, std::uint64_t rows) {
  std::vector<std::int64_t> out(rows);
  for (std::uint64_t i = 0; i < rows; ++i) out[i] = LoadInteger(c.type, c.data, i);
  return out;
}

std::vector<std::uint64_t> ColumnAsUInt64(const Column& c, std::uint64_t rows) {
  std::vector<std::uint64_t> out(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    out[i] = static_cast<std::uint64_t>(LoadInteger(c.type, c.data, i));
  }
  return out;
}

std::vector<std::optional<double>> ColumnAsFloat64(const Column& c, std::uint64_t rows) {
  std::string_view type = c.type;
  std::size_t offset = 0;
  bool nullable = false;
  if (auto inner = NullableInner(type); !inner.empty()) {
    nullable = true;
    type = inner;
    offset = rows;
  }
  std::vector<std::optional<double>> out(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    if (nullable && c.data.at(i) != 0) continue;
    if (type == "Float64") {
      out[i] = Load<double>(c.data, offset + i * 8);
    } else if (type == "Float32") {
      out[i] = Load<float>(c.data, offset + i * 4);
    } else {
      throw std::runtime_error("column type '" + c.type + "' is not a float");
    }
  }
  return out;
}

}  // namespace scits::ch
