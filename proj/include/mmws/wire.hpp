#pragma once

// Binary envelope framing. Everything on the wire is little-endian:
//   magic "MWB1" | tag u32 | source u32 | dest u32 | payload_kind u8 |
//   element_count u64 | payload (element_count 64-bit values)
// The format is fixed; golden byte tests depend on it.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <variant>
#include <vector>

#include "mmws/error.hpp"

namespace mmws {

enum class PayloadKind : std::uint8_t { int64_scalar = 0, float64_array = 1 };

inline constexpr std::uint8_t kWireMagic[4] = {0x4D, 0x57, 0x42, 0x31};  // "MWB1"
inline constexpr std::size_t kWireHeaderSize = 4 + 4 + 4 + 4 + 1 + 8;

struct Envelope {
  std::uint32_t tag = 0;
  std::uint32_t source = 0;
  std::uint32_t dest = 0;
  std::variant<std::int64_t, std::vector<double>> payload;

  PayloadKind kind() const {
    return payload.index() == 0 ? PayloadKind::int64_scalar : PayloadKind::float64_array;
  }
  std::uint64_t element_count() const {
    return payload.index() == 0 ? 1 : std::get<1>(payload).size();
  }
};

namespace detail {

inline void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Parsed fixed-size header; the payload follows as element_count 64-bit words.
struct WireHeader {
  std::uint32_t tag;
  std::uint32_t source;
  std::uint32_t dest;
  PayloadKind kind;
  std::uint64_t element_count;
};

inline WireHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireHeaderSize) throw ProtocolError("envelope header truncated");
  if (std::memcmp(bytes.data(), kWireMagic, 4) != 0)
    throw ProtocolError("envelope magic mismatch");
  WireHeader h;
  h.tag = detail::get_u32_le(bytes.data() + 4);
  h.source = detail::get_u32_le(bytes.data() + 8);
  h.dest = detail::get_u32_le(bytes.data() + 12);
  const std::uint8_t kind = bytes[16];
  if (kind > 1) throw ProtocolError("unknown payload kind " + std::to_string(kind));
  h.kind = static_cast<PayloadKind>(kind);
  h.element_count = detail::get_u64_le(bytes.data() + 17);
  if (h.kind == PayloadKind::int64_scalar && h.element_count != 1)
    throw ProtocolError("scalar envelope must carry exactly one element");
  return h;
}

/// Builds the full payload from the 64-bit words following a header.
inline Envelope assemble_envelope(const WireHeader& h, std::span<const std::uint8_t> body) {
  if (body.size() != h.element_count * 8) throw ProtocolError("envelope payload truncated");
  Envelope env;
  env.tag = h.tag;
  env.source = h.source;
  env.dest = h.dest;
  if (h.kind == PayloadKind::int64_scalar) {
    env.payload = static_cast<std::int64_t>(detail::get_u64_le(body.data()));
  } else {
    std::vector<double> values(h.element_count);
    for (std::uint64_t i = 0; i < h.element_count; ++i) {
      values[i] = std::bit_cast<double>(detail::get_u64_le(body.data() + i * 8));
    }
    env.payload = std::move(values);
  }
  return env;
}

inline std::vector<std::uint8_t> encode_envelope(const Envelope& env) {
  std::vector<std::uint8_t> out = {kWireMagic[0], kWireMagic[1], kWireMagic[2], kWireMagic[3]};
  out.reserve(kWireHeaderSize + env.element_count() * 8);
  detail::put_u32_le(out, env.tag);
  detail::put_u32_le(out, env.source);
  detail::put_u32_le(out, env.dest);
  out.push_back(static_cast<std::uint8_t>(env.kind()));
  detail::put_u64_le(out, env.element_count());
  if (env.kind() == PayloadKind::int64_scalar) {
    detail::put_u64_le(out, static_cast<std::uint64_t>(std::get<0>(env.payload)));
  } else {
    for (double d : std::get<1>(env.payload)) {
      detail::put_u64_le(out, std::bit_cast<std::uint64_t>(d));
    }
  }
  return out;
}

inline Envelope decode_envelope(std::span<const std::uint8_t> bytes) {
  const WireHeader h = decode_header(bytes);
  return assemble_envelope(h, bytes.subspan(kWireHeaderSize));
}

}  // namespace mmws
