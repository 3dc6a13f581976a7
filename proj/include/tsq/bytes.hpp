#pragma once

#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

#include "tsq/common.hpp"

namespace tsq {

using Bytes = std::vector<std::byte>;

// One-byte domain tags so byte encodings of different message kinds never collide.
enum class MsgTag : uint8_t {
  KeyChain = 0x01,   // key-chain advancement input
  BucketSum = 0x02,  // keyed-hash bodies over integer sums (local and aggregate)
  Subtree = 0x03,    // subtree proof transport payload
  Seed = 0x04,       // order seeds, verification seeds, seed concatenations
  Traceback = 0x05,  // per-hop traceback hash bodies
  Seal = 0x06,       // payload sealing (keystream + tag)
};

// Canonical serializer: integers big-endian fixed width, variable-length
// fields length-prefixed, one leading domain tag per message.
class MessageWriter {
 public:
  explicit MessageWriter(MsgTag tag) { u8(static_cast<uint8_t>(tag)); }

  void u8(uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }
  void u16(uint16_t v) { be(v, 2); }
  void u32(uint32_t v) { be(v, 4); }
  void u64(uint64_t v) { be(v, 8); }

  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }

  // Length-prefixed raw field.
  void field(std::span<const std::byte> data) {
    u32(static_cast<uint32_t>(data.size()));
    buf_.insert(buf_.end(), data.begin(), data.end());
  }

  // Length-prefixed big-endian magnitude of a nonnegative integer.
  void wide(const Wide& v);

  // Fixed-width big-endian value occupying ceil(bits/8) bytes.
  void fixed_wide(const Wide& v, uint16_t bits);

  std::span<const std::byte> bytes() const { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  void be(uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i)
      buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }

  Bytes buf_;
};

// Big-endian magnitude, exactly nbytes long (value must fit).
Bytes wide_to_bytes(const Wide& v, size_t nbytes);
Wide wide_from_bytes(std::span<const std::byte> data);

}  // namespace tsq
