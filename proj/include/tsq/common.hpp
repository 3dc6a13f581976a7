#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace tsq {

// Unbounded integer used for prime products and wide key/digest values.
using Wide = boost::multiprecision::cpp_int;

using NodeId = uint32_t;
using Epoch = uint32_t;

// The storage node is always node 0; sensors are 1..N-1.
inline constexpr NodeId kStorageNode = 0;

// Bad scenario/query/script input supplied by the user. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal contract breach (a bug, not bad input). CLI maps this to exit code 3.
struct InvariantViolation : std::logic_error {
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// Bit length of a nonnegative integer (0 -> 0 bits).
inline unsigned bit_length(const Wide& v) {
  if (v == 0) return 0;
  return static_cast<unsigned>(boost::multiprecision::msb(v)) + 1;
}

// Smallest L with 2^L >= n, i.e. ceil(log2 n) for n >= 1.
unsigned ceil_log2(uint64_t n);

}  // namespace tsq
