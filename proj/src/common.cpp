#include "tsq/common.hpp"

namespace tsq {

unsigned ceil_log2(uint64_t n) {
  require(n >= 1, "ceil_log2 needs n >= 1");
  unsigned bits = 0;
  uint64_t v = 1;
  while (v < n) {
    v <<= 1;
    ++bits;
  }
  return bits;
}

}  // namespace tsq
