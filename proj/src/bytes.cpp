#include "tsq/bytes.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace tsq {

Bytes wide_to_bytes(const Wide& v, size_t nbytes) {
  require(v >= 0, "wide_to_bytes: negative value");
  Bytes out(nbytes, std::byte{0});
  Wide rest = v;
  size_t i = nbytes;
  while (rest != 0) {
    require(i > 0, "wide_to_bytes: value does not fit");
    out[--i] = static_cast<std::byte>(static_cast<unsigned>(rest & 0xff));
    rest >>= 8;
  }
  return out;
}

Wide wide_from_bytes(std::span<const std::byte> data) {
  Wide v = 0;
  for (std::byte b : data) {
    v <<= 8;
    v |= static_cast<unsigned>(b);
  }
  return v;
}

void MessageWriter::wide(const Wide& v) {
  size_t nbytes = v == 0 ? 0 : (bit_length(v) + 7) / 8;
  Bytes mag = wide_to_bytes(v, nbytes);
  field(mag);
}

void MessageWriter::fixed_wide(const Wide& v, uint16_t bits) {
  Bytes mag = wide_to_bytes(v, (bits + 7) / 8);
  buf_.insert(buf_.end(), mag.begin(), mag.end());
}

}  // namespace tsq
