#pragma once

#include <optional>
#include <span>

#include "tsq/bytes.hpp"
#include "tsq/common.hpp"
#include "tsq/rng.hpp"

namespace tsq::crypto {

inline constexpr uint16_t kMinWidth = 1;
inline constexpr uint16_t kMaxWidth = 256;

// Epoch key, value < 2^bits. Widths are configurable 8..256 bits.
struct SymKey {
  Wide value;
  uint16_t bits = 0;

  bool operator==(const SymKey&) const = default;
};

struct Digest {
  Wide value;
  uint16_t bits = 0;

  bool operator==(const Digest&) const = default;
};

// Seedable deterministic PRF over canonical byte encodings, truncated to the
// requested output width. Absorb/expand construction on the splitmix64
// finalizer; a simulation reference, not a hardened primitive. The whole
// scenario shares one instance parameterized by a 64-bit seed.
class Prf {
 public:
  explicit Prf(uint64_t seed) : seed_(seed) {}

  Wide digest_value(std::span<const std::byte> msg, uint16_t out_bits) const;

  Digest digest(std::span<const std::byte> msg, uint16_t out_bits) const {
    return Digest{digest_value(msg, out_bits), out_bits};
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
};

void check_width(uint16_t bits);

// Draw a uniform key of the given width from an Rng stream.
SymKey random_key(Rng& rng, uint16_t bits);

// s-fold application of the one-way chain hash; 0 steps returns k unchanged.
// Output width equals the input key width.
SymKey advance_key(const Prf& prf, const SymKey& k, uint32_t steps);

// Keyed hash: PRF over (key encoding || body). The body carries its own
// domain tag; output is lh bits.
Digest keyed_hash(const Prf& prf, const SymKey& key,
                  std::span<const std::byte> body, uint16_t lh);

// Order seed hash_K(i); doubles as the witness-selection value.
Digest order_seed(const Prf& prf, const SymKey& key, NodeId node, uint16_t lh);

// Authenticated sealed payload: keystream XOR plus a keyed tag binding
// (node, epoch, ciphertext).
struct SealedPayload {
  NodeId node = 0;
  Epoch epoch = 0;
  Bytes ciphertext;
  Digest tag;
};

SealedPayload seal(const Prf& prf, const SymKey& key, NodeId node, Epoch epoch,
                   std::span<const std::byte> plaintext, uint16_t lh);

// Returns the plaintext, or nullopt when the tag does not authenticate.
std::optional<Bytes> open(const Prf& prf, const SymKey& key,
                          const SealedPayload& sealed);

}  // namespace tsq::crypto
