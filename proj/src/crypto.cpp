#include "tsq/crypto.hpp"

namespace tsq::crypto {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

Bytes key_encoding(const SymKey& key) {
  Bytes out;
  out.push_back(static_cast<std::byte>(key.bits >> 8));
  out.push_back(static_cast<std::byte>(key.bits & 0xff));
  Bytes mag = wide_to_bytes(key.value, (key.bits + 7) / 8);
  out.insert(out.end(), mag.begin(), mag.end());
  return out;
}

}  // namespace

void check_width(uint16_t bits) {
  require_config(bits >= kMinWidth && bits <= kMaxWidth,
                 "width must be in [1, 256] bits");
}

Wide Prf::digest_value(std::span<const std::byte> msg, uint16_t out_bits) const {
  check_width(out_bits);
  uint64_t s = mix64(seed_ ^ kGolden);
  size_t n = msg.size();
  uint64_t round = 1;
  size_t i = 0;
  while (i < n) {
    uint64_t block = 0;
    for (int b = 0; b < 8; ++b) {
      block <<= 8;
      if (i + static_cast<size_t>(b) < n)
        block |= static_cast<uint64_t>(msg[i + b]);
    }
    s = mix64(s ^ block ^ (round * kGolden));
    ++round;
    i += 8;
  }
  s = mix64(s ^ (static_cast<uint64_t>(n) * 0xff51afd7ed558ccdULL));

  if (out_bits <= 64) {
    uint64_t limb = mix64(s + kGolden);
    if (out_bits < 64) limb &= (uint64_t{1} << out_bits) - 1;
    return Wide(limb);
  }
  Wide out = 0;
  unsigned nlimbs = (out_bits + 63) / 64;
  for (unsigned j = 0; j < nlimbs; ++j) {
    out <<= 64;
    out |= Wide(mix64(s + (j + 1) * kGolden));
  }
  out &= (Wide(1) << out_bits) - 1;
  return out;
}

SymKey random_key(Rng& rng, uint16_t bits) {
  check_width(bits);
  Wide v = 0;
  for (int have = 0; have < bits; have += 64) {
    v <<= 64;
    v |= Wide(rng.next());
  }
  v &= (Wide(1) << bits) - 1;
  return SymKey{v, bits};
}

SymKey advance_key(const Prf& prf, const SymKey& k, uint32_t steps) {
  check_width(k.bits);
  SymKey cur = k;
  for (uint32_t s = 0; s < steps; ++s) {
    MessageWriter w(MsgTag::KeyChain);
    w.u16(cur.bits);
    w.fixed_wide(cur.value, cur.bits);
    cur.value = prf.digest_value(w.bytes(), cur.bits);
  }
  return cur;
}

Digest keyed_hash(const Prf& prf, const SymKey& key,
                  std::span<const std::byte> body, uint16_t lh) {
  Bytes input = key_encoding(key);
  input.insert(input.end(), body.begin(), body.end());
  return prf.digest(input, lh);
}

SealedPayload seal(const Prf& prf, const SymKey& key, NodeId node, Epoch epoch,
                   std::span<const std::byte> plaintext, uint16_t lh) {
  SealedPayload out;
  out.node = node;
  out.epoch = epoch;
  out.ciphertext.resize(plaintext.size());
  for (size_t i = 0; i < plaintext.size(); i += 8) {
    MessageWriter w(MsgTag::Seal);
    w.u8(0);  // keystream block
    w.u16(key.bits);
    w.fixed_wide(key.value, key.bits);
    w.u32(node);
    w.u32(epoch);
    w.u32(static_cast<uint32_t>(i / 8));
    uint64_t block = static_cast<uint64_t>(prf.digest_value(w.bytes(), 64));
    for (size_t b = 0; b < 8 && i + b < plaintext.size(); ++b) {
      auto ks = static_cast<std::byte>((block >> (56 - 8 * b)) & 0xff);
      out.ciphertext[i + b] = plaintext[i + b] ^ ks;
    }
  }
  MessageWriter t(MsgTag::Seal);
  t.u8(1);  // tag body
  t.u32(node);
  t.u32(epoch);
  t.field(out.ciphertext);
  out.tag = keyed_hash(prf, key, t.bytes(), lh);
  return out;
}

std::optional<Bytes> open(const Prf& prf, const SymKey& key,
                          const SealedPayload& sealed) {
  MessageWriter t(MsgTag::Seal);
  t.u8(1);
  t.u32(sealed.node);
  t.u32(sealed.epoch);
  t.field(sealed.ciphertext);
  Digest expect = keyed_hash(prf, key, t.bytes(), sealed.tag.bits);
  if (!(expect == sealed.tag)) return std::nullopt;

  Bytes plain(sealed.ciphertext.size());
  for (size_t i = 0; i < sealed.ciphertext.size(); i += 8) {
    MessageWriter w(MsgTag::Seal);
    w.u8(0);
    w.u16(key.bits);
    w.fixed_wide(key.value, key.bits);
    w.u32(sealed.node);
    w.u32(sealed.epoch);
    w.u32(static_cast<uint32_t>(i / 8));
    uint64_t block = static_cast<uint64_t>(prf.digest_value(w.bytes(), 64));
    for (size_t b = 0; b < 8 && i + b < plain.size(); ++b) {
      auto ks = static_cast<std::byte>((block >> (56 - 8 * b)) & 0xff);
      plain[i + b] = sealed.ciphertext[i + b] ^ ks;
    }
  }
  return plain;
}

Digest order_seed(const Prf& prf, const SymKey& key, NodeId node, uint16_t lh) {
  MessageWriter w(MsgTag::Seed);
  w.u8(0);  // order seed
  w.u32(node);
  return keyed_hash(prf, key, w.bytes(), lh);
}

}  // namespace tsq::crypto
