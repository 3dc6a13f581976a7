#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "tsq/bytes.hpp"
#include "tsq/common.hpp"
#include "tsq/crypto.hpp"
#include "tsq/rng.hpp"

using namespace tsq;
using namespace tsq::crypto;

namespace {

Bytes msg(std::initializer_list<uint8_t> v) {
  Bytes out;
  for (uint8_t b : v) out.push_back(static_cast<std::byte>(b));
  return out;
}

}  // namespace

TEST_CASE("check_width accepts [1,256] and rejects the rest") {
  CHECK_THROWS_AS(check_width(0), ConfigError);
  CHECK_NOTHROW(check_width(1));
  CHECK_NOTHROW(check_width(256));
  CHECK_THROWS_AS(check_width(257), ConfigError);
}

TEST_CASE("digest is deterministic, seed-keyed, and width-masked") {
  Prf p1(11), p2(11), p3(12);
  Bytes m = msg({1, 2, 3, 4, 5});
  for (uint16_t bits : {1, 7, 8, 63, 64, 65, 80, 128, 255, 256}) {
    Wide a = p1.digest_value(m, bits);
    CHECK(a == p2.digest_value(m, bits));
    CHECK(a >= 0);
    CHECK(a < (Wide(1) << bits));
  }
  CHECK(p1.digest_value(m, 64) != p3.digest_value(m, 64));

  Digest d = p1.digest(m, 80);
  CHECK(d.bits == 80);
  CHECK(d.value == p1.digest_value(m, 80));
}

TEST_CASE("digest separates nearby messages") {
  Prf p(5);
  Bytes a = msg({0, 0, 0, 0, 0, 0, 0, 0});
  Bytes b = msg({0, 0, 0, 0, 0, 0, 0});   // shorter by one zero byte
  Bytes c = msg({0, 0, 0, 0, 0, 0, 0, 1});  // one bit of difference
  CHECK(p.digest_value(a, 64) != p.digest_value(b, 64));
  CHECK(p.digest_value(a, 64) != p.digest_value(c, 64));
  CHECK(p.digest_value(b, 64) != p.digest_value(c, 64));
  CHECK(p.digest_value(Bytes{}, 64) != p.digest_value(a, 64));
}

TEST_CASE("random_key honors the width") {
  Rng rng(7);
  for (uint16_t bits : {1, 2, 8, 16, 64, 65, 128, 256}) {
    SymKey k = random_key(rng, bits);
    CHECK(k.bits == bits);
    CHECK(k.value >= 0);
    CHECK(k.value < (Wide(1) << bits));
  }
  CHECK_THROWS_AS(random_key(rng, 0), ConfigError);
  CHECK_THROWS_AS(random_key(rng, 300), ConfigError);

  // 1-bit keys hit both values
  bool saw0 = false, saw1 = false;
  for (int i = 0; i < 64; ++i) {
    Wide v = random_key(rng, 1).value;
    saw0 |= (v == 0);
    saw1 |= (v == 1);
  }
  CHECK(saw0);
  CHECK(saw1);
}

TEST_CASE("advance_key composes and matches a manual replay") {
  Prf prf(21);
  Rng rng(22);
  SymKey k = random_key(rng, 48);

  SymKey same = advance_key(prf, k, 0);
  CHECK(same == k);

  // independent replay of the chain step from the documented encoding
  SymKey cur = k;
  for (int s = 0; s < 3; ++s) {
    MessageWriter w(MsgTag::KeyChain);
    w.u16(cur.bits);
    w.fixed_wide(cur.value, cur.bits);
    cur.value = prf.digest_value(w.bytes(), cur.bits);
  }
  CHECK(advance_key(prf, k, 3) == cur);

  // s-fold application composes
  CHECK(advance_key(prf, advance_key(prf, k, 1), 2) == advance_key(prf, k, 3));
  CHECK(advance_key(prf, k, 5).bits == 48);
}

TEST_CASE("advance_key walks forward, not in a short cycle") {
  Prf prf(31);
  Rng rng(32);
  SymKey k = random_key(rng, 64);
  SymKey a = advance_key(prf, k, 1);
  SymKey b = advance_key(prf, k, 2);
  CHECK(k != a);
  CHECK(a != b);
  CHECK(k != b);
}

TEST_CASE("keyed_hash separates keys and bodies") {
  Prf prf(41);
  Rng rng(42);
  SymKey k1 = random_key(rng, 64), k2 = random_key(rng, 64);
  Bytes body1 = msg({9, 9, 9}), body2 = msg({9, 9, 8});
  Digest d = keyed_hash(prf, k1, body1, 80);
  CHECK(d.bits == 80);
  CHECK(d == keyed_hash(prf, k1, body1, 80));
  CHECK(d != keyed_hash(prf, k2, body1, 80));
  CHECK(d != keyed_hash(prf, k1, body2, 80));
}

TEST_CASE("order_seed is per-node and deterministic") {
  Prf prf(51);
  Rng rng(52);
  SymKey k = random_key(rng, 64);
  Digest d1 = order_seed(prf, k, 1, 32);
  CHECK(d1 == order_seed(prf, k, 1, 32));
  CHECK(d1 != order_seed(prf, k, 2, 32));
  CHECK(d1.value < (Wide(1) << 32));
}

TEST_CASE("seal/open round-trips every length and rejects tampering") {
  Prf prf(61);
  Rng rng(62);
  for (size_t len : {size_t{0}, size_t{1}, size_t{7}, size_t{8}, size_t{9},
                     size_t{63}, size_t{64}, size_t{65}, size_t{256}}) {
    SymKey k = random_key(rng, 80);
    Bytes plain(len);
    for (size_t i = 0; i < len; ++i)
      plain[i] = static_cast<std::byte>(rng.below(256));

    SealedPayload sp = seal(prf, k, 3, 7, plain, 80);
    CHECK(sp.node == 3);
    CHECK(sp.epoch == 7);
    CHECK(sp.tag.bits == 80);
    CHECK(sp.ciphertext.size() == len);
    if (len > 0) CHECK(sp.ciphertext != plain);

    auto back = open(prf, k, sp);
    REQUIRE(back.has_value());
    CHECK(*back == plain);

    // wrong key
    SymKey k2 = random_key(rng, 80);
    CHECK_FALSE(open(prf, k2, sp).has_value());

    if (len > 0) {
      SealedPayload bad = sp;
      bad.ciphertext[0] ^= std::byte{1};
      CHECK_FALSE(open(prf, k, bad).has_value());
    }
    SealedPayload badtag = sp;
    badtag.tag.value ^= 1;
    CHECK_FALSE(open(prf, k, badtag).has_value());

    SealedPayload badnode = sp;
    badnode.node = 4;
    CHECK_FALSE(open(prf, k, badnode).has_value());

    SealedPayload badepoch = sp;
    badepoch.epoch = 8;
    CHECK_FALSE(open(prf, k, badepoch).has_value());
  }
}

TEST_CASE("sealing is deterministic per (key, node, epoch, plaintext)") {
  Prf prf(71);
  Rng rng(72);
  SymKey k = random_key(rng, 128);
  Bytes plain = msg({1, 2, 3, 4, 5, 6, 7, 8, 9});
  SealedPayload a = seal(prf, k, 2, 5, plain, 80);
  SealedPayload b = seal(prf, k, 2, 5, plain, 80);
  CHECK(a.ciphertext == b.ciphertext);
  CHECK(a.tag == b.tag);

  // epoch changes the keystream, not just the tag
  SealedPayload c = seal(prf, k, 2, 6, plain, 80);
  CHECK(a.ciphertext != c.ciphertext);
}

TEST_CASE("digest bins are balanced") {
  // 8-bit truncation over 65536 distinct messages; df = 255, the 0.001
  // quantile of chi-square(255) is about 330.5.
  Prf prf(81);
  std::vector<int> count(256, 0);
  for (uint32_t i = 0; i < 65536; ++i) {
    MessageWriter w(MsgTag::Seed);
    w.u32(i);
    ++count[static_cast<uint8_t>(prf.digest_value(w.bytes(), 8))];
  }
  double expect = 65536.0 / 256.0;
  double chi2 = 0;
  for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 330.5);
}
