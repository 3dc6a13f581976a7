#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "doctest.h"
#include "support/helpers.hpp"
#include "tsq/bytes.hpp"
#include "tsq/common.hpp"
#include "tsq/proofs.hpp"
#include "tsq/rng.hpp"

using namespace tsq;
using namespace tsq::proofs;
using testsup::LineWorld;
using testsup::bid;

namespace {

Bytes sum_body(uint8_t subkind, const Wide& sum) {
  MessageWriter w(MsgTag::BucketSum);
  w.u8(subkind);
  w.wide(sum);
  return std::move(w).take();
}

}  // namespace

TEST_CASE("first_primes returns the prime sequence") {
  CHECK(first_primes(10) ==
        std::vector<uint64_t>{2, 3, 5, 7, 11, 13, 17, 19, 23, 29});
  CHECK(first_primes(1) == std::vector<uint64_t>{2});
  CHECK(first_primes(1000).back() == 7919);
}

TEST_CASE("label indexing round-trips with the empty label first") {
  auto s = buckets::BucketingScheme::uniform(
      buckets::AttributeDomain::continuous(0, 1, 3), 2);
  CHECK(label_count(s) == 10);
  CHECK(label_index(s, empty_label()) == 0);
  CHECK_FALSE(label_at(s, 0).has_value());
  for (size_t idx = 0; idx < label_count(s); ++idx)
    CHECK(label_index(s, label_at(s, idx)) == idx);
  CHECK(label_index(s, BucketLabel{bid({1, 1})}) == 1);
  CHECK(label_index(s, BucketLabel{bid({3, 3})}) == 9);
}

TEST_CASE("prime registry lays sensors out first and the storage node last") {
  auto s = buckets::BucketingScheme::uniform(
      buckets::AttributeDomain::continuous(0, 1, 2), 1);
  auto reg = PrimeRegistry::build(s, 3);  // labels = 3, primes = 9
  CHECK(reg.labels_per_node() == 3);
  CHECK(reg.nodes() == 3);
  REQUIRE(reg.primes().size() == 9);

  CHECK(reg.prime(1, empty_label()) == 2);
  CHECK(reg.prime(1, bid({1})) == 3);
  CHECK(reg.prime(1, bid({2})) == 5);
  CHECK(reg.prime(2, empty_label()) == 7);
  CHECK(reg.prime(2, bid({2})) == 13);
  CHECK(reg.prime(0, empty_label()) == 17);
  CHECK(reg.prime(0, bid({2})) == 23);

  const auto* o = reg.owner(23);
  REQUIRE(o != nullptr);
  CHECK(o->node == 0);
  CHECK(o->label == BucketLabel{bid({2})});
  CHECK(reg.owner(29) == nullptr);  // foreign prime

  // every registry prime maps back to a unique (node, label)
  for (uint64_t p : reg.primes()) {
    const auto* own = reg.owner(p);
    REQUIRE(own != nullptr);
    CHECK(reg.prime(own->node, own->label) == p);
  }
  CHECK_THROWS_AS(reg.prime(3, empty_label()), InvariantViolation);
  CHECK_THROWS_AS(reg.prime(1, bid({3})), InvariantViolation);
}

TEST_CASE("contribution table counts and bucket totals") {
  ContributionTable t;
  t.add(1, bid({1, 1}), 2);
  t.add(2, bid({1, 1}));
  t.add(2, bid({2, 1}));
  t.add(3, empty_label());
  t.add(3, empty_label(), 0);  // zero-count adds are dropped
  CHECK(t.count(1, bid({1, 1})) == 2);
  CHECK(t.count(2, bid({1, 1})) == 1);
  CHECK(t.count(1, bid({2, 1})) == 0);
  CHECK(t.count(3, empty_label()) == 1);
  CHECK(t.bucket_total(bid({1, 1})) == 3);
  CHECK(t.bucket_total(bid({2, 2})) == 0);
  CHECK(t.nonempty_buckets() ==
        std::vector<buckets::BucketId>{bid({1, 1}), bid({2, 1})});

  ContributionTable u = t;
  CHECK(u == t);
  u.add(1, bid({1, 1}));
  CHECK_FALSE(u == t);
}

TEST_CASE("local proof multiplies per-item primes and hashes the key sum") {
  LineWorld w(3, 2, 1, 32, 1001);
  const auto& keys = w.states[1];

  std::vector<buckets::BucketId> data = {bid({1}), bid({1}), bid({2})};
  LocalProof lp = local_proof(w.prf, keys, w.registry, w.scheme, data, 64);
  CHECK(lp.P == Wide(3 * 3 * 5));

  // independent replay of the digest from the documented construction
  Wide sum = keys.bucket[label_index(w.scheme, bid({1}))].value * 2 +
             keys.bucket[label_index(w.scheme, bid({2}))].value;
  Digest expect = crypto::keyed_hash(w.prf, keys.master, sum_body(0, sum), 64);
  CHECK(lp.H == expect);

  // no data: the empty-label chain speaks for the node
  LocalProof none = local_proof(w.prf, keys, w.registry, w.scheme, {}, 64);
  CHECK(none.P == Wide(2));
  Wide esum = keys.bucket[0].value;
  CHECK(none.H == crypto::keyed_hash(w.prf, keys.master, sum_body(0, esum), 64));
}

TEST_CASE("aggregation is order-invariant in the children") {
  LineWorld w(4, 2, 1, 32, 1002);
  Rng rng(5);
  std::vector<Digest> kids;
  for (int i = 0; i < 3; ++i)
    kids.push_back(Digest{Wide(rng.next()), 64});
  Digest own{Wide(rng.next()), 64};
  SymKey master = w.states[1].master;

  Digest d1 = aggregate_digest(w.prf, master, kids, own, 64);
  std::vector<Digest> rev(kids.rbegin(), kids.rend());
  Digest d2 = aggregate_digest(w.prf, master, rev, own, 64);
  CHECK(d1 == d2);

  std::vector<Wide> prods = {Wide(6), Wide(10), Wide(15)};
  CHECK(aggregate_product(prods, Wide(7)) == Wide(6300));
  CHECK(aggregate_product({}, Wide(7)) == Wide(7));
}

TEST_CASE("factorize recovers the exact contribution table") {
  LineWorld w(3, 2, 1, 32, 1003);
  // node1: bucket(1) twice and bucket(2) once; node2 and node0 idle
  Wide P = Wide(3) * 3 * 5 * 7 * 17;
  auto res = factorize(P, w.registry);
  CHECK(res.complete);
  CHECK(res.residual == 1);
  ContributionTable want;
  want.add(1, bid({1}), 2);
  want.add(1, bid({2}), 1);
  want.add(2, empty_label(), 1);
  want.add(0, empty_label(), 1);
  CHECK(res.table == want);

  // a factor outside the registry stays in the residual
  auto bad = factorize(P * 29, w.registry);
  CHECK_FALSE(bad.complete);
  CHECK(bad.residual == 29);
  CHECK(bad.table == want);

  CHECK(factorize(Wide(1), w.registry).complete);
  CHECK_THROWS_AS(factorize(Wide(0), w.registry), InvariantViolation);
}

TEST_CASE("key schedule and node states advance in lockstep") {
  LineWorld w(4, 2, 2, 24, 1004);
  auto states = w.states;
  for (Epoch t = 0; t <= 5; ++t) {
    for (uint32_t i = 0; i < 4; ++i) {
      CHECK(states[i].epoch == t);
      CHECK(w.schedule.master_at(i, t) == states[i].master);
      for (size_t l = 0; l < states[i].bucket.size(); ++l)
        CHECK(w.schedule.bucket_key_at_index(i, l, t) == states[i].bucket[l]);
    }
    for (auto& st : states) st.advance(w.prf);
  }

  // sequential cursor and cold random access agree
  w.schedule.advance_to(3);
  CHECK(w.schedule.cursor() == 3);
  SymKey warm = w.schedule.master_at(2, 3);
  w.schedule.advance_to(0);
  CHECK(w.schedule.master_at(2, 3) == warm);
  CHECK(w.schedule.master_at(2, 1) ==
        crypto::advance_key(w.prf, w.schedule.master_at(2, 0), 1));
}

TEST_CASE("root reconstruction replays the aggregation recursion") {
  LineWorld w(3, 2, 1, 32, 1005);  // line 0 <- 1 <- 2

  std::vector<buckets::BucketId> d1 = {bid({1}), bid({2})};
  std::vector<buckets::BucketId> d2 = {bid({2})};
  LocalProof p0 = local_proof(w.prf, w.states[0], w.registry, w.scheme, {}, 64);
  LocalProof p1 = local_proof(w.prf, w.states[1], w.registry, w.scheme, d1, 64);
  LocalProof p2 = local_proof(w.prf, w.states[2], w.registry, w.scheme, d2, 64);

  // leaf-to-root manual aggregation
  Digest a2 = aggregate_digest(w.prf, w.states[2].master, {}, p2.H, 64);
  std::vector<Digest> c1 = {a2};
  Digest a1 = aggregate_digest(w.prf, w.states[1].master, c1, p1.H, 64);
  std::vector<Digest> c0 = {a1};
  Digest root = aggregate_digest(w.prf, w.states[0].master, c0, p0.H, 64);
  Wide product = p0.P * p1.P * p2.P;

  ContributionTable table;
  table.add(0, empty_label());
  table.add(1, bid({1}));
  table.add(1, bid({2}));
  table.add(2, bid({2}));

  auto view = schedule_view(w.schedule, 0);
  CHECK(reconstruct_root(w.prf, view, w.scheme, w.tree, table, 64) == root);
  CHECK(factorize(product, w.registry).table == table);

  // per-node digest from the table equals the honest local digest
  CHECK(node_digest_from_table(w.prf, view, w.scheme, table, 1, 64) == p1.H);
  CHECK(node_digest_from_table(w.prf, view, w.scheme, table, 0, 64) == p0.H);

  // a different table reconstructs to a different root
  ContributionTable other = table;
  other.add(2, bid({1}));
  CHECK_FALSE(reconstruct_root(w.prf, view, w.scheme, w.tree, other, 64) == root);
}

TEST_CASE("subtree chains verify within scope and fail outside it") {
  LineWorld w(4, 2, 1, 32, 1006);  // line 0 <- 1 <- 2 <- 3

  std::vector<buckets::BucketId> d1 = {bid({1})};
  std::vector<buckets::BucketId> d2 = {bid({2})};
  std::vector<buckets::BucketId> d3 = {bid({1})};
  LocalProof p1 = local_proof(w.prf, w.states[1], w.registry, w.scheme, d1, 64);
  LocalProof p2 = local_proof(w.prf, w.states[2], w.registry, w.scheme, d2, 64);
  LocalProof p3 = local_proof(w.prf, w.states[3], w.registry, w.scheme, d3, 64);

  const unsigned m = 2;
  auto chain3 = subtree_chain(w.prf, w.states[3].master, p3, {}, m, 64);
  std::vector<std::vector<SubtreeProofPair>> kids2 = {chain3};
  auto chain2 = subtree_chain(w.prf, w.states[2].master, p2, kids2, m, 64);
  std::vector<std::vector<SubtreeProofPair>> kids1 = {chain2};
  auto chain1 = subtree_chain(w.prf, w.states[1].master, p1, kids1, m, 64);

  REQUIRE(chain1.size() == m + 1);
  CHECK(chain1[0] == SubtreeProofPair{p1.H, p1.P});
  // depth-1 cut of node 1 covers {1,2}; depth-2 covers {1,2,3}
  CHECK(chain1[1].P == p1.P * p2.P);
  CHECK(chain1[2].P == p1.P * p2.P * p3.P);

  auto view = schedule_view(w.schedule, 0);
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 1, m,
                             chain1[m], 64) == SubtreeVerdict::Pass);
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 2, 1,
                             chain2[1], 64) == SubtreeVerdict::Pass);
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 3, 0,
                             chain3[0], 64) == SubtreeVerdict::Pass);

  // tampered digest
  SubtreeProofPair badH = chain1[m];
  badH.H.value ^= 1;
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 1, m,
                             badH, 64) == SubtreeVerdict::Fail);

  // product smuggling in a node outside the depth-m scope (node 0)
  SubtreeProofPair outside = chain1[m];
  outside.P *= w.registry.prime(0, empty_label());
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 1, m,
                             outside, 64) == SubtreeVerdict::Fail);

  // foreign factor
  SubtreeProofPair foreign = chain1[m];
  foreign.P *= first_primes(w.registry.primes().size() + 1).back();
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 1, m,
                             foreign, 64) == SubtreeVerdict::Fail);

  // the right proof presented for the wrong witness
  CHECK(verify_subtree_proof(w.prf, view, w.scheme, w.tree, w.registry, 2, m,
                             chain1[m], 64) == SubtreeVerdict::Fail);
}

TEST_CASE("forwarding chain verifies intact and enforces the key count") {
  Prf prf(77);
  Rng rng(78);
  std::vector<SymKey> keys;
  for (int i = 0; i < 4; ++i) keys.push_back(crypto::random_key(rng, 64));

  TracebackChain chain;
  chain.payload.push_back(std::byte{0xab});
  chain.payload.push_back(std::byte{0xcd});
  for (const auto& k : keys) traceback_extend(prf, chain, k, 48);
  REQUIRE(chain.hops.size() == 4);

  auto ok = traceback_verify(prf, chain, keys, 48);
  CHECK(ok.intact);

  std::vector<SymKey> wrong(keys.begin(), keys.begin() + 3);
  CHECK_THROWS_AS(traceback_verify(prf, chain, wrong, 48), ConfigError);

  // payload replaced after every hop: the storage node's own recomputation of
  // the last hop fails first, position hops+1
  TracebackChain swapped = chain;
  swapped.payload[0] = std::byte{0xff};
  auto res = traceback_verify(prf, swapped, keys, 48);
  CHECK_FALSE(res.intact);
  CHECK(res.altered_at == 5);
}
