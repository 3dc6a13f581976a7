#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "doctest.h"
#include "support/helpers.hpp"
#include "tsq/adv.hpp"
#include "tsq/harness.hpp"

using namespace tsq;
using namespace tsq::adv;
using harness::ScenarioConfig;
using harness::World;
using testsup::bid;

namespace {

ScenarioConfig srq_cfg() {
  ScenarioConfig cfg;
  cfg.seed = 515;
  cfg.n = 8;
  cfg.d = 2;
  cfg.w = 4;
  cfg.y = 32;
  cfg.lh = 64;
  cfg.lk = 16;
  cfg.data.kind = "lattice";
  return cfg;
}

struct SrqFixture {
  ScenarioConfig cfg;
  World world;
  srq::StorageArchive archive;
  srq::AuthorityVerifier auth;
  srq::RangeAnswer honest;
  buckets::RangeQuery query;

  explicit SrqFixture(ScenarioConfig c, srq::PipelineOptions opts = {})
      : cfg(std::move(c)),
        world(cfg),
        auth(world.prf, world.scheme, world.tree, world.registry, &world.schedule, cfg.lh) {
    opts.lh = cfg.lh;
    srq::EpochPipeline pipeline(world.prf, world.scheme, world.tree, world.registry, opts);
    Rng data_rng = Rng(cfg.seed).derive("data");
    auto data = harness::generate_data(cfg, world, 0, data_rng);
    pipeline.run_epoch(0, data, world.states, &archive);
    query.epoch = 0;
    query.lo.assign(cfg.d, cfg.lo);
    query.hi.assign(cfg.d, cfg.hi);
    honest = srq::answer_range(archive, query, world.scheme);
  }
};

std::vector<NodeId> ids(std::initializer_list<NodeId> v) { return {v}; }

}  // namespace

TEST_CASE("witness selection matches a direct order-seed scan") {
  auto cfg = srq_cfg();
  cfg.lh = 16;
  World w(cfg);
  for (uint32_t xi2 : {0u, 1u, 1u << 14, 1u << 15, 1u << 16}) {
    auto got = select_witnesses(w.prf, w.schedule, 0, cfg.n, xi2, cfg.lh);
    std::vector<NodeId> want;
    for (NodeId i = 1; i < cfg.n; ++i) {
      auto seed = crypto::order_seed(w.prf, w.schedule.master_at(i, 0), i, cfg.lh);
      if (seed.value < xi2) want.push_back(i);
    }
    CHECK(got == want);
  }
  // the full threshold admits every sensor
  CHECK(select_witnesses(w.prf, w.schedule, 0, cfg.n, 1u << 16, cfg.lh).size() == cfg.n - 1);
}

TEST_CASE("structural verdicts equal real subtree verification for every culprit") {
  auto cfg = srq_cfg();
  cfg.n = 16;
  cfg.lh = 16;   // wide witness sets at xi2 = 2^14
  for (uint32_t m : {1u, 2u}) {
    for (NodeId culprit = 1; culprit < cfg.n; ++culprit) {
      World w(cfg);
      srq::PipelineOptions opts;
      opts.lh = cfg.lh;
      opts.xi2 = 1u << 14;
      opts.m = m;
      opts.behavior.false_digest_nodes = {culprit};
      srq::EpochPipeline pipeline(w.prf, w.scheme, w.tree, w.registry, opts);
      Rng data_rng = Rng(cfg.seed).derive("data");
      auto data = harness::generate_data(cfg, w, 0, data_rng);
      srq::StorageArchive arch;
      auto rec = pipeline.run_epoch(0, data, w.states, &arch);

      srq::AuthorityVerifier auth(w.prf, w.scheme, w.tree, w.registry, &w.schedule, cfg.lh);
      for (const auto& wp : rec.witness_proofs) {
        auto real = auth.check_witness(0, wp);
        auto fast = structural_verdict(w.tree, wp.witness, m, {culprit});
        CHECK(real == fast);
      }
    }
  }
}

TEST_CASE("suspect partitioning on a hand-checked line") {
  // line 0 <- 1 <- 2 <- 3 <- 4; depth-1 subtrees: {i, i+1}
  testsup::LineWorld lw(5, 2, 1, 16, 2201);
  const auto& tree = lw.tree;
  using V = proofs::SubtreeVerdict;

  SUBCASE("one failing, one passing witness") {
    auto rep = compute_suspects(tree, 1, {{1, V::Fail}, {3, V::Pass}});
    CHECK(rep.any_failed);
    CHECK(rep.innocent == ids({3, 4}));
    CHECK(rep.suspects == ids({1, 2}));
    CHECK(rep.target == ids({0, 1, 2}));
  }
  SUBCASE("overlapping failures intersect") {
    auto rep = compute_suspects(tree, 1, {{1, V::Fail}, {2, V::Fail}});
    CHECK(rep.suspects == ids({2}));
    CHECK(rep.target == ids({0, 2}));
  }
  SUBCASE("all passing leaves only the storage node") {
    auto rep = compute_suspects(tree, 1, {{1, V::Pass}, {3, V::Pass}});
    CHECK_FALSE(rep.any_failed);
    CHECK(rep.suspects.empty());
    CHECK(rep.target == ids({0}));
  }
  SUBCASE("no witnesses leaves everything unvouched") {
    auto rep = compute_suspects(tree, 1, {});
    CHECK_FALSE(rep.any_failed);
    CHECK(rep.target == ids({0, 1, 2, 3, 4}));
  }
  SUBCASE("passing subtrees carve the unvouched pool") {
    auto rep = compute_suspects(tree, 1, {{1, V::Pass}});
    CHECK(rep.target == ids({0, 3, 4}));
  }
}

TEST_CASE("attestation revokes only compromised sensors inside the target") {
  auto r1 = attest(ids({0, 1, 2}), ids({2, 5}));
  CHECK(r1.revoked == ids({2}));
  CHECK_FALSE(r1.storage_blamed);

  auto r2 = attest(ids({0, 3}), ids({2}));
  CHECK(r2.revoked.empty());
  CHECK(r2.storage_blamed);

  // the storage node itself is never listed as a revoked sensor
  auto r3 = attest(ids({0, 1}), ids({0, 1}));
  CHECK(r3.revoked == ids({1}));
  CHECK_FALSE(r3.storage_blamed);
}

TEST_CASE("bucket drops divide out exactly the victim primes") {
  SrqFixture f(srq_cfg());
  REQUIRE_FALSE(f.honest.entries.empty());
  const auto victim = f.honest.entries[0].bucket;

  auto honest_fac = proofs::factorize(f.honest.root_product, f.world.registry);
  REQUIRE(honest_fac.complete);

  Rng rng(9);
  auto forged = drop_bucket(f.honest, victim, f.world.registry, true, true, rng, f.cfg.lh);

  // the victim's entries are gone
  for (const auto& e : forged.entries) CHECK_FALSE(e.bucket == victim);
  CHECK(forged.entries.size() < f.honest.entries.size());

  // the doctored product factorizes to the honest table minus the victim
  // column, with empty labels patched in for emptied nodes
  proofs::ContributionTable want;
  std::vector<NodeId> emptied;
  for (const auto& [key, cnt] : honest_fac.table.counts) {
    if (key.second && *key.second == victim) {
      NodeId node = key.first;
      bool has_other = false;
      for (const auto& [k2, c2] : honest_fac.table.counts)
        if (k2.first == node && !(k2.second && *k2.second == victim)) has_other = true;
      if (!has_other) want.add(node, proofs::empty_label());
      continue;
    }
    want.add(key.first, key.second, cnt);
  }
  auto forged_fac = proofs::factorize(forged.root_product, f.world.registry);
  REQUIRE(forged_fac.complete);
  CHECK(forged_fac.table == want);

  // a guessed digest survives only with probability 2^-lh
  CHECK(f.auth.verify_range(forged, f.query).verdict == srq::Verdict::RejectForgedProof);

  // keeping the honest proof makes the drop a certain incompleteness verdict
  Rng rng2(10);
  auto kept = drop_bucket(f.honest, victim, f.world.registry, false, false, rng2, f.cfg.lh);
  CHECK(kept.root_product == f.honest.root_product);
  CHECK(kept.root_digest == f.honest.root_digest);
  CHECK(f.auth.verify_range(kept, f.query).verdict == srq::Verdict::RejectIncomplete);
}

TEST_CASE("guessed-key rebuilds count every chain the storage node lacks") {
  ScenarioConfig cfg;
  cfg.seed = 11;
  cfg.n = 4;
  cfg.d = 1;
  cfg.w = 4;
  cfg.y = 6;  // two items per sensor, one distinct bucket each
  cfg.lh = 64;
  cfg.lk = 16;
  cfg.data.kind = "distinct_bucket";
  SrqFixture f(cfg);

  const auto victim = f.honest.entries[0].bucket;
  Rng rng(12);
  uint32_t guessed = 0;
  auto forged = rebuild_with_guessed_keys(f.world.prf, f.world.scheme, f.world.tree,
                                          f.world.registry, f.honest, victim,
                                          f.world.states[0], cfg.lk, cfg.lh, rng, &guessed);
  // n*delta + n - 2*delta chains at delta = 1: 3 masters plus 3 labels
  CHECK(guessed == 6);
  for (const auto& e : forged.entries) CHECK_FALSE(e.bucket == victim);
  // with 96 guessed key bits the rebuilt digest cannot verify in practice
  CHECK(f.auth.verify_range(forged, f.query).verdict == srq::Verdict::RejectForgedProof);
}

namespace {

ScenarioConfig ssq_cfg() {
  ScenarioConfig cfg;
  cfg.seed = 516;
  cfg.n = 13;
  cfg.d = 2;
  cfg.w = 12;
  cfg.y = 39;
  cfg.lh = 64;
  cfg.lk = 16;
  cfg.mode = "ssq";
  cfg.uniform_groups = true;
  cfg.mu = 4;
  cfg.xi1 = 2;
  cfg.xi3 = 1;
  cfg.data.kind = "group_antichain";
  return cfg;
}

}  // namespace

TEST_CASE("group drops shrink one report and forge the combined digest") {
  auto cfg = ssq_cfg();
  World w(cfg);
  Rng data_rng = Rng(cfg.seed).derive("data");
  auto data = harness::generate_data(cfg, w, 0, data_rng);
  ssq::SsqOptions opts;
  opts.lh = cfg.lh;
  opts.xi1 = cfg.xi1;
  auto honest = ssq::run_skyline_epoch(w.prf, w.scheme, w.tree, w.groups, 0, data, w.states, opts);
  REQUIRE(honest.groups[0].skyline.size() >= 2);

  Rng rng(13);
  auto forged = drop_group(honest, 1, w.scheme, rng, cfg.lh);
  CHECK(forged.groups[0].skyline.size() == honest.groups[0].skyline.size() - 1);
  CHECK(forged.groups[0].skyline ==
        std::vector<buckets::BucketId>(honest.groups[0].skyline.begin() + 1,
                                       honest.groups[0].skyline.end()));
  for (const auto& e : forged.groups[0].entries)
    CHECK_FALSE(e.bucket == honest.groups[0].skyline.front());
  // untouched groups stay intact
  CHECK(forged.groups[1].skyline == honest.groups[1].skyline);

  // a guessed combined digest does not verify
  auto ver = ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, forged, cfg.xi1, 1, cfg.lh);
  CHECK(ver.verdict == srq::Verdict::RejectForgedProof);
}

TEST_CASE("reporter collusion defeats the quorum only when it owns xi3 seeds") {
  auto cfg = ssq_cfg();
  cfg.ssq_modified = true;
  World w(cfg);
  Rng data_rng = Rng(cfg.seed).derive("data");
  auto data = harness::generate_data(cfg, w, 0, data_rng);
  ssq::SsqOptions opts;
  opts.lh = cfg.lh;
  opts.xi1 = cfg.xi1;
  opts.modified = true;
  auto honest = ssq::run_skyline_epoch(w.prf, w.scheme, w.tree, w.groups, 0, data, w.states, opts);
  auto reporters = honest.groups[0].reporters;
  REQUIRE(reporters.size() == 2);

  // both reporters compromised: the doctored report meets quorum 2 and the
  // dropped bucket vanishes without detection
  auto honest_ver =
      ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, honest, cfg.xi1, 2, cfg.lh);
  REQUIRE(honest_ver.verdict == srq::Verdict::Accept);

  auto colluded = drop_group_collusion(honest, 1, reporters, w.prf, w.states, w.scheme, cfg.lh);
  auto undetected =
      ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, colluded, cfg.xi1, 2, cfg.lh);
  CHECK(undetected.verdict == srq::Verdict::Accept);
  CHECK(undetected.groups[0].valid_seeds == 2);
  // the drop went through: the opened quasi data lost the victim bucket's items
  CHECK(undetected.data.size() < honest_ver.data.size());

  // only one compromised reporter cannot reach quorum 2
  auto partial = drop_group_collusion(honest, 1, {reporters[0]}, w.prf, w.states, w.scheme, cfg.lh);
  auto caught =
      ssq::verify_skyline(w.prf, w.scheme, w.groups, w.schedule, partial, cfg.xi1, 2, cfg.lh);
  CHECK(caught.verdict == srq::Verdict::RejectForgedProof);
  CHECK(caught.groups[0].valid_seeds == 1);
}

TEST_CASE("traceback alteration is localized to the exact hop") {
  crypto::Prf prf(90);
  Rng rng(91);
  Bytes payload;
  for (int i = 0; i < 6; ++i) payload.push_back(static_cast<std::byte>(i * 17));
  Bytes altered = payload;
  altered[0] ^= std::byte{0xff};

  for (uint32_t psi = 1; psi <= 8; ++psi) {
    std::vector<crypto::SymKey> keys;
    for (uint32_t j = 0; j < psi; ++j) keys.push_back(crypto::random_key(rng, 64));

    auto honest = build_traceback(prf, payload, keys, 48, 0, altered);
    CHECK(proofs::traceback_verify(prf, honest, keys, 48).intact);

    for (uint32_t a = 2; a <= psi + 1; ++a) {
      auto chain = build_traceback(prf, payload, keys, 48, a, altered);
      auto res = proofs::traceback_verify(prf, chain, keys, 48);
      REQUIRE_FALSE(res.intact);
      CHECK(res.altered_at == a);
    }
  }
}

TEST_CASE("redundancy flags compare readings against the neighbor median") {
  topo::NeighborGraph g;
  g.adj.resize(6);
  // nodes 0..4 fully connected, node 5 isolated
  for (NodeId i = 0; i < 5; ++i)
    for (NodeId j = 0; j < 5; ++j)
      if (i != j) g.adj[i].push_back(j);

  std::vector<double> readings = {0, 0, 10, 0, 0, 99};
  auto flags = redundancy_flags(g, readings, 3.0);
  CHECK(flags == ids({2}));  // the outlier, never the isolated node

  // even neighbor counts average the middle pair
  topo::NeighborGraph line;
  line.adj = {{1}, {0, 2}, {1, 3}, {2}};
  std::vector<double> r2 = {1, 1, 1, 8};
  // node 3 sees median 1, node 2 sees (1+8)/2 = 4.5 so it stays under eps 4
  auto f2 = redundancy_flags(line, r2, 4.0);
  CHECK(f2 == ids({3}));

  CHECK(redundancy_flags(g, {0, 0, 0, 0, 0, 0}, 1.0).empty());
}

TEST_CASE("attack scripts parse their JSON form") {
  auto s1 = parse_attack(R"({"kind": "drop_bucket"})");
  CHECK(s1.kind == AttackKind::DropBucket);
  CHECK(s1.bucket.empty());
  CHECK(s1.node == 0);

  auto s2 = parse_attack(
      R"({"kind": "rebuild_guessed_keys", "bucket": [2, 3], "guess_bits": 4})");
  CHECK(s2.kind == AttackKind::RebuildGuessedKeys);
  CHECK(s2.bucket == std::vector<uint16_t>{2, 3});
  CHECK(s2.guess_bits == 4);

  auto s3 = parse_attack(R"({"kind": "false_subproof", "node": 7})");
  CHECK(s3.kind == AttackKind::FalseSubproof);
  CHECK(s3.node == 7);

  auto s4 = parse_attack(R"({"kind": "alter_traceback", "hop": 3})");
  CHECK(s4.kind == AttackKind::AlterTraceback);
  CHECK(s4.hop == 3);

  auto s5 = parse_attack(R"({"kind": "drop_group", "group": 2})");
  CHECK(s5.kind == AttackKind::DropGroup);
  CHECK(s5.group == 2);

  CHECK(parse_attack(R"({"kind": "none"})").kind == AttackKind::None);
  CHECK(parse_attack(R"({"kind": "bogus_reading"})").kind == AttackKind::BogusReading);
  CHECK(parse_attack(R"({"kind": "false_seed"})").kind == AttackKind::FalseSeed);
  CHECK(parse_attack(R"({"kind": "drop_bucket_keep_proof"})").kind ==
        AttackKind::DropBucketKeepProof);

  CHECK_THROWS_AS(parse_attack(R"({"kind": "no_such_attack"})"), ConfigError);
  CHECK_THROWS_AS(parse_attack(R"({"kind": "none", "bogus_field": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_attack("not json"), ConfigError);

  CHECK(std::string(to_string(AttackKind::DropBucket)) == "drop_bucket");
  CHECK(std::string(to_string(AttackKind::FalseSeed)) == "false_seed");
}
