#include "tsq/adv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include <json.hpp>

#include "tsq/common.hpp"

namespace tsq::adv {

std::vector<NodeId> select_witnesses(const crypto::Prf& prf, proofs::KeySchedule& schedule,
                                     Epoch t, uint32_t n, uint32_t xi2, uint16_t lh) {
  std::vector<NodeId> out;
  for (NodeId i = 1; i < n; ++i) {
    crypto::Digest seed = crypto::order_seed(prf, schedule.master_at(i, t), i, lh);
    if (seed.value < xi2) out.push_back(i);
  }
  return out;
}

SuspectReport compute_suspects(
    const topo::AggregationTree& tree, uint32_t m,
    const std::vector<std::pair<NodeId, proofs::SubtreeVerdict>>& verdicts) {
  SuspectReport r;
  std::set<NodeId> innocent;
  std::set<NodeId> inter;
  bool first_fail = true;
  for (const auto& [w, v] : verdicts) {
    std::vector<NodeId> sub = topo::subtree(tree, w, m);
    if (v == proofs::SubtreeVerdict::Pass) {
      innocent.insert(sub.begin(), sub.end());
    } else {
      r.any_failed = true;
      if (first_fail) {
        inter.insert(sub.begin(), sub.end());
        first_fail = false;
      } else {
        std::set<NodeId> keep;
        for (NodeId x : sub)
          if (inter.count(x)) keep.insert(x);
        inter.swap(keep);
      }
    }
  }
  r.innocent.assign(innocent.begin(), innocent.end());

  std::set<NodeId> pool;
  if (r.any_failed) {
    pool = inter;
  } else {
    for (NodeId i = 1; i < static_cast<NodeId>(tree.parent.size()); ++i) pool.insert(i);
  }
  for (NodeId x : r.innocent) pool.erase(x);
  if (r.any_failed) r.suspects.assign(pool.begin(), pool.end());

  pool.insert(NodeId{0});  // the storage node can never clear itself
  r.target.assign(pool.begin(), pool.end());
  return r;
}

proofs::SubtreeVerdict structural_verdict(const topo::AggregationTree& tree, NodeId witness,
                                          uint32_t m, const std::vector<NodeId>& corrupt) {
  std::vector<NodeId> sub = topo::subtree(tree, witness, m);
  for (NodeId c : corrupt) {
    if (c == witness) continue;  // a corrupt witness keeps its own proof clean
    if (std::binary_search(sub.begin(), sub.end(), c)) return proofs::SubtreeVerdict::Fail;
  }
  return proofs::SubtreeVerdict::Pass;
}

AttestResult attest(const std::vector<NodeId>& target, const std::vector<NodeId>& compromised) {
  AttestResult res;
  for (NodeId t : target) {
    if (t == 0) continue;  // attestation covers sensors; the storage node is the fallback
    if (std::find(compromised.begin(), compromised.end(), t) != compromised.end())
      res.revoked.push_back(t);
  }
  std::sort(res.revoked.begin(), res.revoked.end());
  res.storage_blamed = res.revoked.empty();
  return res;
}

namespace {

// Per-node counts of the victim label plus how many distinct labels the node
// holds, straight from a factorized product.
struct VictimScan {
  std::map<NodeId, uint64_t> victim_count;
  std::map<NodeId, size_t> label_kinds;
};

VictimScan scan_victim(const proofs::ContributionTable& table, const buckets::BucketId& victim) {
  VictimScan s;
  for (const auto& [key, cnt] : table.counts) {
    s.label_kinds[key.first]++;
    if (key.second && *key.second == victim) s.victim_count[key.first] = cnt;
  }
  return s;
}

std::vector<srq::SealedEntry> strip_bucket(const std::vector<srq::SealedEntry>& entries,
                                           const buckets::BucketId& victim, size_t* removed) {
  std::vector<srq::SealedEntry> kept;
  kept.reserve(entries.size());
  size_t gone = 0;
  for (const auto& e : entries) {
    if (e.bucket == victim) {
      ++gone;
      continue;
    }
    kept.push_back(e);
  }
  if (removed) *removed = gone;
  return kept;
}

}  // namespace

srq::RangeAnswer drop_bucket(const srq::RangeAnswer& honest, const buckets::BucketId& victim,
                             const proofs::PrimeRegistry& registry, bool rebuild_product,
                             bool guess_digest, Rng& rng, uint16_t lh) {
  srq::RangeAnswer out = honest;
  size_t removed = 0;
  out.entries = strip_bucket(honest.entries, victim, &removed);
  require_config(removed > 0, "victim bucket holds no returned data");

  if (rebuild_product) {
    proofs::FactorizeResult fac = proofs::factorize(honest.root_product, registry);
    require_config(fac.complete, "cannot rewrite a product with foreign factors");
    VictimScan scan = scan_victim(fac.table, victim);
    Wide p = honest.root_product;
    for (const auto& [node, cnt] : scan.victim_count) {
      Wide prime = registry.prime(node, proofs::BucketLabel(victim));
      for (uint64_t j = 0; j < cnt; ++j) p /= prime;
      if (scan.label_kinds[node] == 1)  // node just lost its only contribution
        p *= registry.prime(node, proofs::empty_label());
    }
    out.root_product = p;
  }
  if (guess_digest) out.root_digest = crypto::Digest{crypto::random_key(rng, lh).value, lh};
  return out;
}

srq::RangeAnswer rebuild_with_guessed_keys(const crypto::Prf& prf,
                                           const buckets::BucketingScheme& scheme,
                                           const topo::AggregationTree& tree,
                                           const proofs::PrimeRegistry& registry,
                                           const srq::RangeAnswer& honest,
                                           const buckets::BucketId& victim,
                                           const proofs::NodeKeyState& own_state, uint16_t lk,
                                           uint16_t lh, Rng& rng, uint32_t* guessed_out) {
  proofs::FactorizeResult fac = proofs::factorize(honest.root_product, registry);
  require_config(fac.complete, "cannot rewrite a product with foreign factors");

  // Doctored table: victim contributions vanish, nodes emptied by the drop
  // turn into empty-label contributors so every node stays represented.
  proofs::ContributionTable doctored;
  std::map<NodeId, size_t> labels_left;
  bool dropped_any = false;
  for (const auto& [key, cnt] : fac.table.counts) {
    if (key.second && *key.second == victim) {
      dropped_any = true;
      continue;
    }
    doctored.counts[key] = cnt;
    labels_left[key.first]++;
  }
  require_config(dropped_any, "victim bucket absent from the proof");
  for (const auto& [key, cnt] : fac.table.counts) {
    (void)cnt;
    if (key.second && *key.second == victim && labels_left[key.first] == 0)
      doctored.counts[{key.first, proofs::empty_label()}] = 1;
  }

  Wide p = 1;
  for (const auto& [key, cnt] : doctored.counts) {
    Wide prime = registry.prime(key.first, key.second);
    for (uint64_t j = 0; j < cnt; ++j) p *= prime;
  }

  // The storage node owns its own chains; every other key is a fresh guess.
  uint32_t guesses = 0;
  auto master_g = std::make_shared<std::map<NodeId, crypto::SymKey>>();
  auto bucket_g = std::make_shared<std::map<std::pair<NodeId, size_t>, crypto::SymKey>>();
  uint32_t n = static_cast<uint32_t>(tree.parent.size());
  for (NodeId i = 0; i < n; ++i) {
    if (i == 0) {
      (*master_g)[i] = own_state.master;
    } else {
      (*master_g)[i] = crypto::random_key(rng, lk);
      ++guesses;
    }
  }
  for (const auto& [key, cnt] : doctored.counts) {
    (void)cnt;
    size_t idx = proofs::label_index(scheme, key.second);
    if (key.first == 0) {
      (*bucket_g)[{key.first, idx}] = own_state.bucket.at(idx);
    } else {
      (*bucket_g)[{key.first, idx}] = crypto::random_key(rng, lk);
      ++guesses;
    }
  }
  proofs::KeyView view;
  view.master = [master_g](NodeId i) { return master_g->at(i); };
  view.bucket = [bucket_g](NodeId i, size_t idx) { return bucket_g->at({i, idx}); };

  srq::RangeAnswer out = honest;
  size_t removed = 0;
  out.entries = strip_bucket(honest.entries, victim, &removed);
  out.root_product = p;
  out.root_digest = proofs::reconstruct_root(prf, view, scheme, tree, doctored, lh);
  if (guessed_out) *guessed_out = guesses;
  return out;
}

namespace {

// Shrinks one group report by its lexicographically first skyline bucket and
// refreshes the derived fields. Returns the report's index.
size_t shrink_group(ssq::SkylineAnswer& ans, uint32_t group) {
  size_t at = ans.groups.size();
  for (size_t g = 0; g < ans.groups.size(); ++g)
    if (ans.groups[g].group == group) at = g;
  require_config(at < ans.groups.size(), "victim group not present in the answer");
  ssq::GroupReport& rep = ans.groups[at];
  require_config(!rep.skyline.empty(), "victim group reports no skyline buckets");

  buckets::BucketId victim = rep.skyline.front();
  rep.skyline.erase(rep.skyline.begin());
  require_config(!rep.skyline.empty(), "drop would erase the whole group report");

  std::vector<srq::SealedEntry> kept;
  std::set<NodeId> gens;
  for (const auto& e : rep.entries) {
    if (e.bucket == victim) continue;
    gens.insert(e.origin);
    kept.push_back(e);
  }
  rep.entries = std::move(kept);
  rep.generators.assign(gens.begin(), gens.end());

  std::vector<buckets::BucketId> pool;
  for (const auto& g : ans.groups)
    pool.insert(pool.end(), g.skyline.begin(), g.skyline.end());
  ans.result = buckets::skyline_buckets(std::move(pool));
  return at;
}

}  // namespace

ssq::SkylineAnswer drop_group(const ssq::SkylineAnswer& honest, uint32_t group,
                              const buckets::BucketingScheme& scheme, Rng& rng, uint16_t lh) {
  (void)scheme;
  ssq::SkylineAnswer out = honest;
  shrink_group(out, group);
  out.combined = crypto::Digest{crypto::random_key(rng, lh).value, lh};
  return out;
}

ssq::SkylineAnswer drop_group_collusion(const ssq::SkylineAnswer& honest, uint32_t group,
                                        const std::vector<NodeId>& compromised,
                                        const crypto::Prf& prf,
                                        const std::vector<proofs::NodeKeyState>& states,
                                        const buckets::BucketingScheme& scheme, uint16_t lh) {
  ssq::SkylineAnswer out = honest;
  size_t at = shrink_group(out, group);
  ssq::GroupReport& rep = out.groups[at];
  for (size_t j = 0; j < rep.reporters.size(); ++j) {
    NodeId r = rep.reporters[j];
    bool owned = std::find(compromised.begin(), compromised.end(), r) != compromised.end();
    if (!owned) continue;  // honest reporters' seeds stay bound to the old skyline
    rep.seeds[j] = ssq::verification_seed(prf, states.at(r).master, rep.skyline, scheme.d(), lh);
  }
  return out;
}

proofs::TracebackChain build_traceback(const crypto::Prf& prf, const Bytes& payload,
                                       const std::vector<crypto::SymKey>& path_keys, uint16_t lh,
                                       uint32_t alter_at, const Bytes& altered) {
  uint32_t psi = static_cast<uint32_t>(path_keys.size());
  require_config(alter_at == 0 || (alter_at >= 2 && alter_at <= psi + 1),
                 "alteration position out of range");
  proofs::TracebackChain chain;
  chain.payload = payload;
  for (uint32_t j = 1; j <= psi; ++j) {
    if (alter_at == j) chain.payload = altered;
    proofs::traceback_extend(prf, chain, path_keys[j - 1], lh);
  }
  if (alter_at == psi + 1) chain.payload = altered;  // the storage node rewrites after sealing
  return chain;
}

std::vector<NodeId> redundancy_flags(const topo::NeighborGraph& g,
                                     const std::vector<double>& readings, double eps) {
  require_config(readings.size() == g.adj.size(), "one reading per node required");
  std::vector<NodeId> flagged;
  for (NodeId i = 0; i < static_cast<NodeId>(g.adj.size()); ++i) {
    std::vector<double> near;
    for (NodeId j : g.neighbors(i)) near.push_back(readings[j]);
    if (near.empty()) continue;
    std::sort(near.begin(), near.end());
    size_t h = near.size() / 2;
    double med = (near.size() % 2) ? near[h] : 0.5 * (near[h - 1] + near[h]);
    if (std::abs(readings[i] - med) > eps) flagged.push_back(i);
  }
  return flagged;
}

const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::DropBucket: return "drop_bucket";
    case AttackKind::DropBucketKeepProof: return "drop_bucket_keep_proof";
    case AttackKind::RebuildGuessedKeys: return "rebuild_guessed_keys";
    case AttackKind::DropGroup: return "drop_group";
    case AttackKind::FalseSubproof: return "false_subproof";
    case AttackKind::AlterTraceback: return "alter_traceback";
    case AttackKind::BogusReading: return "bogus_reading";
    case AttackKind::FalseSeed: return "false_seed";
  }
  return "none";
}

AttackScript parse_attack(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("attack script is not valid JSON: ") + e.what());
  }
  require_config(j.is_object(), "attack script must be a JSON object");
  static const std::set<std::string> known = {"kind", "bucket", "node",
                                              "group", "hop", "guess_bits"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    require_config(known.count(k), "unknown key '" + k + "' in attack script");
  }
  require_config(j.contains("kind") && j["kind"].is_string(), "attack script needs a kind");

  static const std::map<std::string, AttackKind> kinds = {
      {"none", AttackKind::None},
      {"drop_bucket", AttackKind::DropBucket},
      {"drop_bucket_keep_proof", AttackKind::DropBucketKeepProof},
      {"rebuild_guessed_keys", AttackKind::RebuildGuessedKeys},
      {"drop_group", AttackKind::DropGroup},
      {"false_subproof", AttackKind::FalseSubproof},
      {"alter_traceback", AttackKind::AlterTraceback},
      {"bogus_reading", AttackKind::BogusReading},
      {"false_seed", AttackKind::FalseSeed},
  };
  auto it = kinds.find(j["kind"].get<std::string>());
  require_config(it != kinds.end(), "unknown attack kind: " + j["kind"].get<std::string>());

  AttackScript s;
  s.kind = it->second;
  if (j.contains("bucket")) {
    require_config(j["bucket"].is_array(), "bucket must be an array of interval indices");
    for (const auto& x : j["bucket"]) {
      require_config(x.is_number_unsigned(), "bucket indices must be unsigned");
      s.bucket.push_back(x.get<uint16_t>());
    }
  }
  if (j.contains("node")) s.node = j["node"].get<NodeId>();
  if (j.contains("group")) s.group = j["group"].get<uint32_t>();
  if (j.contains("hop")) s.hop = j["hop"].get<uint32_t>();
  if (j.contains("guess_bits")) s.guess_bits = j["guess_bits"].get<uint16_t>();
  return s;
}

}  // namespace tsq::adv
