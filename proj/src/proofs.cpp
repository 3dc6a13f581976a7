#include "tsq/proofs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tsq::proofs {

size_t label_index(const BucketingScheme& s, const BucketLabel& label) {
  if (!label) return 0;
  return 1 + label->dense_rank(s);
}

BucketLabel label_at(const BucketingScheme& s, size_t idx) {
  if (idx == 0) return empty_label();
  return BucketId::from_dense_rank(s, idx - 1);
}

size_t label_count(const BucketingScheme& s) { return s.bucket_count() + 1; }

std::vector<uint64_t> first_primes(size_t k) {
  require(k >= 1, "need at least one prime");
  double kd = static_cast<double>(std::max<size_t>(k, 6));
  auto bound = static_cast<size_t>(kd * (std::log(kd) + std::log(std::log(kd))) * 1.2) + 64;
  std::vector<bool> composite(bound + 1, false);
  std::vector<uint64_t> out;
  for (size_t p = 2; p <= bound && out.size() < k; ++p) {
    if (composite[p]) continue;
    out.push_back(p);
    for (size_t q = p * p; q <= bound; q += p) composite[q] = true;
  }
  require(out.size() == k, "prime sieve bound too small");
  return out;
}

size_t PrimeRegistry::slot(NodeId node, size_t label_idx) const {
  size_t block = node == kStorageNode ? n_ - 1 : node - 1;
  return block * labels_ + label_idx;
}

PrimeRegistry PrimeRegistry::build(const BucketingScheme& s, uint32_t n_nodes) {
  PrimeRegistry reg;
  reg.n_ = n_nodes;
  reg.labels_ = label_count(s);
  for (const auto& dom : s.domains) reg.radix_.push_back(dom.w);
  reg.primes_ = first_primes(reg.labels_ * n_nodes);
  reg.owners_.reserve(reg.primes_.size());
  for (uint32_t block = 0; block < n_nodes; ++block) {
    NodeId node = block == n_nodes - 1 ? kStorageNode : block + 1;
    for (size_t l = 0; l < reg.labels_; ++l)
      reg.owners_.emplace(reg.primes_[block * reg.labels_ + l],
                          Owner{node, label_at(s, l)});
  }
  return reg;
}

uint64_t PrimeRegistry::prime(NodeId node, const BucketLabel& label) const {
  require(node < n_, "unknown node");
  size_t label_idx = 0;
  if (label) {
    require(label->v.size() == radix_.size(), "bucket label dimension mismatch");
    size_t rank = 0;
    for (size_t g = 0; g < radix_.size(); ++g) {
      require(label->v[g] >= 1 && label->v[g] <= radix_[g],
              "bucket label out of range");
      rank = rank * radix_[g] + (label->v[g] - 1);
    }
    label_idx = rank + 1;
  }
  require(label_idx < labels_, "unknown bucket label");
  return primes_[slot(node, label_idx)];
}

const PrimeRegistry::Owner* PrimeRegistry::owner(uint64_t prime) const {
  auto it = owners_.find(prime);
  return it == owners_.end() ? nullptr : &it->second;
}

void ContributionTable::add(NodeId node, const BucketLabel& label, uint64_t k) {
  if (k == 0) return;
  counts[{node, label}] += k;
}

uint64_t ContributionTable::count(NodeId node, const BucketLabel& label) const {
  auto it = counts.find({node, label});
  return it == counts.end() ? 0 : it->second;
}

uint64_t ContributionTable::bucket_total(const BucketId& b) const {
  uint64_t total = 0;
  for (const auto& [key, k] : counts)
    if (key.second && *key.second == b) total += k;
  return total;
}

std::vector<BucketId> ContributionTable::nonempty_buckets() const {
  std::vector<BucketId> out;
  for (const auto& [key, k] : counts)
    if (key.second && k > 0) out.push_back(*key.second);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ContributionTable::write_csv(std::ostream& os) const {
  os << "node,label,count\n";
  for (const auto& [key, k] : counts) {
    os << key.first << ',';
    if (!key.second) {
      os << "empty";
    } else {
      for (size_t g = 0; g < key.second->v.size(); ++g)
        os << (g ? "|" : "") << key.second->v[g];
    }
    os << ',' << k << '\n';
  }
}

KeySchedule::KeySchedule(const Prf& prf, const BucketingScheme& s,
                         uint32_t n_nodes, uint16_t lk, Rng keys_rng)
    : prf_(&prf), scheme_(&s), n_(n_nodes), lk_(lk) {
  crypto::check_width(lk);
  size_t labels = label_count(s);
  master0_.reserve(n_nodes);
  bucket0_.reserve(n_nodes);
  for (uint32_t i = 0; i < n_nodes; ++i) {
    Rng node_rng = keys_rng.derive("node-keys", i);
    master0_.push_back(crypto::random_key(node_rng, lk));
    std::vector<SymKey> chain;
    chain.reserve(labels);
    for (size_t l = 0; l < labels; ++l)
      chain.push_back(crypto::random_key(node_rng, lk));
    bucket0_.push_back(std::move(chain));
  }
  master_ = master0_;
  bucket_ = bucket0_;
}

void KeySchedule::advance_to(Epoch t) {
  if (t < cursor_) {
    master_ = master0_;
    bucket_ = bucket0_;
    cursor_ = 0;
  }
  while (cursor_ < t) {
    for (auto& k : master_) k = crypto::advance_key(*prf_, k, 1);
    for (auto& chain : bucket_)
      for (auto& k : chain) k = crypto::advance_key(*prf_, k, 1);
    ++cursor_;
  }
}

SymKey KeySchedule::master_at(NodeId i, Epoch t) const {
  require(i < n_, "unknown node");
  if (t == cursor_) return master_[i];
  return crypto::advance_key(*prf_, master0_[i], t);
}

SymKey KeySchedule::bucket_key_at_index(NodeId i, size_t label_idx, Epoch t) const {
  require(i < n_, "unknown node");
  require(label_idx < bucket0_[i].size(), "unknown bucket label");
  if (t == cursor_) return bucket_[i][label_idx];
  return crypto::advance_key(*prf_, bucket0_[i][label_idx], t);
}

SymKey KeySchedule::bucket_key_at(NodeId i, const BucketLabel& label, Epoch t) const {
  return bucket_key_at_index(i, label_index(*scheme_, label), t);
}

NodeKeyState NodeKeyState::initial(const BucketingScheme& s, NodeId node, uint16_t lk,
                                   Rng keys_rng) {
  NodeKeyState st;
  st.node = node;
  st.epoch = 0;
  Rng node_rng = keys_rng.derive("node-keys", node);
  st.master = crypto::random_key(node_rng, lk);
  size_t labels = label_count(s);
  st.bucket.reserve(labels);
  for (size_t l = 0; l < labels; ++l)
    st.bucket.push_back(crypto::random_key(node_rng, lk));
  return st;
}

void NodeKeyState::advance(const Prf& prf) {
  master = crypto::advance_key(prf, master, 1);
  for (auto& k : bucket) k = crypto::advance_key(prf, k, 1);
  ++epoch;
}

namespace {

Bytes sum_body(uint8_t subkind, const Wide& sum) {
  MessageWriter w(MsgTag::BucketSum);
  w.u8(subkind);
  w.wide(sum);
  return std::move(w).take();
}

}  // namespace

LocalProof local_proof(const Prf& prf, const NodeKeyState& keys,
                       const PrimeRegistry& reg, const BucketingScheme& s,
                       std::span<const BucketId> data_buckets, uint16_t lh) {
  Wide sum = 0;
  Wide P = 1;
  if (data_buckets.empty()) {
    sum = keys.bucket[0].value;
    P = reg.prime(keys.node, empty_label());
  } else {
    for (const auto& b : data_buckets) {
      sum += keys.bucket[label_index(s, b)].value;
      P *= reg.prime(keys.node, b);
    }
  }
  Bytes body = sum_body(0, sum);
  return LocalProof{crypto::keyed_hash(prf, keys.master, body, lh), P};
}

Digest aggregate_digest(const Prf& prf, const SymKey& master,
                        std::span<const Digest> child_digests,
                        const Digest& own_local, uint16_t lh) {
  Wide sum = own_local.value;
  for (const auto& d : child_digests) sum += d.value;
  Bytes body = sum_body(1, sum);
  return crypto::keyed_hash(prf, master, body, lh);
}

Wide aggregate_product(std::span<const Wide> child_products, const Wide& own_local) {
  Wide P = own_local;
  for (const auto& c : child_products) P *= c;
  return P;
}

FactorizeResult factorize(const Wide& P, const PrimeRegistry& reg) {
  FactorizeResult res;
  require(P >= 1, "prime product must be positive");
  Wide rest = P;
  std::vector<uint64_t> sorted = reg.primes();
  std::sort(sorted.begin(), sorted.end());
  for (uint64_t p : sorted) {
    if (rest == 1) break;
    while (rest % p == 0) {
      rest /= p;
      const auto* o = reg.owner(p);
      res.table.add(o->node, o->label);
    }
  }
  res.residual = rest;
  res.complete = rest == 1;
  return res;
}

KeyView schedule_view(const KeySchedule& sched, Epoch t) {
  KeyView v;
  v.master = [&sched, t](NodeId i) { return sched.master_at(i, t); };
  v.bucket = [&sched, t](NodeId i, size_t idx) {
    return sched.bucket_key_at_index(i, idx, t);
  };
  return v;
}

Digest node_digest_from_table(const Prf& prf, const KeyView& keys,
                              const BucketingScheme& s,
                              const ContributionTable& table, NodeId node,
                              uint16_t lh) {
  Wide sum = 0;
  auto lb = table.counts.lower_bound({node, empty_label()});
  for (auto it = lb; it != table.counts.end() && it->first.first == node; ++it) {
    if (it->second == 0) continue;
    SymKey k = keys.bucket(node, label_index(s, it->first.second));
    sum += Wide(it->second) * k.value;
  }
  Bytes body = sum_body(0, sum);
  return crypto::keyed_hash(prf, keys.master(node), body, lh);
}

namespace {

Digest reconstruct_rec(const Prf& prf, const KeyView& keys,
                       const BucketingScheme& s, const topo::AggregationTree& tree,
                       const ContributionTable& table, NodeId node, uint16_t lh) {
  Digest own = node_digest_from_table(prf, keys, s, table, node, lh);
  std::vector<Digest> child;
  child.reserve(tree.children[node].size());
  for (NodeId c : tree.children[node])
    child.push_back(reconstruct_rec(prf, keys, s, tree, table, c, lh));
  return aggregate_digest(prf, keys.master(node), child, own, lh);
}

}  // namespace

Digest reconstruct_root(const Prf& prf, const KeyView& keys,
                        const BucketingScheme& s, const topo::AggregationTree& tree,
                        const ContributionTable& table, uint16_t lh) {
  return reconstruct_rec(prf, keys, s, tree, table, kStorageNode, lh);
}

std::vector<SubtreeProofPair> subtree_chain(
    const Prf& prf, const SymKey& master, const LocalProof& own,
    std::span<const std::vector<SubtreeProofPair>> child_sets, unsigned m,
    uint16_t lh) {
  std::vector<SubtreeProofPair> out;
  out.reserve(m + 1);
  out.push_back(SubtreeProofPair{own.H, own.P});
  for (unsigned u = 1; u <= m; ++u) {
    Wide sum = own.H.value;
    Wide P = own.P;
    for (const auto& cs : child_sets) {
      require(cs.size() >= u, "child subtree chain too short");
      sum += cs[u - 1].H.value;
      P *= cs[u - 1].P;
    }
    Bytes body = sum_body(1, sum);
    out.push_back(SubtreeProofPair{crypto::keyed_hash(prf, master, body, lh), P});
  }
  return out;
}

namespace {

Digest replay_subtree(const Prf& prf, const KeyView& keys,
                      const BucketingScheme& s, const topo::AggregationTree& tree,
                      const ContributionTable& table, NodeId node, unsigned u,
                      uint16_t lh) {
  Digest own = node_digest_from_table(prf, keys, s, table, node, lh);
  if (u == 0) return own;
  Wide sum = own.value;
  for (NodeId c : tree.children[node])
    sum += replay_subtree(prf, keys, s, tree, table, c, u - 1, lh).value;
  Bytes body = sum_body(1, sum);
  return crypto::keyed_hash(prf, keys.master(node), body, lh);
}

}  // namespace

SubtreeVerdict verify_subtree_proof(const Prf& prf, const KeyView& keys,
                                    const BucketingScheme& s,
                                    const topo::AggregationTree& tree,
                                    const PrimeRegistry& reg, NodeId witness,
                                    unsigned m, const SubtreeProofPair& proof,
                                    uint16_t lh) {
  FactorizeResult fac = factorize(proof.P, reg);
  if (!fac.complete) return SubtreeVerdict::Fail;
  std::vector<NodeId> scope = topo::subtree(tree, witness, m);
  for (const auto& [key, k] : fac.table.counts)
    if (k > 0 && !std::binary_search(scope.begin(), scope.end(), key.first))
      return SubtreeVerdict::Fail;
  Digest expect = replay_subtree(prf, keys, s, tree, fac.table, witness, m, lh);
  return expect == proof.H ? SubtreeVerdict::Pass : SubtreeVerdict::Fail;
}

namespace {

Bytes traceback_body(const TracebackChain& chain, size_t hops) {
  MessageWriter w(MsgTag::Traceback);
  w.field(chain.payload);
  w.u16(static_cast<uint16_t>(hops));
  for (size_t j = 0; j < hops; ++j)
    w.fixed_wide(chain.hops[j].value, chain.hops[j].bits);
  return std::move(w).take();
}

}  // namespace

void traceback_extend(const Prf& prf, TracebackChain& chain, const SymKey& key,
                      uint16_t lh) {
  Bytes body = traceback_body(chain, chain.hops.size());
  chain.hops.push_back(crypto::keyed_hash(prf, key, body, lh));
}

TracebackCheck traceback_verify(const Prf& prf, const TracebackChain& chain,
                                std::span<const SymKey> path_keys, uint16_t lh) {
  require_config(path_keys.size() == chain.hops.size(),
                 "traceback chain length does not match the path");
  for (size_t j = chain.hops.size(); j-- > 0;) {
    Bytes body = traceback_body(chain, j);
    Digest expect = crypto::keyed_hash(prf, path_keys[j], body, lh);
    if (!(expect == chain.hops[j]))
      return TracebackCheck{false, static_cast<unsigned>(j + 2)};
  }
  return TracebackCheck{true, 0};
}

}  // namespace tsq::proofs
