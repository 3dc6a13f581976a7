#include "tsq/srq.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

#include "tsq/accounting.hpp"

namespace tsq::srq {

namespace {

void append_u32(Bytes& out, uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

void append_f64(Bytes& out, double v) {
  uint64_t u = std::bit_cast<uint64_t>(v);
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xff));
}

uint32_t read_u32(const Bytes& in, size_t& off) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint32_t>(in[off++]);
  return v;
}

double read_f64(const Bytes& in, size_t& off) {
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u = (u << 8) | static_cast<uint64_t>(in[off++]);
  return std::bit_cast<double>(u);
}

}  // namespace

const EpochRecord& StorageArchive::at(Epoch t) const {
  auto it = records.find(t);
  require_config(it != records.end(), "no archived record for requested epoch");
  return it->second;
}

bool NodeBehavior::corrupt(NodeId i) const {
  return std::find(false_digest_nodes.begin(), false_digest_nodes.end(), i) !=
         false_digest_nodes.end();
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::RejectForgedProof: return "reject_forged_proof";
    case Verdict::RejectIncomplete: return "reject_incomplete";
    case Verdict::RejectAuthFailure: return "reject_auth_failure";
  }
  return "?";
}

Bytes encode_bucket_data(const std::vector<buckets::Datum>& items) {
  Bytes out;
  append_u32(out, static_cast<uint32_t>(items.size()));
  for (const auto& it : items)
    for (double a : it.attrs) append_f64(out, a);
  return out;
}

std::optional<std::vector<buckets::Datum>> decode_bucket_data(const Bytes& plain, NodeId origin,
                                                              Epoch epoch, size_t dims) {
  if (plain.size() < 4) return std::nullopt;
  size_t off = 0;
  uint32_t count = read_u32(plain, off);
  if (plain.size() != 4 + static_cast<size_t>(count) * dims * 8) return std::nullopt;
  std::vector<buckets::Datum> items;
  items.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    buckets::Datum d;
    d.origin = origin;
    d.epoch = epoch;
    d.attrs.resize(dims);
    for (size_t g = 0; g < dims; ++g) d.attrs[g] = read_f64(plain, off);
    items.push_back(std::move(d));
  }
  return items;
}

EpochPipeline::EpochPipeline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                             const topo::AggregationTree& tree,
                             const proofs::PrimeRegistry& registry, PipelineOptions opts)
    : prf_(prf), scheme_(scheme), tree_(tree), registry_(registry), opts_(std::move(opts)) {
  require_config(registry_.nodes() == tree_.n(), "registry/tree size mismatch");
}

EpochRecord EpochPipeline::run_epoch(Epoch t, const std::vector<buckets::Datum>& data,
                                     const std::vector<proofs::NodeKeyState>& states,
                                     StorageArchive* archive) const {
  const uint32_t n = tree_.n();
  require(states.size() == n, "key state vector does not cover the cell");
  for (uint32_t i = 0; i < n; ++i)
    require(states[i].node == i && states[i].epoch == t, "key state out of step with epoch");

  std::vector<std::map<buckets::BucketId, std::vector<buckets::Datum>>> per_node(n);
  for (const auto& d : data) {
    require_config(d.epoch == t, "datum epoch does not match the epoch being run");
    require_config(d.origin >= 1 && d.origin < n, "datum origin must be a sensor node");
    per_node[d.origin][buckets::bucketize(d.attrs, scheme_)].push_back(d);
  }

  const Wide digest_mask = (Wide(1) << opts_.lh) - 1;
  EpochRecord rec;
  rec.epoch = t;

  std::vector<proofs::LocalProof> local(n);
  std::vector<crypto::Digest> sent_local(n);
  for (uint32_t i = 0; i < n; ++i) {
    std::vector<buckets::BucketId> dbuckets;
    for (const auto& [b, items] : per_node[i])
      dbuckets.insert(dbuckets.end(), items.size(), b);
    local[i] = proofs::local_proof(prf_, states[i], registry_, scheme_, dbuckets, opts_.lh);
    sent_local[i] = local[i].H;
    if (opts_.behavior.corrupt(i)) sent_local[i].value ^= digest_mask;
    for (const auto& [b, items] : per_node[i]) {
      SealedEntry e;
      e.origin = i;
      e.epoch = t;
      e.bucket = b;
      e.count = static_cast<uint32_t>(items.size());
      e.payload = crypto::seal(prf_, states[i].master, i, t, encode_bucket_data(items), opts_.lh);
      rec.entries.push_back(std::move(e));
    }
  }

  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return tree_.depth[a] > tree_.depth[b]; });

  std::vector<crypto::Digest> agg_digest(n);
  std::vector<Wide> agg_product(n, Wide(1));
  for (uint32_t i : order) {
    std::vector<crypto::Digest> child_digests;
    std::vector<Wide> child_products;
    for (NodeId c : tree_.children[i]) {
      child_digests.push_back(agg_digest[c]);
      child_products.push_back(agg_product[c]);
    }
    agg_digest[i] =
        proofs::aggregate_digest(prf_, states[i].master, child_digests, sent_local[i], opts_.lh);
    agg_product[i] = proofs::aggregate_product(child_products, local[i].P);
  }
  rec.root_digest = agg_digest[0];
  rec.root_product = agg_product[0];

  const bool investigate = opts_.xi2 > 0 && opts_.m > 0;
  if (investigate) {
    std::vector<std::vector<proofs::SubtreeProofPair>> chain_sent(n);
    for (uint32_t i : order) {
      std::vector<std::vector<proofs::SubtreeProofPair>> child_sets;
      for (NodeId c : tree_.children[i]) child_sets.push_back(chain_sent[c]);
      proofs::LocalProof as_sent{sent_local[i], local[i].P};
      chain_sent[i] = proofs::subtree_chain(prf_, states[i].master, as_sent, child_sets,
                                            opts_.m, opts_.lh);
    }
    for (uint32_t i = 1; i < n; ++i) {
      auto seed = crypto::order_seed(prf_, states[i].master, i, opts_.lh);
      if (seed.value >= opts_.xi2) continue;
      WitnessProof wp;
      wp.witness = i;
      wp.depth = opts_.m;
      if (opts_.behavior.corrupt(i)) {
        std::vector<std::vector<proofs::SubtreeProofPair>> child_sets;
        for (NodeId c : tree_.children[i]) child_sets.push_back(chain_sent[c]);
        wp.proof = proofs::subtree_chain(prf_, states[i].master, local[i], child_sets,
                                         opts_.m, opts_.lh)[opts_.m];
      } else {
        wp.proof = chain_sent[i][opts_.m];
      }
      rec.witness_proofs.push_back(std::move(wp));
    }
  }

  if (auto* acct = opts_.accountant) {
    const double cb = scheme_.bucket_id_bits();
    for (uint32_t i = 1; i < n; ++i) {
      acct->charge(i, tree_.parent[i], harness::Channel::Proof,
                   opts_.lh + acct->product_bits(agg_product[i]));
      if (investigate)
        acct->charge(i, tree_.parent[i], harness::Channel::Proof,
                     opts_.m * (opts_.lh + acct->product_bits(agg_product[i])));
    }
    for (const auto& e : rec.entries) {
      if (acct->analytic()) {
        acct->charge(e.origin, tree_.parent[e.origin], harness::Channel::BucketIds,
                     e.count * cb * acct->uplink_hops(tree_.depth[e.origin]));
      } else {
        for (NodeId u : tree_.path_to_root(e.origin))
          if (u != 0) acct->charge(u, tree_.parent[u], harness::Channel::BucketIds, e.count * cb);
      }
    }
    for (const auto& wp : rec.witness_proofs) {
      double bits = opts_.lh + acct->product_bits(wp.proof.P);
      if (acct->analytic()) {
        acct->charge(wp.witness, tree_.parent[wp.witness], harness::Channel::Proof,
                     bits * acct->uplink_hops(tree_.depth[wp.witness]));
      } else {
        for (NodeId u : tree_.path_to_root(wp.witness))
          if (u != 0) acct->charge(u, tree_.parent[u], harness::Channel::Proof, bits);
      }
    }
  }

  if (archive) archive->records[t] = rec;
  return rec;
}

RangeAnswer answer_range(const StorageArchive& archive, const buckets::RangeQuery& q,
                         const buckets::BucketingScheme& scheme,
                         harness::Accountant* accountant) {
  const EpochRecord& rec = archive.at(q.epoch);
  RangeAnswer a;
  a.epoch = q.epoch;
  a.query_buckets = buckets::query_bucket_set(q, scheme);
  a.root_digest = rec.root_digest;
  a.root_product = rec.root_product;
  for (const auto& e : rec.entries)
    if (std::binary_search(a.query_buckets.begin(), a.query_buckets.end(), e.bucket))
      a.entries.push_back(e);
  if (accountant) {
    accountant->charge(harness::kAuthority, 0, harness::Channel::Query,
                       static_cast<double>(a.query_buckets.size()) * scheme.bucket_id_bits());
    accountant->charge(0, harness::kAuthority, harness::Channel::Reply,
                       static_cast<double>(a.root_digest.bits) +
                           accountant->product_bits(a.root_product));
  }
  return a;
}

AuthorityVerifier::AuthorityVerifier(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                                     const topo::AggregationTree& tree,
                                     const proofs::PrimeRegistry& registry,
                                     proofs::KeySchedule* schedule, uint16_t lh)
    : prf_(prf), scheme_(scheme), tree_(tree), registry_(registry), schedule_(schedule), lh_(lh) {
  require_config(schedule_ != nullptr, "verifier needs a key schedule");
  require_config(registry_.nodes() == tree_.n(), "registry/tree size mismatch");
}

std::optional<VerifyResult> AuthorityVerifier::check_proof(Epoch t,
                                                           const crypto::Digest& root_digest,
                                                           const Wide& root_product,
                                                           proofs::ContributionTable* table_out)
    const {
  VerifyResult r;
  auto fac = proofs::factorize(root_product, registry_);
  r.table = fac.table;
  if (table_out) *table_out = fac.table;
  if (!fac.complete) {
    r.verdict = Verdict::RejectForgedProof;
    r.detail = "product contains factors outside the registry";
    return r;
  }
  std::vector<bool> present(tree_.n(), false);
  for (const auto& [key, cnt] : fac.table.counts) present[key.first] = true;
  for (uint32_t i = 0; i < tree_.n(); ++i) {
    if (!present[i]) {
      r.verdict = Verdict::RejectForgedProof;
      r.detail = "node missing from the contribution table";
      return r;
    }
  }
  auto view = proofs::schedule_view(*schedule_, t);
  auto expected = proofs::reconstruct_root(prf_, view, scheme_, tree_, fac.table, lh_);
  if (!(expected == root_digest)) {
    r.verdict = Verdict::RejectForgedProof;
    r.detail = "aggregate digest does not match reconstruction";
    return r;
  }
  if (table_out) *table_out = fac.table;
  return std::nullopt;
}

std::optional<Verdict> AuthorityVerifier::check_entries(Epoch t,
                                                        const proofs::ContributionTable& table,
                                                        const std::vector<buckets::BucketId>& allowed,
                                                        const std::vector<SealedEntry>& entries,
                                                        std::vector<buckets::Datum>* out,
                                                        std::string* detail) const {
  auto fail = [&](Verdict v, const char* why) {
    if (detail) *detail = why;
    return v;
  };
  std::map<std::pair<NodeId, buckets::BucketId>, uint64_t> opened;
  for (const auto& e : entries) {
    if (e.origin == 0 || e.origin >= tree_.n())
      return fail(Verdict::RejectAuthFailure, "entry claims an invalid origin");
    if (e.payload.node != e.origin || e.payload.epoch != t)
      return fail(Verdict::RejectAuthFailure, "sealed payload bound to wrong node or epoch");
    if (!std::binary_search(allowed.begin(), allowed.end(), e.bucket))
      return fail(Verdict::RejectIncomplete, "entry outside the query bucket set");
    auto key = schedule_->master_at(e.origin, t);
    auto plain = crypto::open(prf_, key, e.payload);
    if (!plain) return fail(Verdict::RejectAuthFailure, "payload authentication failed");
    auto items = decode_bucket_data(*plain, e.origin, t, scheme_.d());
    if (!items) return fail(Verdict::RejectAuthFailure, "payload does not decode");
    for (const auto& it : *items)
      if (!(buckets::bucketize(it.attrs, scheme_) == e.bucket))
        return fail(Verdict::RejectIncomplete, "payload items disagree with the entry bucket");
    opened[{e.origin, e.bucket}] += items->size();
    if (out) out->insert(out->end(), items->begin(), items->end());
  }
  for (const auto& [key, cnt] : table.counts) {
    if (!key.second) continue;
    if (!std::binary_search(allowed.begin(), allowed.end(), *key.second)) continue;
    auto it = opened.find({key.first, *key.second});
    if (it == opened.end() || it->second != cnt)
      return fail(Verdict::RejectIncomplete, "returned counts disagree with the proof");
    opened.erase(it);
  }
  if (!opened.empty())
    return fail(Verdict::RejectIncomplete, "returned entries not backed by the proof");
  return std::nullopt;
}

VerifyResult AuthorityVerifier::verify_range(const RangeAnswer& answer,
                                             const buckets::RangeQuery& q) const {
  require_config(answer.epoch == q.epoch, "answer epoch does not match the query");
  if (auto failed = check_proof(q.epoch, answer.root_digest, answer.root_product, nullptr))
    return *failed;
  VerifyResult r;
  auto fac = proofs::factorize(answer.root_product, registry_);
  r.table = fac.table;
  auto allowed = buckets::query_bucket_set(q, scheme_);
  if (auto v = check_entries(q.epoch, r.table, allowed, answer.entries, &r.data, &r.detail)) {
    r.verdict = *v;
    r.data.clear();
    return r;
  }
  r.verdict = Verdict::Accept;
  return r;
}

proofs::SubtreeVerdict AuthorityVerifier::check_witness(Epoch t, const WitnessProof& wp) const {
  auto view = proofs::schedule_view(*schedule_, t);
  return proofs::verify_subtree_proof(prf_, view, scheme_, tree_, registry_, wp.witness, wp.depth,
                                      wp.proof, lh_);
}

}  // namespace tsq::srq
