#include "tsq/ssq.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tsq/accounting.hpp"
#include "tsq/bytes.hpp"

namespace tsq::ssq {

namespace {

bool is_antichain(const std::vector<buckets::BucketId>& ids) {
  for (size_t a = 0; a < ids.size(); ++a)
    for (size_t b = 0; b < ids.size(); ++b)
      if (a != b && buckets::dominates(ids[a], ids[b])) return false;
  return true;
}

struct NodeLoad {
  std::map<buckets::BucketId, std::vector<buckets::Datum>> by_bucket;
  size_t item_count = 0;
};

std::vector<NodeLoad> split_by_node(uint32_t n, Epoch t, const buckets::BucketingScheme& scheme,
                                    const std::vector<buckets::Datum>& data) {
  std::vector<NodeLoad> per(n);
  for (const auto& d : data) {
    require_config(d.epoch == t, "datum epoch does not match the epoch being run");
    require_config(d.origin >= 1 && d.origin < n, "datum origin must be a sensor node");
    per[d.origin].by_bucket[buckets::bucketize(d.attrs, scheme)].push_back(d);
    per[d.origin].item_count++;
  }
  return per;
}

crypto::Digest garbled(const crypto::Digest& d) {
  crypto::Digest g = d;
  g.value ^= (Wide(1) << d.bits) - 1;
  return g;
}

}  // namespace

Bytes seed_body(const std::vector<buckets::BucketId>& skyline, size_t dims) {
  std::vector<buckets::BucketId> sorted = skyline;
  std::sort(sorted.begin(), sorted.end());
  MessageWriter w(MsgTag::Seed);
  w.u8(1);
  w.u16(static_cast<uint16_t>(dims));
  w.u32(static_cast<uint32_t>(sorted.size()));
  for (const auto& b : sorted) {
    require(b.v.size() == dims, "bucket id dimensionality mismatch");
    for (uint16_t c : b.v) w.u16(c);
  }
  return std::move(w).take();
}

crypto::Digest verification_seed(const crypto::Prf& prf, const crypto::SymKey& key,
                                 const std::vector<buckets::BucketId>& skyline, size_t dims,
                                 uint16_t lh) {
  return crypto::keyed_hash(prf, key, seed_body(skyline, dims), lh);
}

crypto::Digest combine_seeds(const crypto::Prf& prf,
                             std::vector<std::pair<NodeId, crypto::Digest>> seeds, uint16_t lh) {
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  MessageWriter w(MsgTag::Seed);
  w.u8(2);
  w.u32(static_cast<uint32_t>(seeds.size()));
  for (const auto& [node, seed] : seeds) w.fixed_wide(seed.value, seed.bits);
  return prf.digest(std::move(w).take(), lh);
}

std::vector<NodeId> select_reporters(const crypto::Prf& prf,
                                     const std::function<crypto::SymKey(NodeId)>& master,
                                     const std::vector<NodeId>& members, uint32_t xi1,
                                     uint16_t lh) {
  require_config(xi1 >= 1, "reporter count must be at least 1");
  require_config(xi1 <= members.size(), "reporter count exceeds group size");
  std::vector<std::pair<Wide, NodeId>> order;
  order.reserve(members.size());
  for (NodeId i : members)
    order.emplace_back(crypto::order_seed(prf, master(i), i, lh).value, i);
  std::sort(order.begin(), order.end());
  std::vector<NodeId> out;
  out.reserve(xi1);
  for (uint32_t k = 0; k < xi1; ++k) out.push_back(order[k].second);
  return out;
}

SkylineAnswer run_skyline_epoch(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                                const topo::AggregationTree& tree,
                                const topo::GroupPartition& groups, Epoch t,
                                const std::vector<buckets::Datum>& data,
                                const std::vector<proofs::NodeKeyState>& states,
                                const SsqOptions& opts) {
  const uint32_t n = tree.n();
  require(states.size() == n, "key state vector does not cover the cell");
  for (uint32_t i = 0; i < n; ++i)
    require(states[i].node == i && states[i].epoch == t, "key state out of step with epoch");

  auto per_node = split_by_node(n, t, scheme, data);
  auto* acct = opts.accountant;
  const double cb = scheme.bucket_id_bits();

  SkylineAnswer ans;
  ans.epoch = t;
  ans.modified = opts.modified;

  std::vector<std::pair<NodeId, crypto::Digest>> all_seeds;
  std::vector<buckets::BucketId> pool;
  uint64_t total_quasi_items = 0;
  double reply_bucket_bits = 0;

  for (uint32_t g = 0; g < groups.mu; ++g) {
    const auto& members = groups.members[g];
    if (members.empty()) continue;

    if (acct) {
      const double gsz = static_cast<double>(members.size());
      for (NodeId i : members) {
        acct->charge(i, harness::kBroadcast, harness::Channel::Data,
                     gsz * per_node[i].item_count * acct->params().ld);
        acct->charge(i, harness::kBroadcast, harness::Channel::BucketIds,
                     gsz * per_node[i].item_count * cb);
        acct->charge(i, harness::kBroadcast, harness::Channel::Ids, gsz * acct->params().lid);
        acct->charge(i, harness::kBroadcast, harness::Channel::Seeds, gsz * opts.lh);
      }
    }

    GroupReport rep;
    rep.group = g + 1;
    std::vector<buckets::BucketId> group_buckets;
    for (NodeId i : members)
      for (const auto& [b, items] : per_node[i].by_bucket) group_buckets.push_back(b);
    rep.skyline = buckets::skyline_buckets(group_buckets);

    for (NodeId i : members) {
      for (const auto& [b, items] : per_node[i].by_bucket) {
        if (!std::binary_search(rep.skyline.begin(), rep.skyline.end(), b)) continue;
        srq::SealedEntry e;
        e.origin = i;
        e.epoch = t;
        e.bucket = b;
        e.count = static_cast<uint32_t>(items.size());
        e.payload = crypto::seal(prf, states[i].master, i, t, srq::encode_bucket_data(items), opts.lh);
        rep.entries.push_back(std::move(e));
        if (rep.generators.empty() || rep.generators.back() != i) rep.generators.push_back(i);
        total_quasi_items += items.size();
      }
    }

    rep.reporters = select_reporters(
        prf, [&](NodeId i) { return states[i].master; }, members, opts.xi1, opts.lh);
    uint64_t quasi_in_group = 0;
    for (const auto& e : rep.entries) quasi_in_group += e.count;
    for (NodeId r : rep.reporters) {
      auto seed = verification_seed(prf, states[r].master, rep.skyline, scheme.d(), opts.lh);
      bool lying = std::find(opts.false_seed_nodes.begin(), opts.false_seed_nodes.end(), r) !=
                   opts.false_seed_nodes.end();
      if (lying) seed = garbled(seed);
      rep.seeds.push_back(seed);
      all_seeds.emplace_back(r, seed);

      if (acct) {
        double id_bits = acct->analytic() ? static_cast<double>(members.size()) *
                                                acct->params().lid
                                          : static_cast<double>(rep.generators.size()) *
                                                acct->params().lid;
        double hops = acct->uplink_hops(tree.depth[r]);
        if (acct->analytic()) {
          NodeId next = tree.parent[r];
          acct->charge(r, next, harness::Channel::BucketIds, rep.skyline.size() * cb * hops);
          acct->charge(r, next, harness::Channel::Data,
                       static_cast<double>(quasi_in_group) * acct->params().ld * hops);
          acct->charge(r, next, harness::Channel::Seeds, static_cast<double>(opts.lh) * hops);
          acct->charge(r, next, harness::Channel::Ids,
                       (acct->params().lid + id_bits) * hops);
        } else {
          for (NodeId u : tree.path_to_root(r)) {
            if (u == 0) continue;
            NodeId next = tree.parent[u];
            acct->charge(u, next, harness::Channel::BucketIds, rep.skyline.size() * cb);
            acct->charge(u, next, harness::Channel::Data,
                         static_cast<double>(quasi_in_group) * acct->params().ld);
            acct->charge(u, next, harness::Channel::Seeds, opts.lh);
            acct->charge(u, next, harness::Channel::Ids, acct->params().lid + id_bits);
          }
        }
      }
    }

    reply_bucket_bits += static_cast<double>(rep.skyline.size()) * cb;
    pool.insert(pool.end(), rep.skyline.begin(), rep.skyline.end());
    ans.groups.push_back(std::move(rep));
  }

  ans.result = buckets::skyline_buckets(pool);
  if (!opts.modified) ans.combined = combine_seeds(prf, all_seeds, opts.lh);

  if (acct) {
    const uint32_t mu_active = static_cast<uint32_t>(ans.groups.size());
    acct->charge(0, harness::kAuthority, harness::Channel::Ids, acct->params().lid);
    acct->charge(0, harness::kAuthority, harness::Channel::Seeds,
                 opts.modified ? static_cast<double>(all_seeds.size()) * opts.lh
                               : static_cast<double>(opts.lh));
    acct->charge(0, harness::kAuthority, harness::Channel::BucketIds,
                 static_cast<double>(mu_active) * reply_bucket_bits);
    acct->charge(0, harness::kAuthority, harness::Channel::Data,
                 static_cast<double>(total_quasi_items) * acct->params().ld /
                     static_cast<double>(mu_active == 0 ? 1 : mu_active));
  }
  return ans;
}

namespace {

// Structural validation shared by grouped and baseline verification: the
// reported skyline must be a populated antichain and every sealed entry must
// authenticate, decode, sit in a reported bucket, and come from an allowed
// origin.
std::optional<srq::Verdict> check_report_body(const crypto::Prf& prf,
                                              const buckets::BucketingScheme& scheme,
                                              proofs::KeySchedule& schedule, Epoch t,
                                              const std::vector<buckets::BucketId>& skyline,
                                              const std::vector<srq::SealedEntry>& entries,
                                              const std::vector<NodeId>& generators,
                                              const std::vector<NodeId>& allowed_origins,
                                              std::vector<buckets::Datum>* opened,
                                              std::string* detail) {
  auto fail = [&](srq::Verdict v, const char* why) {
    if (detail) *detail = why;
    return v;
  };
  if (!std::is_sorted(skyline.begin(), skyline.end()) ||
      std::adjacent_find(skyline.begin(), skyline.end()) != skyline.end())
    return fail(srq::Verdict::RejectIncomplete, "reported skyline is not a sorted set");
  if (!is_antichain(skyline))
    return fail(srq::Verdict::RejectIncomplete, "reported skyline contains dominated buckets");
  std::set<buckets::BucketId> populated;
  std::set<NodeId> seen_origins;
  for (const auto& e : entries) {
    if (!std::binary_search(allowed_origins.begin(), allowed_origins.end(), e.origin))
      return fail(srq::Verdict::RejectIncomplete, "entry origin outside the group");
    if (e.payload.node != e.origin || e.payload.epoch != t)
      return fail(srq::Verdict::RejectAuthFailure, "sealed payload bound to wrong node or epoch");
    if (!std::binary_search(skyline.begin(), skyline.end(), e.bucket))
      return fail(srq::Verdict::RejectIncomplete, "entry outside the reported skyline");
    auto plain = crypto::open(prf, schedule.master_at(e.origin, t), e.payload);
    if (!plain) return fail(srq::Verdict::RejectAuthFailure, "payload authentication failed");
    auto items = srq::decode_bucket_data(*plain, e.origin, t, scheme.d());
    if (!items) return fail(srq::Verdict::RejectAuthFailure, "payload does not decode");
    for (const auto& it : *items)
      if (!(buckets::bucketize(it.attrs, scheme) == e.bucket))
        return fail(srq::Verdict::RejectIncomplete, "payload items disagree with the entry bucket");
    populated.insert(e.bucket);
    seen_origins.insert(e.origin);
    if (opened) opened->insert(opened->end(), items->begin(), items->end());
  }
  for (const auto& b : skyline)
    if (!populated.count(b))
      return fail(srq::Verdict::RejectIncomplete, "reported skyline bucket has no data");
  std::vector<NodeId> realized(seen_origins.begin(), seen_origins.end());
  if (realized != generators)
    return fail(srq::Verdict::RejectIncomplete, "generator list disagrees with the entries");
  return std::nullopt;
}

}  // namespace

SkylineVerify verify_skyline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                             const topo::GroupPartition& groups, proofs::KeySchedule& schedule,
                             const SkylineAnswer& answer, uint32_t xi1, uint32_t xi3,
                             uint16_t lh) {
  require_config(xi3 >= 1 && xi3 <= xi1, "seed quorum must satisfy 1 <= xi3 <= xi1");
  SkylineVerify out;
  auto fail = [&](srq::Verdict v, const char* why) {
    out.verdict = v;
    out.detail = why;
    out.data.clear();
    out.skyline.clear();
    out.skyline_points.clear();
    return out;
  };

  std::vector<uint32_t> expected;
  for (uint32_t g = 0; g < groups.mu; ++g)
    if (!groups.members[g].empty()) expected.push_back(g + 1);
  std::vector<uint32_t> got;
  for (const auto& rep : answer.groups) got.push_back(rep.group);
  if (got != expected) return fail(srq::Verdict::RejectIncomplete, "group reports missing or reordered");

  const Epoch t = answer.epoch;
  std::vector<std::pair<NodeId, crypto::Digest>> expected_seeds;
  std::vector<buckets::BucketId> pool;
  bool all_groups_ok = true;

  for (const auto& rep : answer.groups) {
    const auto& members = groups.members[rep.group - 1];
    auto reporters = select_reporters(
        prf, [&](NodeId i) { return schedule.master_at(i, t); }, members, xi1, lh);
    if (rep.reporters != reporters)
      return fail(srq::Verdict::RejectIncomplete, "reporter list disagrees with the order seeds");
    if (rep.seeds.size() != reporters.size())
      return fail(srq::Verdict::RejectIncomplete, "seed list size disagrees with the reporters");

    if (auto v = check_report_body(prf, scheme, schedule, t, rep.skyline, rep.entries,
                                   rep.generators, members, &out.data, &out.detail))
      return fail(*v, out.detail.c_str());

    GroupCheck chk;
    chk.group = rep.group;
    for (size_t k = 0; k < reporters.size(); ++k) {
      auto want = verification_seed(prf, schedule.master_at(reporters[k], t), rep.skyline,
                                    scheme.d(), lh);
      if (rep.seeds[k] == want) chk.valid_seeds++;
      expected_seeds.emplace_back(reporters[k], want);
    }
    chk.accepted = answer.modified ? chk.valid_seeds >= xi3 : true;
    if (!chk.accepted) all_groups_ok = false;
    if (chk.accepted) pool.insert(pool.end(), rep.skyline.begin(), rep.skyline.end());
    out.groups.push_back(chk);
  }

  if (!answer.modified) {
    auto want = combine_seeds(prf, expected_seeds, lh);
    if (!(answer.combined == want))
      return fail(srq::Verdict::RejectForgedProof, "combined seed digest does not verify");
  } else if (!all_groups_ok) {
    out.verdict = srq::Verdict::RejectForgedProof;
    out.detail = "a group fell below the seed quorum";
    out.skyline = buckets::skyline_buckets(pool);
    return out;
  }

  out.skyline = buckets::skyline_buckets(pool);
  if (answer.result != out.skyline)
    return fail(srq::Verdict::RejectIncomplete, "claimed skyline disagrees with the group reports");
  out.skyline_points = skyline_data(out.data);
  out.verdict = srq::Verdict::Accept;
  return out;
}

BaselineAnswer run_baseline_epoch(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                                  const topo::AggregationTree& tree, Epoch t,
                                  const std::vector<buckets::Datum>& data,
                                  const std::vector<proofs::NodeKeyState>& states,
                                  const Wide& key_threshold, uint16_t lh,
                                  harness::Accountant* acct) {
  const uint32_t n = tree.n();
  require(states.size() == n, "key state vector does not cover the cell");
  for (uint32_t i = 0; i < n; ++i)
    require(states[i].node == i && states[i].epoch == t, "key state out of step with epoch");
  auto per_node = split_by_node(n, t, scheme, data);
  const double cb = scheme.bucket_id_bits();

  BaselineAnswer ans;
  ans.epoch = t;
  std::vector<buckets::BucketId> all_buckets;
  for (uint32_t i = 1; i < n; ++i) {
    for (const auto& [b, items] : per_node[i].by_bucket) all_buckets.push_back(b);
    if (acct) {
      const double copies = static_cast<double>(n - 1);
      acct->charge(i, harness::kBroadcast, harness::Channel::Data,
                   copies * per_node[i].item_count * acct->params().ld);
      acct->charge(i, harness::kBroadcast, harness::Channel::BucketIds,
                   copies * per_node[i].item_count * cb);
      acct->charge(i, harness::kBroadcast, harness::Channel::Ids, copies * acct->params().lid);
    }
  }
  ans.skyline = buckets::skyline_buckets(all_buckets);

  uint64_t quasi_items = 0;
  for (uint32_t i = 1; i < n; ++i) {
    for (const auto& [b, items] : per_node[i].by_bucket) {
      if (!std::binary_search(ans.skyline.begin(), ans.skyline.end(), b)) continue;
      srq::SealedEntry e;
      e.origin = i;
      e.epoch = t;
      e.bucket = b;
      e.count = static_cast<uint32_t>(items.size());
      e.payload = crypto::seal(prf, states[i].master, i, t, srq::encode_bucket_data(items), lh);
      ans.entries.push_back(std::move(e));
      if (ans.generators.empty() || ans.generators.back() != i) ans.generators.push_back(i);
      quasi_items += items.size();
    }
  }

  for (uint32_t i = 1; i < n; ++i) {
    if (states[i].master.value >= key_threshold) continue;
    ans.proofs.emplace_back(i, verification_seed(prf, states[i].master, ans.skyline, scheme.d(), lh));
    if (acct) {
      double bits = acct->params().lid + lh;
      if (acct->analytic()) {
        acct->charge(i, tree.parent[i], harness::Channel::Seeds,
                     bits * acct->uplink_hops(tree.depth[i]));
      } else {
        for (NodeId u : tree.path_to_root(i))
          if (u != 0) acct->charge(u, tree.parent[u], harness::Channel::Seeds, bits);
      }
    }
  }

  if (acct) {
    acct->charge(0, harness::kAuthority, harness::Channel::Ids, acct->params().lid);
    acct->charge(0, harness::kAuthority, harness::Channel::BucketIds,
                 static_cast<double>(ans.skyline.size()) * cb);
    acct->charge(0, harness::kAuthority, harness::Channel::Data,
                 static_cast<double>(quasi_items) * acct->params().ld);
    acct->charge(0, harness::kAuthority, harness::Channel::Seeds,
                 static_cast<double>(ans.proofs.size()) * (acct->params().lid + lh));
  }
  return ans;
}

SkylineVerify verify_baseline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                              proofs::KeySchedule& schedule, uint32_t n,
                              const BaselineAnswer& answer, const Wide& key_threshold,
                              uint16_t lh) {
  SkylineVerify out;
  auto fail = [&](srq::Verdict v, const char* why) {
    out.verdict = v;
    out.detail = why;
    out.data.clear();
    out.skyline.clear();
    return out;
  };
  const Epoch t = answer.epoch;
  std::vector<NodeId> sensors;
  for (uint32_t i = 1; i < n; ++i) sensors.push_back(i);

  if (auto v = check_report_body(prf, scheme, schedule, t, answer.skyline, answer.entries,
                                 answer.generators, sensors, &out.data, &out.detail))
    return fail(*v, out.detail.c_str());

  std::vector<NodeId> expected;
  for (uint32_t i = 1; i < n; ++i)
    if (schedule.master_at(i, t).value < key_threshold) expected.push_back(i);
  std::vector<NodeId> got;
  for (const auto& [i, seed] : answer.proofs) got.push_back(i);
  if (got != expected)
    return fail(srq::Verdict::RejectForgedProof, "seed sender set disagrees with the key threshold");
  GroupCheck chk;
  chk.group = 1;
  for (const auto& [i, seed] : answer.proofs) {
    auto want = verification_seed(prf, schedule.master_at(i, t), answer.skyline, scheme.d(), lh);
    if (!(seed == want))
      return fail(srq::Verdict::RejectForgedProof, "a verification seed does not verify");
    chk.valid_seeds++;
  }
  chk.accepted = true;
  out.groups.push_back(chk);
  out.skyline = answer.skyline;
  out.skyline_points = skyline_data(out.data);
  out.verdict = srq::Verdict::Accept;
  return out;
}

std::vector<buckets::Datum> skyline_data(const std::vector<buckets::Datum>& items) {
  std::vector<buckets::Datum> out;
  for (size_t a = 0; a < items.size(); ++a) {
    bool dominated = false;
    for (size_t b = 0; b < items.size() && !dominated; ++b) {
      if (a == b) continue;
      if (buckets::dominates(items[b].attrs, items[a].attrs)) dominated = true;
      else if (b < a && items[b].attrs == items[a].attrs) dominated = true;
    }
    if (!dominated) out.push_back(items[a]);
  }
  return out;
}

}  // namespace tsq::ssq
