#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tsq/buckets.hpp"
#include "tsq/crypto.hpp"
#include "tsq/proofs.hpp"
#include "tsq/srq.hpp"
#include "tsq/topology.hpp"

namespace tsq::ssq {

// One group's contribution as forwarded by the storage node: the group
// skyline buckets, the sealed quasi-skyline data falling into them, and the
// verification seeds of the group's designated reporters.
struct GroupReport {
  uint32_t group = 0;  // 1-based
  std::vector<buckets::BucketId> skyline;  // sorted, an antichain
  std::vector<srq::SealedEntry> entries;
  std::vector<NodeId> generators;          // sorted origins behind `entries`
  std::vector<NodeId> reporters;           // ascending order-seed
  std::vector<crypto::Digest> seeds;       // parallel to `reporters`
};

struct SkylineAnswer {
  Epoch epoch = 0;
  bool modified = false;  // raw per-group seed lists instead of one digest
  std::vector<GroupReport> groups;
  crypto::Digest combined;                  // digest over all seeds, original mode
  std::vector<buckets::BucketId> result;    // claimed cell-wide skyline buckets
};

struct SsqOptions {
  uint16_t lh = 80;
  uint32_t xi1 = 1;
  bool modified = false;
  std::vector<NodeId> false_seed_nodes;  // reporters that submit garbage seeds
  harness::Accountant* accountant = nullptr;
};

Bytes seed_body(const std::vector<buckets::BucketId>& skyline, size_t dims);
crypto::Digest verification_seed(const crypto::Prf& prf, const crypto::SymKey& key,
                                 const std::vector<buckets::BucketId>& skyline, size_t dims,
                                 uint16_t lh);
// Unkeyed digest over all verification seeds, concatenated by ascending
// producer node id.
crypto::Digest combine_seeds(const crypto::Prf& prf,
                             std::vector<std::pair<NodeId, crypto::Digest>> seeds, uint16_t lh);

// The xi1 members with the smallest order seeds, ascending (ties by id).
std::vector<NodeId> select_reporters(const crypto::Prf& prf,
                                     const std::function<crypto::SymKey(NodeId)>& master,
                                     const std::vector<NodeId>& members, uint32_t xi1,
                                     uint16_t lh);

SkylineAnswer run_skyline_epoch(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                                const topo::AggregationTree& tree,
                                const topo::GroupPartition& groups, Epoch t,
                                const std::vector<buckets::Datum>& data,
                                const std::vector<proofs::NodeKeyState>& states,
                                const SsqOptions& opts);

struct GroupCheck {
  uint32_t group = 0;
  bool accepted = false;
  uint32_t valid_seeds = 0;
};

struct SkylineVerify {
  srq::Verdict verdict = srq::Verdict::RejectForgedProof;
  std::vector<GroupCheck> groups;
  std::vector<buckets::BucketId> skyline;  // recomputed from accepted reports
  std::vector<buckets::Datum> data;        // opened quasi data of accepted groups
  std::vector<buckets::Datum> skyline_points;  // non-dominated opened data
  std::string detail;
};

// In original mode a single digest must match the recomputation over every
// expected reporter; in modified mode each group stands alone and is accepted
// when at least xi3 of its xi1 seeds verify against the reported skyline.
SkylineVerify verify_skyline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                             const topo::GroupPartition& groups, proofs::KeySchedule& schedule,
                             const SkylineAnswer& answer, uint32_t xi1, uint32_t xi3,
                             uint16_t lh);

// Ungrouped reference scheme: every node floods the whole cell, every node
// computes the cell-wide skyline, and the nodes whose epoch key falls under
// the threshold deliver a verification seed.
struct BaselineAnswer {
  Epoch epoch = 0;
  std::vector<buckets::BucketId> skyline;
  std::vector<srq::SealedEntry> entries;
  std::vector<NodeId> generators;
  std::vector<std::pair<NodeId, crypto::Digest>> proofs;  // ascending node id
};

BaselineAnswer run_baseline_epoch(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                                  const topo::AggregationTree& tree, Epoch t,
                                  const std::vector<buckets::Datum>& data,
                                  const std::vector<proofs::NodeKeyState>& states,
                                  const Wide& key_threshold, uint16_t lh,
                                  harness::Accountant* accountant);

SkylineVerify verify_baseline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                              proofs::KeySchedule& schedule, uint32_t n,
                              const BaselineAnswer& answer, const Wide& key_threshold,
                              uint16_t lh);

std::vector<buckets::Datum> skyline_data(const std::vector<buckets::Datum>& items);

}  // namespace tsq::ssq
