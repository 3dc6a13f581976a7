#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsq/buckets.hpp"
#include "tsq/common.hpp"
#include "tsq/crypto.hpp"
#include "tsq/proofs.hpp"
#include "tsq/topology.hpp"

namespace tsq::harness {
class Accountant;
}

namespace tsq::srq {

// One sealed per-bucket payload as it sits on the storage node.
struct SealedEntry {
  NodeId origin = 0;
  Epoch epoch = 0;
  buckets::BucketId bucket;
  uint32_t count = 0;  // plaintext item count, also recoverable by opening
  crypto::SealedPayload payload;
};

// A witness node's full-depth-m subtree proof for one epoch.
struct WitnessProof {
  NodeId witness = 0;
  uint32_t depth = 0;
  proofs::SubtreeProofPair proof;
};

// Everything the storage node retains for one epoch.
struct EpochRecord {
  Epoch epoch = 0;
  std::vector<SealedEntry> entries;   // sorted by (origin, bucket)
  crypto::Digest root_digest;         // aggregate digest received at the root
  Wide root_product = 1;              // aggregate prime product
  std::vector<WitnessProof> witness_proofs;
};

struct StorageArchive {
  std::map<Epoch, EpochRecord> records;

  const EpochRecord& at(Epoch t) const;
  bool has(Epoch t) const { return records.count(t) != 0; }
};

// Per-node corruption hooks used to model compromised sensors. A corrupt
// node lies consistently: the digest it feeds upward (and the subtree chain
// elements it forwards) are built from a fabricated local digest, while its
// own submitted witness proof, if any, stays genuine.
struct NodeBehavior {
  std::vector<NodeId> false_digest_nodes;

  bool corrupt(NodeId i) const;
};

struct PipelineOptions {
  uint16_t lh = 80;          // digest width
  uint32_t xi2 = 0;          // witness threshold on raw order seeds; 0 = off
  uint32_t m = 0;            // subtree proof depth for witnesses
  NodeBehavior behavior;
  harness::Accountant* accountant = nullptr;
};

// Drives the per-epoch report/aggregate flow for the whole cell and appends
// the result to the archive. Node key states advance in lockstep: entry i of
// `states` must hold node i's current keys for exactly the epoch being run.
class EpochPipeline {
 public:
  EpochPipeline(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                const topo::AggregationTree& tree, const proofs::PrimeRegistry& registry,
                PipelineOptions opts);

  // Runs epoch `t` over `data` (every datum must carry epoch == t) and
  // appends the record. `states` is indexed by node id and is not advanced.
  EpochRecord run_epoch(Epoch t, const std::vector<buckets::Datum>& data,
                        const std::vector<proofs::NodeKeyState>& states,
                        StorageArchive* archive) const;

  const topo::AggregationTree& tree() const { return tree_; }
  const PipelineOptions& options() const { return opts_; }

 private:
  const crypto::Prf& prf_;
  const buckets::BucketingScheme& scheme_;
  const topo::AggregationTree& tree_;
  const proofs::PrimeRegistry& registry_;
  PipelineOptions opts_;
};

// Storage-side answer to a range query: the epoch-wide proof plus the sealed
// entries whose buckets intersect the query bucket set.
struct RangeAnswer {
  Epoch epoch = 0;
  std::vector<buckets::BucketId> query_buckets;
  std::vector<SealedEntry> entries;
  crypto::Digest root_digest;
  Wide root_product = 1;
};

RangeAnswer answer_range(const StorageArchive& archive, const buckets::RangeQuery& q,
                         const buckets::BucketingScheme& scheme,
                         harness::Accountant* accountant = nullptr);

enum class Verdict {
  Accept,
  RejectForgedProof,   // product/digest evidence does not check out
  RejectIncomplete,    // proof is sound but returned data disagrees with it
  RejectAuthFailure,   // a sealed payload failed authentication
};

const char* to_string(Verdict v);

struct VerifyResult {
  Verdict verdict = Verdict::RejectForgedProof;
  proofs::ContributionTable table;       // factorized from the answer product
  std::vector<buckets::Datum> data;      // opened payloads, only on Accept
  std::string detail;
};

// The querying authority. Holds the key schedule (it owns the initial keys)
// and never sees simulator ground truth: everything it checks derives from
// the answer itself plus the keys and public cell layout.
class AuthorityVerifier {
 public:
  AuthorityVerifier(const crypto::Prf& prf, const buckets::BucketingScheme& scheme,
                    const topo::AggregationTree& tree, const proofs::PrimeRegistry& registry,
                    proofs::KeySchedule* schedule, uint16_t lh);

  VerifyResult verify_range(const RangeAnswer& answer, const buckets::RangeQuery& q) const;

  // Shared plumbing, reused by the top-k and skyline verifiers.
  // Factorizes, enforces per-node presence, and replays the digest tree.
  std::optional<VerifyResult> check_proof(Epoch t, const crypto::Digest& root_digest,
                                          const Wide& root_product,
                                          proofs::ContributionTable* table_out) const;
  // Opens sealed entries and compares counts against the table restricted to
  // the given bucket set. Appends opened data to `out`.
  std::optional<Verdict> check_entries(Epoch t, const proofs::ContributionTable& table,
                                       const std::vector<buckets::BucketId>& allowed,
                                       const std::vector<SealedEntry>& entries,
                                       std::vector<buckets::Datum>* out,
                                       std::string* detail) const;

  proofs::SubtreeVerdict check_witness(Epoch t, const WitnessProof& wp) const;

  const crypto::Prf& prf() const { return prf_; }
  const buckets::BucketingScheme& scheme() const { return scheme_; }
  const topo::AggregationTree& tree() const { return tree_; }
  const proofs::PrimeRegistry& registry() const { return registry_; }
  proofs::KeySchedule& schedule() const { return *schedule_; }
  uint16_t lh() const { return lh_; }

 private:
  const crypto::Prf& prf_;
  const buckets::BucketingScheme& scheme_;
  const topo::AggregationTree& tree_;
  const proofs::PrimeRegistry& registry_;
  proofs::KeySchedule* schedule_;
  uint16_t lh_;
};

// Plaintext encoding for one sealed bucket payload.
Bytes encode_bucket_data(const std::vector<buckets::Datum>& items);
std::optional<std::vector<buckets::Datum>> decode_bucket_data(const Bytes& plain, NodeId origin,
                                                              Epoch epoch, size_t dims);

}  // namespace tsq::srq
