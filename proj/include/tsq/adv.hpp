#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsq/proofs.hpp"
#include "tsq/rng.hpp"
#include "tsq/srq.hpp"
#include "tsq/ssq.hpp"
#include "tsq/topology.hpp"

namespace tsq::adv {

// Sensors whose raw order seed falls under xi2 at epoch t, ascending id.
std::vector<NodeId> select_witnesses(const crypto::Prf& prf, proofs::KeySchedule& schedule,
                                     Epoch t, uint32_t n, uint32_t xi2, uint16_t lh);

struct SuspectReport {
  bool any_failed = false;
  std::vector<NodeId> innocent;  // union of passing depth-m subtrees
  std::vector<NodeId> suspects;  // intersection of failing subtrees, less innocent
  std::vector<NodeId> target;    // attestation set; always contains the storage node
};

// Partitions the cell from per-witness subtree verdicts. With at least one
// failing witness the culprit pool is the intersection of failing subtrees
// minus every passing subtree; otherwise everything not vouched for stays in.
SuspectReport compute_suspects(
    const topo::AggregationTree& tree, uint32_t m,
    const std::vector<std::pair<NodeId, proofs::SubtreeVerdict>>& verdicts);

// Predicts the verdict a witness's subtree proof would earn, given which
// nodes feed corrupted digests upward: it fails exactly when a corrupt node
// other than the witness itself sits within the witness's depth-m subtree.
proofs::SubtreeVerdict structural_verdict(const topo::AggregationTree& tree, NodeId witness,
                                          uint32_t m, const std::vector<NodeId>& corrupt);

struct AttestResult {
  std::vector<NodeId> revoked;  // compromised sensors caught inside the target
  bool storage_blamed = false;  // target held no compromised sensor
};

AttestResult attest(const std::vector<NodeId>& target, const std::vector<NodeId>& compromised);

// Storage-side mutations of query answers.

// Strips one bucket from the returned entries. With rebuild_product the
// matching prime powers are divided out (empty-label primes patched in for
// nodes losing their last contribution); with guess_digest the aggregate
// digest is replaced by a uniform guess.
srq::RangeAnswer drop_bucket(const srq::RangeAnswer& honest, const buckets::BucketId& victim,
                             const proofs::PrimeRegistry& registry, bool rebuild_product,
                             bool guess_digest, Rng& rng, uint16_t lh);

// Same drop, but the digest is recomputed over the doctored contribution
// table using guessed keys of width lk for every chain the storage node does
// not own. Returns via guessed_out how many keys had to be guessed.
srq::RangeAnswer rebuild_with_guessed_keys(const crypto::Prf& prf,
                                           const buckets::BucketingScheme& scheme,
                                           const topo::AggregationTree& tree,
                                           const proofs::PrimeRegistry& registry,
                                           const srq::RangeAnswer& honest,
                                           const buckets::BucketId& victim,
                                           const proofs::NodeKeyState& own_state, uint16_t lk,
                                           uint16_t lh, Rng& rng, uint32_t* guessed_out);

// Removes the lexicographically first skyline bucket of one group report and
// guesses the combined seed digest (original mode).
ssq::SkylineAnswer drop_group(const ssq::SkylineAnswer& honest, uint32_t group,
                              const buckets::BucketingScheme& scheme, Rng& rng, uint16_t lh);

// Modified-mode collusion: same drop, but compromised reporters re-sign the
// shrunken skyline while honest reporters' seeds go stale.
ssq::SkylineAnswer drop_group_collusion(const ssq::SkylineAnswer& honest, uint32_t group,
                                        const std::vector<NodeId>& compromised,
                                        const crypto::Prf& prf,
                                        const std::vector<proofs::NodeKeyState>& states,
                                        const buckets::BucketingScheme& scheme, uint16_t lh);

// Forwarding-chain trial: hops are appended with path_keys in order; the
// payload flips to `altered` just before hop alter_at appends (alter_at in
// [2, path length+1], the last meaning the storage node; 0 = honest).
proofs::TracebackChain build_traceback(const crypto::Prf& prf, const Bytes& payload,
                                       const std::vector<crypto::SymKey>& path_keys, uint16_t lh,
                                       uint32_t alter_at, const Bytes& altered);

// Neighbor-consensus reading check: a node is flagged when its reading sits
// more than eps away from the median of its neighbors' readings. Nodes
// without neighbors are never flagged.
std::vector<NodeId> redundancy_flags(const topo::NeighborGraph& g,
                                     const std::vector<double>& readings, double eps);

enum class AttackKind {
  None,
  DropBucket,
  DropBucketKeepProof,
  RebuildGuessedKeys,
  DropGroup,
  FalseSubproof,
  AlterTraceback,
  BogusReading,
  FalseSeed,
};

const char* to_string(AttackKind k);

struct AttackScript {
  AttackKind kind = AttackKind::None;
  std::vector<uint16_t> bucket;  // victim bucket; empty = pick per trial
  NodeId node = 0;               // culprit sensor; 0 = pick per trial
  uint32_t group = 0;            // victim group; 0 = pick per trial
  uint32_t hop = 0;              // alteration position; 0 = pick per trial
  uint16_t guess_bits = 0;       // key width for guessed-key rebuilds; 0 = lk
};

AttackScript parse_attack(const std::string& json_text);

}  // namespace tsq::adv
