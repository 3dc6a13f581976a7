#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsq/buckets.hpp"
#include "tsq/crypto.hpp"
#include "tsq/topology.hpp"

namespace tsq::proofs {

using buckets::BucketId;
using buckets::BucketingScheme;
using crypto::Digest;
using crypto::Prf;
using crypto::SymKey;

// A proof label: either a bucket id or the "sensed nothing" marker (nullopt).
using BucketLabel = std::optional<BucketId>;

inline BucketLabel empty_label() { return std::nullopt; }

// Dense label indexing: 0 = empty label, then bucket ids lexicographic.
size_t label_index(const BucketingScheme& s, const BucketLabel& label);
BucketLabel label_at(const BucketingScheme& s, size_t idx);
size_t label_count(const BucketingScheme& s);  // w^d + 1

// Distinct prime per (node, label): the first (w^d+1)*N primes laid out
// row-major, sensors 1..N-1 ascending, the storage node's block last; within
// a node the empty label comes first, then bucket ids lexicographic.
class PrimeRegistry {
 public:
  struct Owner {
    NodeId node;
    BucketLabel label;
  };

  static PrimeRegistry build(const BucketingScheme& s, uint32_t n_nodes);

  uint64_t prime(NodeId node, const BucketLabel& label) const;
  const Owner* owner(uint64_t prime) const;  // nullptr for foreign primes
  const std::vector<uint64_t>& primes() const { return primes_; }
  size_t labels_per_node() const { return labels_; }
  uint32_t nodes() const { return n_; }

 private:
  uint32_t n_ = 0;
  size_t labels_ = 0;
  std::vector<uint16_t> radix_;   // interval count per dimension
  std::vector<uint64_t> primes_;  // registry order
  std::unordered_map<uint64_t, Owner> owners_;

  size_t slot(NodeId node, size_t label_idx) const;
};

// First k primes (2, 3, 5, ...).
std::vector<uint64_t> first_primes(size_t k);

// Per-(node,label) contribution counts recovered from a prime product, or
// assembled as generator ground truth.
struct ContributionTable {
  std::map<std::pair<NodeId, BucketLabel>, uint64_t> counts;

  bool operator==(const ContributionTable&) const = default;

  void add(NodeId node, const BucketLabel& label, uint64_t k = 1);
  uint64_t count(NodeId node, const BucketLabel& label) const;
  uint64_t bucket_total(const BucketId& b) const;  // summed over nodes
  std::vector<BucketId> nonempty_buckets() const;  // sorted, data labels only
  void write_csv(std::ostream& os) const;
};

// Authority/generator key schedule: initial chain keys plus a cursor cache so
// sequential epochs advance in O(chains). Random access to other epochs
// recomputes from epoch 0.
class KeySchedule {
 public:
  KeySchedule(const Prf& prf, const BucketingScheme& s, uint32_t n_nodes,
              uint16_t lk, Rng keys_rng);

  void advance_to(Epoch t);
  Epoch cursor() const { return cursor_; }

  SymKey master_at(NodeId i, Epoch t) const;
  SymKey bucket_key_at(NodeId i, const BucketLabel& label, Epoch t) const;
  SymKey bucket_key_at_index(NodeId i, size_t label_idx, Epoch t) const;

  const BucketingScheme& scheme() const { return *scheme_; }
  uint32_t nodes() const { return n_; }
  uint16_t lk() const { return lk_; }

 private:
  const Prf* prf_;
  const BucketingScheme* scheme_;
  uint32_t n_;
  uint16_t lk_;
  Epoch cursor_ = 0;
  std::vector<SymKey> master0_, master_;
  std::vector<std::vector<SymKey>> bucket0_, bucket_;
};

// What an honest sensor holds: exactly one key per chain, for the current
// epoch only. Advancing overwrites in place (forward security surrogate).
struct NodeKeyState {
  NodeId node = 0;
  Epoch epoch = 0;
  SymKey master;
  std::vector<SymKey> bucket;  // by label index

  static NodeKeyState initial(const BucketingScheme& s, NodeId node, uint16_t lk,
                              Rng keys_rng);
  void advance(const Prf& prf);
};

// Per-node epoch proof <H_{i,t}, P_{i,t}>.
struct LocalProof {
  Digest H;
  Wide P;
};

// data_buckets carries one bucket id per datum (repeats allowed). An empty
// list yields the empty-label proof hash_K(k_empty) and prime p_empty.
LocalProof local_proof(const Prf& prf, const NodeKeyState& keys,
                       const PrimeRegistry& reg, const BucketingScheme& s,
                       std::span<const BucketId> data_buckets, uint16_t lh);

// In-tree aggregation: digest over the sum of child digests plus own local
// digest, product over child products times own local prime product.
Digest aggregate_digest(const Prf& prf, const SymKey& master,
                        std::span<const Digest> child_digests,
                        const Digest& own_local, uint16_t lh);
Wide aggregate_product(std::span<const Wide> child_products, const Wide& own_local);

// Trial division of P over the registry. complete == false leaves the
// residual (> 1) for diagnostics; any foreign factor means a forged product.
struct FactorizeResult {
  bool complete = false;
  ContributionTable table;
  Wide residual;
};

FactorizeResult factorize(const Wide& P, const PrimeRegistry& reg);

// Key view used by digest reconstruction; the authority binds it to a
// KeySchedule, an adversary may bind guessed keys instead.
struct KeyView {
  std::function<SymKey(NodeId)> master;
  std::function<SymKey(NodeId, size_t label_idx)> bucket;
};

KeyView schedule_view(const KeySchedule& sched, Epoch t);

// H'_i implied by the table: keyed hash over sum of count * bucket-key values
// (a node absent from the table hashes the zero sum, which no honest node
// produces).
Digest node_digest_from_table(const Prf& prf, const KeyView& keys,
                              const BucketingScheme& s,
                              const ContributionTable& table, NodeId node,
                              uint16_t lh);

// Bottom-up replay of the aggregation recursion over the whole tree.
Digest reconstruct_root(const Prf& prf, const KeyView& keys,
                        const BucketingScheme& s, const topo::AggregationTree& tree,
                        const ContributionTable& table, uint16_t lh);

// Depth-upsilon subtree proof pair <Hbar^u, Pbar^u>.
struct SubtreeProofPair {
  Digest H;
  Wide P;

  bool operator==(const SubtreeProofPair&) const = default;
};

// Chain for upsilon = 0..m. child_sets are the children's chains (each at
// least size m, i.e. upsilon 0..m-1 available).
std::vector<SubtreeProofPair> subtree_chain(
    const Prf& prf, const SymKey& master, const LocalProof& own,
    std::span<const std::vector<SubtreeProofPair>> child_sets, unsigned m,
    uint16_t lh);

enum class SubtreeVerdict { Pass, Fail };

// Verify a witness's depth-m proof: factor Pbar (foreign factors or nodes
// outside the subtree fail), replay the bounded recursion, compare digests.
SubtreeVerdict verify_subtree_proof(const Prf& prf, const KeyView& keys,
                                    const BucketingScheme& s,
                                    const topo::AggregationTree& tree,
                                    const PrimeRegistry& reg, NodeId witness,
                                    unsigned m, const SubtreeProofPair& proof,
                                    uint16_t lh);

// Hop-by-hop authenticated forwarding: each node on the path appends
// hash_K(payload || hops so far).
struct TracebackChain {
  Bytes payload;
  std::vector<Digest> hops;
};

void traceback_extend(const Prf& prf, TracebackChain& chain, const SymKey& key,
                      uint16_t lh);

struct TracebackCheck {
  bool intact = false;
  // First alteration position walking backward; position hops.size()+1 means
  // the node above the last hop (the storage node). Meaningful when !intact.
  unsigned altered_at = 0;
};

// path_keys[j] is the key of the node that appended hops[j]; throws
// ConfigError when the key count does not match the hop count.
TracebackCheck traceback_verify(const Prf& prf, const TracebackChain& chain,
                                std::span<const SymKey> path_keys, uint16_t lh);

}  // namespace tsq::proofs
