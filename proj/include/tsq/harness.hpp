#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tsq/accounting.hpp"
#include "tsq/adv.hpp"
#include "tsq/buckets.hpp"
#include "tsq/crypto.hpp"
#include "tsq/proofs.hpp"
#include "tsq/rng.hpp"
#include "tsq/srq.hpp"
#include "tsq/ssq.hpp"
#include "tsq/stq.hpp"
#include "tsq/topology.hpp"

namespace tsq::harness {

// How per-epoch data is synthesized.
//   uniform         - independent uniform attributes, random origins
//   distinct_bucket - sensor i's items all land in bucket rank (i-1) mod w^d
//   group_antichain - y/n items per member; a group's buckets form an
//                     antichain so every item is quasi-skyline (d == 2)
//   lattice         - attributes snap to interval midpoints, random origins
struct DataModelConfig {
  std::string kind = "uniform";
};

struct QueryConfig {
  std::string kind;          // range | topk | skyline; empty = follow mode
  std::vector<double> lo;    // range rectangle; empty = whole domain
  std::vector<double> hi;
  uint32_t k = 1;            // top-k size
  std::vector<double> coeffs;  // ranking weights; empty = all ones
};

struct ScenarioConfig {
  uint64_t seed = 1;
  uint32_t n = 16;       // cell size including the storage node
  uint16_t d = 2;        // attribute dimensions
  uint16_t w = 4;        // intervals per dimension
  double lo = 0;         // attribute domain, shared by every dimension
  double hi = 1;
  uint32_t y = 64;       // data items per epoch (model value; see data.kind)
  uint32_t epochs = 1;
  uint16_t lh = 80;      // digest bits
  uint16_t lk = 16;      // key bits
  uint32_t lP = 1000;    // analytic budget for one prime product
  uint32_t ld = 32;      // one data value
  uint32_t lid = 16;     // one node id
  double radius = 0;     // radio radius; 0 = auto
  uint32_t mu = 0;       // group count; used when uniform_groups
  bool uniform_groups = false;  // contiguous id blocks instead of geography
  uint32_t xi1 = 1;      // reporters per group
  uint32_t xi2 = 0;      // witness threshold on raw order seeds; 0 = off
  uint32_t xi3 = 1;      // seed quorum, modified skyline verification
  uint32_t m = 2;        // subtree proof depth
  bool ssq_modified = false;
  double baseline_threshold = 0.25;  // sender fraction of the key space
  std::string mode = "srq";          // srq | stq | ssq | ssq_baseline
  std::string cost_mode = "analytic";  // analytic | measured
  DataModelConfig data;
  QueryConfig query;
  double field_sigma = 1.0;     // reading noise for redundancy scenarios
  double redundancy_eps = 0;    // flag threshold; 0 = 3 * field_sigma
  double bogus_fraction = 0.25;  // compromised sensor share, bogus readings

  void validate() const;
  static ScenarioConfig from_json(const std::string& text);
};

// Everything a scenario shares across epochs. Construct in place; the key
// schedule keeps pointers into the owning object, so no copies or moves.
struct World {
  crypto::Prf prf;
  buckets::BucketingScheme scheme;
  topo::Cell cell;
  topo::AggregationTree tree;
  topo::GroupPartition groups;
  proofs::PrimeRegistry registry;
  proofs::KeySchedule schedule;
  std::vector<proofs::NodeKeyState> states;  // epoch 0

  explicit World(const ScenarioConfig& cfg);
  World(const World&) = delete;
  World& operator=(const World&) = delete;
};

std::vector<buckets::Datum> generate_data(const ScenarioConfig& cfg, const World& w, Epoch t,
                                          Rng& rng);

// Generator-side contribution table: one (node, bucket) count per item, an
// empty label for every node that sensed nothing (the storage node always).
proofs::ContributionTable truth_table(const std::vector<buckets::Datum>& data,
                                      const buckets::BucketingScheme& scheme, uint32_t n);

// floor(fraction * 2^bits) as a key-space threshold.
Wide threshold_from_fraction(double fraction, uint16_t bits);

struct EpochOutcome {
  Epoch epoch = 0;
  srq::Verdict verdict = srq::Verdict::Accept;
  uint64_t returned_items = 0;
  uint64_t matched_items = 0;  // generator ground truth
  bool table_matches = false;  // factorized proof == ground-truth table
  bool result_matches = false; // returned payloads == ground-truth result
};

struct RunMetrics {
  std::vector<EpochOutcome> epochs;
  double total_bits = 0;
  std::map<std::string, double> channel_bits;
  std::map<std::string, double> extra;

  bool all_accepted() const;
  std::string to_json() const;
  void write_csv(std::ostream& os) const;
};

RunMetrics run_scenario(const ScenarioConfig& cfg);

// Grid runner: {"base": {scenario...}, "axes": {"field": [values...]}}.
// Writes point_NNN.json per grid point plus summary.csv into out_dir.
void run_sweep(const std::string& grid_text, const std::string& out_dir);

struct TrialStats {
  uint64_t trials = 0;
  uint64_t detected = 0;
  double rate = 0;
  double expected = 0;  // model prediction for `rate`
  std::map<std::string, double> extra;

  std::string to_json() const;
};

TrialStats attack_trials(const ScenarioConfig& cfg, const adv::AttackScript& script,
                         uint64_t trials);

}  // namespace tsq::harness
