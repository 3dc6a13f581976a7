#pragma once

#include <cstdint>

namespace tsq::analytics {

// ceil(log2(x)) for x >= 1; 0 maps to 0.
uint32_t ceil_log2(uint64_t x);

// Probability that a proof-forging storage node is caught on a range answer:
// the better of guessing the aggregate digest (2^-lh per try) and guessing
// every key needed to recompute it (n*delta + n - 2*delta chains of lk bits,
// delta = non-empty buckets per sensor).
double det_prob_range(uint32_t n, uint16_t lk, uint16_t lh, uint32_t delta);

// Skyline analogue: forging the combined seed digest vs guessing the mu*xi1
// reporter keys.
double det_prob_skyline(uint32_t mu, uint32_t xi1, uint16_t lk, uint16_t lh);

// Range query transmission model, everything in bits.
struct RangeCostParams {
  uint32_t n = 0;       // cell size including the storage node
  uint32_t w = 0;       // intervals per dimension
  uint32_t d = 0;       // dimensions
  double y = 0;         // data items per epoch, cell-wide
  double p_dtob = 1;    // fraction of items needing explicit bucket ids
  double a = 0;         // buckets matched by the query
  uint16_t lh = 80;
  uint16_t lp = 1000;   // bits of one prime product in flight
};

struct RangeCost {
  double proofs = 0;   // per-sensor proof uplink
  double buckets = 0;  // explicit bucket ids riding the data
  double reply = 0;    // storage-to-authority proof
  double query = 0;    // query bucket ids downlink
  double total = 0;
};

RangeCost comm_cost_range(const RangeCostParams& p);

// Grouped skyline transmission model.
struct SkylineCostParams {
  uint32_t n = 0;
  uint32_t mu = 0;      // group count; group size = (n-1)/mu
  uint32_t xi1 = 0;     // reporters per group
  uint32_t w = 0;
  uint32_t d = 0;
  double y = 0;         // items per epoch, cell-wide
  double p_dtob = 1;
  double p_q = 0;       // quasi-skyline fraction of a group's data
  uint16_t lh = 80;
  uint16_t ld = 32;     // one attribute vector
  uint16_t lid = 16;    // one node id
};

struct SkylineCost {
  double c1 = 0;     // in-group broadcast, one group, all members
  double c2 = 0;     // one reporter's uplink report
  double c3 = 0;     // storage-to-authority reply
  double total = 0;  // mu*c1 + mu*xi1*c2*ceil_log2(n) + c3
};

SkylineCost comm_cost_skyline(const SkylineCostParams& p);

// Ungrouped reference: every node floods the cell, threshold-chosen nodes
// send a seed upward. expected_senders = (n-1) * threshold-fraction.
struct BaselineCostParams {
  uint32_t n = 0;
  uint32_t w = 0;
  uint32_t d = 0;
  double y = 0;
  double p_dtob = 1;
  double expected_senders = 0;
  uint16_t lh = 80;
  uint16_t ld = 32;
  uint16_t lid = 16;
};

double comm_cost_baseline(const BaselineCostParams& p);

// Expected number of witnesses at threshold xi2 over n-1 sensors with
// lh-bit order seeds.
double expected_witnesses(uint32_t n, uint32_t xi2, uint16_t lh);

// P(at least xi3 of the xi1 reporters of one group fall in a random
// x-subset of compromised members), group size gs. Hypergeometric tail.
double reporter_capture_prob(uint32_t gs, uint32_t xi1, uint32_t xi3, uint32_t x);

// P(a fixed group's n_g-item random subset of y items contains all s skyline
// items): C(y-s, n_g-s)/C(y, n_g).
double skyline_containment_prob(double y, double n_g, double s);

// Joint probability that a compromised-group drop both passes the seed
// quorum and removes the whole skyline.
double skyline_drop_prob(uint32_t gs, uint32_t xi1, uint32_t xi3, uint32_t x, double y,
                         double n_g, double s);

}  // namespace tsq::analytics
