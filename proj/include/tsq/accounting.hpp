#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "tsq/common.hpp"

namespace tsq::harness {

// Analytic mode prices messages by the fixed-width cost model (products cost
// a flat budget, uplinks cost the log-depth hop estimate) so totals can be
// compared bit-for-bit against the closed-form cost expressions. Measured
// mode prices realized magnitudes and realized paths.
enum class CostMode { Analytic, Measured };

enum class Channel : uint8_t {
  Proof,      // digests and prime products
  BucketIds,  // bucket id transport
  Data,       // data values (plain or sealed)
  Ids,        // node identifiers
  Seeds,      // order / verification seeds
  Query,      // authority -> storage
  Reply,      // storage -> authority
};
constexpr size_t kChannelCount = 7;
const char* to_string(Channel c);

// Pseudo-ids for link accounting: the authority endpoint, and the sink of a
// local broadcast transmission (receivers of a flood are not itemized).
constexpr NodeId kAuthority = 0xffffffffu;
constexpr NodeId kBroadcast = 0xfffffffeu;

struct CostParams {
  CostMode mode = CostMode::Analytic;
  uint16_t lh = 80;   // digest bits
  uint32_t lP = 1000; // flat bit budget for one aggregate product
  uint32_t ld = 32;   // one data value
  uint32_t lid = 16;  // one node id
  uint32_t n = 0;     // cell size, drives the analytic hop multiplier
};

class Accountant {
 public:
  explicit Accountant(CostParams p) : params_(p) {}

  void charge(NodeId from, NodeId to, Channel ch, double bits);

  double total() const;
  double channel_total(Channel ch) const { return channels_[static_cast<size_t>(ch)]; }
  double link_total(NodeId from, NodeId to) const;
  const std::map<std::pair<NodeId, NodeId>, double>& links() const { return links_; }

  bool analytic() const { return params_.mode == CostMode::Analytic; }
  const CostParams& params() const { return params_; }

  double product_bits(const Wide& p) const;
  uint32_t uplink_hops(uint32_t realized_depth) const;

  void reset();

 private:
  CostParams params_;
  double channels_[kChannelCount] = {};
  std::map<std::pair<NodeId, NodeId>, double> links_;
};

}  // namespace tsq::harness
