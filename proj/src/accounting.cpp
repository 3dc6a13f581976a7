#include "tsq/accounting.hpp"

namespace tsq::harness {

const char* to_string(Channel c) {
  switch (c) {
    case Channel::Proof: return "proof";
    case Channel::BucketIds: return "bucket_ids";
    case Channel::Data: return "data";
    case Channel::Ids: return "ids";
    case Channel::Seeds: return "seeds";
    case Channel::Query: return "query";
    case Channel::Reply: return "reply";
  }
  return "?";
}

void Accountant::charge(NodeId from, NodeId to, Channel ch, double bits) {
  require(bits >= 0, "negative charge");
  channels_[static_cast<size_t>(ch)] += bits;
  links_[{from, to}] += bits;
}

double Accountant::total() const {
  double s = 0;
  for (double c : channels_) s += c;
  return s;
}

double Accountant::link_total(NodeId from, NodeId to) const {
  auto it = links_.find({from, to});
  return it == links_.end() ? 0.0 : it->second;
}

double Accountant::product_bits(const Wide& p) const {
  if (params_.mode == CostMode::Analytic) return params_.lP;
  return static_cast<double>(bit_length(p));
}

uint32_t Accountant::uplink_hops(uint32_t realized_depth) const {
  if (params_.mode == CostMode::Analytic) return ceil_log2(params_.n);
  return realized_depth;
}

void Accountant::reset() {
  for (double& c : channels_) c = 0;
  links_.clear();
}

}  // namespace tsq::harness
