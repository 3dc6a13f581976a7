#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "tsq/common.hpp"

namespace tsq::buckets {

// One attribute's partition into w consecutive intervals covering [lo, hi].
// Interval nu (1-based) spans [lower[nu-1], lower[nu]) with the last interval
// closed at hi; upper[] holds the representative top value used for ranking
// (hi of the interval for integer-style domains, the next edge for continuous).
struct AttributeDomain {
  double lo = 0;
  double hi = 0;
  uint16_t w = 0;
  std::vector<double> lower;  // size w
  std::vector<double> upper;  // size w

  // Integer-style partition: [lo..hi] holds (hi-lo+1) values split into w
  // equal runs; e.g. [1,20] w=2 -> [1,10],[11,20]. Requires w | (hi-lo+1).
  static AttributeDomain integer_partition(long lo, long hi, uint16_t w);

  // Equal-width continuous partition of [lo, hi].
  static AttributeDomain continuous(double lo, double hi, uint16_t w);

  // 1-based interval index; throws ConfigError when v lies outside [lo, hi].
  uint16_t interval_of(double v) const;

  double midpoint(uint16_t nu) const { return (lower[nu - 1] + upper[nu - 1]) / 2.0; }
};

struct BucketingScheme {
  std::vector<AttributeDomain> domains;

  uint16_t d() const { return static_cast<uint16_t>(domains.size()); }
  uint16_t w() const { return domains.empty() ? 0 : domains[0].w; }

  // Uniform scheme: same partition on every axis.
  static BucketingScheme uniform(const AttributeDomain& dom, uint16_t d);

  // Bits needed to name one bucket id: ceil(log2 w) * d.
  unsigned bucket_id_bits() const;

  uint64_t bucket_count() const;  // w^d
};

// Bucket id: one interval index (1..w) per dimension. Ordered lexicographically.
struct BucketId {
  std::vector<uint16_t> v;

  auto operator<=>(const BucketId&) const = default;

  // Dense rank in [0, w^d) under lexicographic order, mixed radix w.
  uint64_t dense_rank(const BucketingScheme& s) const;
  static BucketId from_dense_rank(const BucketingScheme& s, uint64_t rank);
};

struct Datum {
  std::vector<double> attrs;
  NodeId origin = 0;
  Epoch epoch = 0;
};

struct RangeQuery {
  Epoch epoch = 0;
  std::vector<double> lo;
  std::vector<double> hi;
};

// Map a datum to its bucket; throws ConfigError on dimension mismatch or
// out-of-domain attribute.
BucketId bucketize(std::span<const double> attrs, const BucketingScheme& s);

// All bucket ids overlapping the query rectangle, sorted lexicographically.
std::vector<BucketId> query_bucket_set(const RangeQuery& q, const BucketingScheme& s);

// Componentwise <= with at least one strict <; smaller is preferable.
bool dominates(std::span<const double> a, std::span<const double> b);
bool dominates(const BucketId& a, const BucketId& b);

// Linear ranking R over interval midpoints: sum_g coeff[g] * midpoint(v_g).
double bucket_rank(const BucketId& b, const BucketingScheme& s,
                   std::span<const double> coeffs);
double datum_rank(std::span<const double> attrs, std::span<const double> coeffs);

// Members of S not dominated by any other member. Input may repeat ids;
// output is deduplicated and sorted.
std::vector<BucketId> skyline_buckets(std::vector<BucketId> s);

}  // namespace tsq::buckets
