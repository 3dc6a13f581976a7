#include "tsq/buckets.hpp"

#include <algorithm>
#include <cmath>

namespace tsq::buckets {

AttributeDomain AttributeDomain::integer_partition(long lo, long hi, uint16_t w) {
  require_config(w >= 1, "interval count must be >= 1");
  require_config(hi > lo, "domain must be nonempty");
  long count = hi - lo + 1;
  require_config(count % w == 0, "integer domain size must be divisible by w");
  long per = count / w;
  AttributeDomain d;
  d.lo = static_cast<double>(lo);
  d.hi = static_cast<double>(hi);
  d.w = w;
  for (uint16_t nu = 1; nu <= w; ++nu) {
    d.lower.push_back(static_cast<double>(lo + (nu - 1) * per));
    d.upper.push_back(static_cast<double>(lo + nu * per - 1));
  }
  return d;
}

AttributeDomain AttributeDomain::continuous(double lo, double hi, uint16_t w) {
  require_config(w >= 1, "interval count must be >= 1");
  require_config(hi > lo, "domain must be nonempty");
  AttributeDomain d;
  d.lo = lo;
  d.hi = hi;
  d.w = w;
  double len = (hi - lo) / w;
  for (uint16_t nu = 1; nu <= w; ++nu) {
    d.lower.push_back(lo + (nu - 1) * len);
    d.upper.push_back(nu == w ? hi : lo + nu * len);
  }
  return d;
}

uint16_t AttributeDomain::interval_of(double v) const {
  require_config(v >= lo && v <= hi, "attribute value outside domain");
  // value lands in nu iff lower[nu-1] <= v < lower[nu]; last interval closed
  for (uint16_t nu = 1; nu < w; ++nu)
    if (v < lower[nu]) return nu;
  return w;
}

BucketingScheme BucketingScheme::uniform(const AttributeDomain& dom, uint16_t d) {
  require_config(d >= 1, "need at least one dimension");
  BucketingScheme s;
  s.domains.assign(d, dom);
  return s;
}

unsigned BucketingScheme::bucket_id_bits() const {
  unsigned per = w() <= 1 ? 1 : ceil_log2(w());
  if (per == 0) per = 1;
  return per * d();
}

uint64_t BucketingScheme::bucket_count() const {
  uint64_t n = 1;
  for (const auto& dom : domains) n *= dom.w;
  return n;
}

uint64_t BucketId::dense_rank(const BucketingScheme& s) const {
  require(v.size() == s.domains.size(), "bucket id dimension mismatch");
  uint64_t r = 0;
  for (size_t g = 0; g < v.size(); ++g) {
    require(v[g] >= 1 && v[g] <= s.domains[g].w, "bucket component out of range");
    r = r * s.domains[g].w + (v[g] - 1);
  }
  return r;
}

BucketId BucketId::from_dense_rank(const BucketingScheme& s, uint64_t rank) {
  BucketId b;
  b.v.assign(s.domains.size(), 1);
  for (size_t g = s.domains.size(); g-- > 0;) {
    b.v[g] = static_cast<uint16_t>(rank % s.domains[g].w + 1);
    rank /= s.domains[g].w;
  }
  require(rank == 0, "dense rank out of range");
  return b;
}

BucketId bucketize(std::span<const double> attrs, const BucketingScheme& s) {
  require_config(attrs.size() == s.domains.size(), "datum dimension mismatch");
  BucketId b;
  b.v.reserve(attrs.size());
  for (size_t g = 0; g < attrs.size(); ++g)
    b.v.push_back(s.domains[g].interval_of(attrs[g]));
  return b;
}

std::vector<BucketId> query_bucket_set(const RangeQuery& q, const BucketingScheme& s) {
  require_config(q.lo.size() == s.domains.size() && q.hi.size() == s.domains.size(),
                 "query dimension mismatch");
  std::vector<uint16_t> alpha, beta;
  for (size_t g = 0; g < s.domains.size(); ++g) {
    require_config(q.lo[g] <= q.hi[g], "query range inverted");
    alpha.push_back(s.domains[g].interval_of(q.lo[g]));
    beta.push_back(s.domains[g].interval_of(q.hi[g]));
  }
  std::vector<BucketId> out;
  BucketId cur;
  cur.v = alpha;
  while (true) {
    out.push_back(cur);
    size_t g = s.domains.size();
    while (g-- > 0) {
      if (cur.v[g] < beta[g]) {
        ++cur.v[g];
        for (size_t h = g + 1; h < s.domains.size(); ++h) cur.v[h] = alpha[h];
        break;
      }
      if (g == 0) return out;
    }
  }
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dominates: dimension mismatch");
  bool strict = false;
  for (size_t g = 0; g < a.size(); ++g) {
    if (a[g] > b[g]) return false;
    if (a[g] < b[g]) strict = true;
  }
  return strict;
}

bool dominates(const BucketId& a, const BucketId& b) {
  require(a.v.size() == b.v.size(), "dominates: dimension mismatch");
  bool strict = false;
  for (size_t g = 0; g < a.v.size(); ++g) {
    if (a.v[g] > b.v[g]) return false;
    if (a.v[g] < b.v[g]) strict = true;
  }
  return strict;
}

double bucket_rank(const BucketId& b, const BucketingScheme& s,
                   std::span<const double> coeffs) {
  require_config(coeffs.size() == s.domains.size(), "rank coefficient count mismatch");
  require(b.v.size() == s.domains.size(), "bucket id dimension mismatch");
  double r = 0;
  for (size_t g = 0; g < coeffs.size(); ++g)
    r += coeffs[g] * s.domains[g].midpoint(b.v[g]);
  return r;
}

double datum_rank(std::span<const double> attrs, std::span<const double> coeffs) {
  require(attrs.size() == coeffs.size(), "rank coefficient count mismatch");
  double r = 0;
  for (size_t g = 0; g < attrs.size(); ++g) r += coeffs[g] * attrs[g];
  return r;
}

std::vector<BucketId> skyline_buckets(std::vector<BucketId> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<BucketId> out;
  for (const auto& b : s) {
    bool dominated = false;
    for (const auto& other : s) {
      if (dominates(other, b)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(b);
  }
  return out;
}

}  // namespace tsq::buckets
