#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "doctest.h"
#include "tsq/buckets.hpp"
#include "tsq/common.hpp"
#include "tsq/rng.hpp"

using namespace tsq;
using namespace tsq::buckets;

namespace {

BucketId bid(std::initializer_list<uint16_t> v) { return BucketId{std::vector<uint16_t>(v)}; }

// quadratic reference skyline used as an independent oracle
std::vector<BucketId> skyline_oracle(std::vector<BucketId> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<BucketId> out;
  for (const auto& a : s) {
    bool dom = false;
    for (const auto& b : s)
      if (dominates(b, a)) { dom = true; break; }
    if (!dom) out.push_back(a);
  }
  return out;
}

}  // namespace

TEST_CASE("integer partition splits [1,20] into equal runs") {
  auto dom = AttributeDomain::integer_partition(1, 20, 2);
  CHECK(dom.w == 2);
  CHECK(dom.lower == std::vector<double>{1, 11});
  CHECK(dom.upper == std::vector<double>{10, 20});
  CHECK(dom.midpoint(1) == doctest::Approx(5.5));
  CHECK(dom.midpoint(2) == doctest::Approx(15.5));
  for (long v = 1; v <= 10; ++v) CHECK(dom.interval_of(double(v)) == 1);
  for (long v = 11; v <= 20; ++v) CHECK(dom.interval_of(double(v)) == 2);
  CHECK_THROWS_AS(dom.interval_of(0), ConfigError);
  CHECK_THROWS_AS(dom.interval_of(21), ConfigError);

  // w must divide the value count
  CHECK_THROWS_AS(AttributeDomain::integer_partition(1, 20, 3), ConfigError);
  CHECK_NOTHROW(AttributeDomain::integer_partition(1, 20, 5));
}

TEST_CASE("continuous partition is right-open with a closed top") {
  auto dom = AttributeDomain::continuous(0, 1, 4);
  CHECK(dom.interval_of(0.0) == 1);
  CHECK(dom.interval_of(0.25) == 2);
  CHECK(dom.interval_of(0.4999) == 2);
  CHECK(dom.interval_of(0.5) == 3);
  CHECK(dom.interval_of(0.75) == 4);
  CHECK(dom.interval_of(1.0) == 4);  // hi belongs to the last interval
  CHECK_THROWS_AS(dom.interval_of(-0.001), ConfigError);
  CHECK_THROWS_AS(dom.interval_of(1.001), ConfigError);
}

TEST_CASE("bucketize matches the arithmetic oracle on a full integer grid") {
  auto dom = AttributeDomain::integer_partition(1, 20, 4);  // runs of 5
  auto s = BucketingScheme::uniform(dom, 2);
  for (long x = 1; x <= 20; ++x) {
    for (long y = 1; y <= 20; ++y) {
      double attrs[2] = {double(x), double(y)};
      BucketId got = bucketize(attrs, s);
      BucketId want = bid({uint16_t((x - 1) / 5 + 1), uint16_t((y - 1) / 5 + 1)});
      CHECK(got == want);
    }
  }
}

TEST_CASE("two-interval example point lands in (1,2)") {
  auto dom = AttributeDomain::integer_partition(1, 20, 2);
  auto s = BucketingScheme::uniform(dom, 2);
  double attrs[2] = {2, 11};
  CHECK(bucketize(attrs, s) == bid({1, 2}));
  double wrongdims[3] = {1, 1, 1};
  CHECK_THROWS_AS(bucketize(wrongdims, s), ConfigError);
}

TEST_CASE("bucket id bits and bucket count") {
  auto mk = [](uint16_t w, uint16_t d) {
    return BucketingScheme::uniform(AttributeDomain::continuous(0, 1, w), d);
  };
  CHECK(mk(4, 2).bucket_id_bits() == 4);
  CHECK(mk(10, 2).bucket_id_bits() == 8);
  CHECK(mk(2, 3).bucket_id_bits() == 3);
  CHECK(mk(4, 2).bucket_count() == 16);
  CHECK(mk(10, 2).bucket_count() == 100);
  CHECK(mk(3, 3).bucket_count() == 27);
}

TEST_CASE("dense rank round-trips the whole grid in lexicographic order") {
  auto s = BucketingScheme::uniform(AttributeDomain::continuous(0, 1, 3), 3);
  BucketId prev;
  for (uint64_t r = 0; r < s.bucket_count(); ++r) {
    BucketId b = BucketId::from_dense_rank(s, r);
    CHECK(b.dense_rank(s) == r);
    if (r > 0) CHECK(prev < b);
    prev = b;
  }
  CHECK(BucketId::from_dense_rank(s, 0) == bid({1, 1, 1}));
  CHECK(BucketId::from_dense_rank(s, 26) == bid({3, 3, 3}));
}

TEST_CASE("query bucket set covers exactly the overlapped intervals") {
  auto s2 = BucketingScheme::uniform(AttributeDomain::integer_partition(1, 20, 2), 2);
  RangeQuery q;
  q.lo = {1, 1};
  q.hi = {3, 15};
  auto set = query_bucket_set(q, s2);
  REQUIRE(set.size() == 2);
  CHECK(set[0] == bid({1, 1}));
  CHECK(set[1] == bid({1, 2}));

  auto s4 = BucketingScheme::uniform(AttributeDomain::continuous(0, 1, 4), 2);
  RangeQuery q2;
  q2.lo = {0, 0};
  q2.hi = {0.3, 0.6};
  auto set2 = query_bucket_set(q2, s4);
  // dim 1 overlaps intervals 1..2, dim 2 overlaps 1..3
  REQUIRE(set2.size() == 6);
  CHECK(std::is_sorted(set2.begin(), set2.end()));
  CHECK(set2.front() == bid({1, 1}));
  CHECK(set2.back() == bid({2, 3}));

  RangeQuery point;
  point.lo = {0.5, 0.5};
  point.hi = {0.5, 0.5};
  CHECK(query_bucket_set(point, s4).size() == 1);

  RangeQuery full;
  full.lo = {0, 0};
  full.hi = {1, 1};
  CHECK(query_bucket_set(full, s4).size() == 16);

  RangeQuery inverted;
  inverted.lo = {0.8, 0.0};
  inverted.hi = {0.2, 1.0};
  CHECK_THROWS_AS(query_bucket_set(inverted, s4), ConfigError);
}

TEST_CASE("domination is componentwise <= with one strict <") {
  CHECK(dominates(bid({1, 1}), bid({1, 2})));
  CHECK(dominates(bid({1, 1}), bid({2, 2})));
  CHECK_FALSE(dominates(bid({1, 2}), bid({2, 1})));
  CHECK_FALSE(dominates(bid({2, 1}), bid({1, 2})));
  CHECK_FALSE(dominates(bid({1, 2}), bid({1, 2})));  // irreflexive
  CHECK_FALSE(dominates(bid({2, 2}), bid({1, 1})));

  double a[2] = {0.2, 0.3}, b[2] = {0.2, 0.4}, c[2] = {0.1, 0.9};
  CHECK(dominates(a, b));
  CHECK_FALSE(dominates(b, a));
  CHECK_FALSE(dominates(a, c));
  CHECK_FALSE(dominates(c, a));
}

TEST_CASE("skyline keeps exactly the non-dominated ids") {
  auto sky = skyline_buckets({bid({1, 2}), bid({2, 1}), bid({2, 2})});
  REQUIRE(sky.size() == 2);
  CHECK(sky[0] == bid({1, 2}));
  CHECK(sky[1] == bid({2, 1}));

  auto single = skyline_buckets({bid({2, 2}), bid({2, 2}), bid({1, 1})});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == bid({1, 1}));

  CHECK(skyline_buckets({}).empty());

  auto onedim = skyline_buckets({bid({3}), bid({1}), bid({2})});
  REQUIRE(onedim.size() == 1);
  CHECK(onedim[0] == bid({1}));

  // an antichain survives intact
  auto anti = skyline_buckets({bid({1, 3}), bid({2, 2}), bid({3, 1})});
  CHECK(anti.size() == 3);
}

TEST_CASE("skyline agrees with the quadratic oracle on random sets") {
  Rng rng(914);
  for (int trial = 0; trial < 200; ++trial) {
    uint16_t d = uint16_t(1 + rng.below(4));
    uint16_t w = uint16_t(2 + rng.below(5));
    size_t count = 1 + rng.below(40);
    std::vector<BucketId> s;
    for (size_t i = 0; i < count; ++i) {
      BucketId b;
      for (uint16_t g = 0; g < d; ++g) b.v.push_back(uint16_t(1 + rng.below(w)));
      s.push_back(std::move(b));
    }
    auto got = skyline_buckets(s);
    auto want = skyline_oracle(s);
    CHECK(got == want);
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("linear bucket ranking sums weighted midpoints") {
  auto s = BucketingScheme::uniform(AttributeDomain::integer_partition(1, 20, 2), 2);
  std::vector<double> ones = {1, 1};
  CHECK(bucket_rank(bid({1, 1}), s, ones) == doctest::Approx(11.0));
  CHECK(bucket_rank(bid({1, 2}), s, ones) == doctest::Approx(21.0));
  CHECK(bucket_rank(bid({2, 1}), s, ones) == doctest::Approx(21.0));
  CHECK(bucket_rank(bid({2, 2}), s, ones) == doctest::Approx(31.0));

  std::vector<double> skew = {2, 1};
  CHECK(bucket_rank(bid({1, 2}), s, skew) == doctest::Approx(26.5));

  double attrs[2] = {2, 11};
  CHECK(datum_rank(attrs, ones) == doctest::Approx(13.0));
  CHECK(datum_rank(attrs, skew) == doctest::Approx(15.0));
}
