#include "tsq/analytics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "tsq/common.hpp"

namespace tsq::analytics {

uint32_t ceil_log2(uint64_t x) {
  if (x <= 1) return 0;
  return 64u - static_cast<uint32_t>(std::countl_zero(x - 1));
}

namespace {

double catch_prob(double guess_bits) {
  // 1 - 2^-b without cancellation for large b.
  return -std::expm1(-guess_bits * std::log(2.0));
}

double lchoose(double n, double k) {
  if (k < 0 || k > n) return -HUGE_VAL;
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

}  // namespace

double det_prob_range(uint32_t n, uint16_t lk, uint16_t lh, uint32_t delta) {
  require_config(n >= 2, "need a storage node and at least one sensor");
  double chains = static_cast<double>(n) * delta + n - 2.0 * delta;
  return std::min(catch_prob(lh), catch_prob(static_cast<double>(lk) * chains));
}

double det_prob_skyline(uint32_t mu, uint32_t xi1, uint16_t lk, uint16_t lh) {
  double keys = static_cast<double>(mu) * xi1;
  return std::min(catch_prob(lh), catch_prob(static_cast<double>(lk) * keys));
}

RangeCost comm_cost_range(const RangeCostParams& p) {
  require_config(p.n >= 2 && p.w >= 1 && p.d >= 1, "degenerate range cost parameters");
  double c = static_cast<double>(ceil_log2(p.w)) * p.d;
  RangeCost out;
  out.proofs = static_cast<double>(p.n - 1) * (p.lh + p.lp);
  out.buckets = p.p_dtob * p.y * c * ceil_log2(p.n);
  out.reply = static_cast<double>(p.lh) + p.lp;
  out.query = p.a * c;
  out.total = out.proofs + out.buckets + out.reply + out.query;
  return out;
}

SkylineCost comm_cost_skyline(const SkylineCostParams& p) {
  require_config(p.n >= 2 && p.mu >= 1 && p.w >= 1 && p.d >= 1, "degenerate skyline cost parameters");
  require_config((p.n - 1) % p.mu == 0, "mu must divide the sensor count");
  double gs = static_cast<double>(p.n - 1) / p.mu;
  double c = static_cast<double>(ceil_log2(p.w)) * p.d;
  double share = p.y / p.n;  // one node's expected slice of the epoch data

  SkylineCost out;
  out.c1 = gs * gs * (share * p.ld + p.p_dtob * share * c + p.lid + p.lh);
  out.c2 = p.p_dtob * p.p_q * p.y * c + p.p_q * p.y * p.ld + p.lh + p.lid + gs * p.lid;
  out.c3 = p.lid + p.lh + static_cast<double>(p.mu) * p.mu * p.p_dtob * p.p_q * p.y * c +
           p.p_q * p.y * p.ld;
  out.total = p.mu * out.c1 + static_cast<double>(p.mu) * p.xi1 * out.c2 * ceil_log2(p.n) + out.c3;
  return out;
}

double comm_cost_baseline(const BaselineCostParams& p) {
  require_config(p.n >= 2 && p.w >= 1 && p.d >= 1, "degenerate baseline cost parameters");
  double c = static_cast<double>(ceil_log2(p.w)) * p.d;
  double share = p.y / p.n;
  double sensors = static_cast<double>(p.n - 1);
  double flood = sensors * sensors * (share * p.ld + p.p_dtob * share * c + p.lid);
  double seeds = p.expected_senders * (p.lid + p.lh) * ceil_log2(p.n);
  return flood + seeds;
}

double expected_witnesses(uint32_t n, uint32_t xi2, uint16_t lh) {
  require_config(n >= 2, "need a storage node and at least one sensor");
  return std::ldexp(static_cast<double>(xi2) * (n - 1), -static_cast<int>(lh));
}

double reporter_capture_prob(uint32_t gs, uint32_t xi1, uint32_t xi3, uint32_t x) {
  require_config(xi1 <= gs, "more reporters than group members");
  require_config(x <= gs, "more compromised members than the group holds");
  if (xi3 == 0) return 1.0;
  if (xi3 > xi1 || xi3 > x) return 0.0;
  double denom = lchoose(gs, x);
  double sum = 0.0;
  uint32_t hi = std::min(xi1, x);
  for (uint32_t j = hi; j >= xi3; --j) {  // small terms first keeps the tail exact
    double t = lchoose(xi1, j) + lchoose(gs - xi1, static_cast<double>(x) - j) - denom;
    if (t > -HUGE_VAL) sum += std::exp(t);
    if (j == 0) break;
  }
  return std::min(sum, 1.0);
}

double skyline_containment_prob(double y, double n_g, double s) {
  require_config(y >= 1 && n_g >= 0 && n_g <= y && s >= 0, "degenerate containment parameters");
  if (s == 0) return 1.0;
  if (s > n_g) return 0.0;
  double lg = 0.0;
  for (double i = 0; i < s; ++i) lg += std::log((n_g - i) / (y - i));
  return std::exp(lg);
}

double skyline_drop_prob(uint32_t gs, uint32_t xi1, uint32_t xi3, uint32_t x, double y,
                         double n_g, double s) {
  return reporter_capture_prob(gs, xi1, xi3, x) * skyline_containment_prob(y, n_g, s);
}

}  // namespace tsq::analytics
