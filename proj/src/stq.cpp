#include "tsq/stq.hpp"

#include <algorithm>

#include "tsq/accounting.hpp"

namespace tsq::stq {

std::vector<buckets::BucketId> select_zeta(std::vector<buckets::BucketId> nonempty,
                                           const buckets::BucketingScheme& scheme,
                                           const std::vector<double>& coeffs, uint32_t k) {
  std::sort(nonempty.begin(), nonempty.end());
  nonempty.erase(std::unique(nonempty.begin(), nonempty.end()), nonempty.end());
  std::stable_sort(nonempty.begin(), nonempty.end(),
                   [&](const buckets::BucketId& a, const buckets::BucketId& b) {
                     double ra = buckets::bucket_rank(a, scheme, coeffs);
                     double rb = buckets::bucket_rank(b, scheme, coeffs);
                     if (ra != rb) return ra < rb;
                     return a < b;
                   });
  if (nonempty.size() > k) nonempty.resize(k);
  return nonempty;
}

TopKAnswer answer_top_k(const srq::StorageArchive& archive, Epoch t, uint32_t k,
                        const buckets::BucketingScheme& scheme, const std::vector<double>& coeffs,
                        harness::Accountant* accountant) {
  const srq::EpochRecord& rec = archive.at(t);
  TopKAnswer a;
  a.epoch = t;
  a.k = k;
  std::vector<buckets::BucketId> nonempty;
  for (const auto& e : rec.entries) nonempty.push_back(e.bucket);
  a.zeta = select_zeta(std::move(nonempty), scheme, coeffs, k);
  std::vector<buckets::BucketId> sorted = a.zeta;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& e : rec.entries)
    if (std::binary_search(sorted.begin(), sorted.end(), e.bucket)) a.entries.push_back(e);
  a.root_digest = rec.root_digest;
  a.root_product = rec.root_product;
  if (accountant) {
    accountant->charge(harness::kAuthority, 0, harness::Channel::Query, accountant->params().lid);
    accountant->charge(0, harness::kAuthority, harness::Channel::Reply,
                       static_cast<double>(a.root_digest.bits) +
                           accountant->product_bits(a.root_product) +
                           static_cast<double>(a.zeta.size()) * scheme.bucket_id_bits());
  }
  return a;
}

srq::VerifyResult verify_top_k(const srq::AuthorityVerifier& auth, const TopKAnswer& answer,
                               uint32_t k, const std::vector<double>& coeffs) {
  require_config(answer.k == k, "answer does not match the requested k");
  if (auto failed = auth.check_proof(answer.epoch, answer.root_digest, answer.root_product, nullptr))
    return *failed;
  srq::VerifyResult r;
  auto fac = proofs::factorize(answer.root_product, auth.registry());
  r.table = fac.table;
  auto expected = select_zeta(r.table.nonempty_buckets(), auth.scheme(), coeffs, k);
  if (answer.zeta != expected) {
    r.verdict = srq::Verdict::RejectIncomplete;
    r.detail = "claimed top-k set disagrees with the proof";
    return r;
  }
  std::vector<buckets::BucketId> allowed = expected;
  std::sort(allowed.begin(), allowed.end());
  if (auto v = auth.check_entries(answer.epoch, r.table, allowed, answer.entries, &r.data,
                                  &r.detail)) {
    r.verdict = *v;
    r.data.clear();
    return r;
  }
  r.verdict = srq::Verdict::Accept;
  return r;
}

}  // namespace tsq::stq
