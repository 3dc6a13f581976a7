#pragma once

#include <vector>

#include "tsq/srq.hpp"

namespace tsq::stq {

// Storage-side answer to a top-k query: the k best-ranked nonempty buckets in
// rank order, their sealed entries, and the epoch-wide proof.
struct TopKAnswer {
  Epoch epoch = 0;
  uint32_t k = 0;
  std::vector<buckets::BucketId> zeta;
  std::vector<srq::SealedEntry> entries;
  crypto::Digest root_digest;
  Wide root_product = 1;
};

// Ranks buckets by the coefficient-weighted sum of interval midpoints,
// ascending, breaking ties lexicographically, and keeps the first k.
std::vector<buckets::BucketId> select_zeta(std::vector<buckets::BucketId> nonempty,
                                           const buckets::BucketingScheme& scheme,
                                           const std::vector<double>& coeffs, uint32_t k);

TopKAnswer answer_top_k(const srq::StorageArchive& archive, Epoch t, uint32_t k,
                        const buckets::BucketingScheme& scheme, const std::vector<double>& coeffs,
                        harness::Accountant* accountant = nullptr);

// Rebuilds the expected bucket ranking from the factorized proof and rejects
// answers whose claimed set, order, or returned counts disagree with it.
srq::VerifyResult verify_top_k(const srq::AuthorityVerifier& auth, const TopKAnswer& answer,
                               uint32_t k, const std::vector<double>& coeffs);

}  // namespace tsq::stq
