#pragma once

// Shared fixtures for protocol-level tests: a deterministic line-topology
// cell with the same key derivation the scenario harness uses, so schedule
// and node states agree about every epoch key.

#include <vector>

#include "tsq/buckets.hpp"
#include "tsq/crypto.hpp"
#include "tsq/proofs.hpp"
#include "tsq/rng.hpp"
#include "tsq/topology.hpp"

namespace testsup {

inline tsq::topo::Cell line_cell(uint32_t n) {
  tsq::topo::Cell cell;
  cell.n = n;
  cell.radius = 0.012;
  for (uint32_t i = 0; i < n; ++i) cell.pos.push_back({0.01 * i, 0.0});
  return cell;
}

inline std::vector<tsq::proofs::NodeKeyState> initial_states(
    const tsq::buckets::BucketingScheme& scheme, uint32_t n, uint16_t lk, tsq::Rng keys_rng) {
  std::vector<tsq::proofs::NodeKeyState> states;
  states.reserve(n);
  for (uint32_t i = 0; i < n; ++i)
    states.push_back(tsq::proofs::NodeKeyState::initial(scheme, i, lk, keys_rng));
  return states;
}

// Members are constructed in dependency order; the schedule keeps pointers
// into prf/scheme, so the object is pinned in place.
struct LineWorld {
  tsq::crypto::Prf prf;
  tsq::buckets::BucketingScheme scheme;
  tsq::topo::Cell cell;
  tsq::topo::AggregationTree tree;
  tsq::proofs::PrimeRegistry registry;
  tsq::proofs::KeySchedule schedule;
  std::vector<tsq::proofs::NodeKeyState> states;

  LineWorld(uint32_t n, uint16_t w, uint16_t d, uint16_t lk, uint64_t seed)
      : prf(tsq::Rng(seed).derive("prf").seed()),
        scheme(tsq::buckets::BucketingScheme::uniform(
            tsq::buckets::AttributeDomain::continuous(0, 1, w), d)),
        cell(line_cell(n)),
        tree(tsq::topo::build_tree(cell)),
        registry(tsq::proofs::PrimeRegistry::build(scheme, n)),
        schedule(prf, scheme, n, lk, tsq::Rng(seed).derive("keys")),
        states(initial_states(scheme, n, lk, tsq::Rng(seed).derive("keys"))) {}

  LineWorld(const LineWorld&) = delete;
  LineWorld& operator=(const LineWorld&) = delete;
};

inline tsq::buckets::BucketId bid(std::initializer_list<uint16_t> v) {
  return tsq::buckets::BucketId{std::vector<uint16_t>(v)};
}

}  // namespace testsup
