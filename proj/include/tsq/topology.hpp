#pragma once

#include <iosfwd>
#include <vector>

#include "tsq/common.hpp"
#include "tsq/rng.hpp"

namespace tsq::topo {

struct Vec2 {
  double x = 0;
  double y = 0;
};

// A cell: storage node 0 plus N-1 sensors with positions in the unit square
// and a shared radio radius. The storage node sits at the (0,0) corner.
struct Cell {
  uint32_t n = 0;  // total node count including the storage node
  std::vector<Vec2> pos;
  double radius = 0;

  uint32_t sensors() const { return n - 1; }
};

// radius == 0 picks the smallest connecting radius times a 1.1 margin.
Cell make_cell(uint32_t n, Rng rng, double radius = 0);

double distance(const Vec2& a, const Vec2& b);

// Smallest radius at which every node reaches the storage node (bisection
// over BFS reachability on the position set).
double min_connecting_radius(const std::vector<Vec2>& pos);

struct NeighborGraph {
  std::vector<std::vector<NodeId>> adj;

  const std::vector<NodeId>& neighbors(NodeId i) const { return adj.at(i); }
};

NeighborGraph build_graph(const Cell& cell);

// Nodes with fewer than t neighbors (coverage premise validator).
std::vector<NodeId> undercovered(const NeighborGraph& g, unsigned t);

// Shortest-hop aggregation tree rooted at the storage node. BFS by hop count;
// among equal-depth candidates the lowest-id parent wins. Throws ConfigError
// when some node cannot reach the root.
struct AggregationTree {
  std::vector<NodeId> parent;                 // parent[0] == 0
  std::vector<uint16_t> depth;                // depth[0] == 0
  std::vector<std::vector<NodeId>> children;  // sorted ascending
  uint16_t max_depth = 0;

  uint32_t n() const { return static_cast<uint32_t>(parent.size()); }

  // Path from node up to the root, inclusive on both ends.
  std::vector<NodeId> path_to_root(NodeId i) const;
};

AggregationTree build_tree(const Cell& cell);

// Nodes of the subtree rooted at i, cut m levels below it (depth(j)-depth(i)
// <= m). Sorted ascending. m == 0 yields {i}.
std::vector<NodeId> subtree(const AggregationTree& t, NodeId i, unsigned m);

// Geographic groups over the sensors (storage node excluded): mu = ceil(sqrt N)
// rectangular sub-regions (ceil(sqrt mu) columns, rows split as evenly as
// possible), assignment by position. group_of[i] in [0, mu); members lists
// only nonempty groups unless keep_empty.
struct GroupPartition {
  uint32_t mu = 0;
  std::vector<uint32_t> group_of;             // index 0 (storage) unused
  std::vector<std::vector<NodeId>> members;   // size mu, some possibly empty

  std::vector<uint32_t> nonempty() const;
};

GroupPartition build_groups(const Cell& cell);

// Uniform override for matched-cost experiments: mu contiguous id blocks.
// Requires mu | (n-1) for exactly equal sizes unless allow_ragged.
GroupPartition build_groups_uniform(uint32_t n, uint32_t mu, bool allow_ragged = false);

// Plain text dump: one "id x y parent group" line per node, so a topology can
// be pinned across runs. Round-trips with load_topology.
void dump_topology(std::ostream& os, const Cell& cell, const AggregationTree& t,
                   const GroupPartition& g);

struct LoadedTopology {
  Cell cell;
  AggregationTree tree;
  GroupPartition groups;
};

LoadedTopology load_topology(std::istream& is);

}  // namespace tsq::topo
