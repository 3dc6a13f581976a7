#include "tsq/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace tsq::topo {

double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double min_connecting_radius(const std::vector<Vec2>& pos) {
  // bottleneck edge of the Euclidean MST (Prim, O(n^2))
  size_t n = pos.size();
  require(n >= 2, "need at least two nodes");
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in(n, false);
  best[0] = 0;
  double bottleneck = 0;
  for (size_t step = 0; step < n; ++step) {
    size_t u = n;
    for (size_t i = 0; i < n; ++i)
      if (!in[i] && (u == n || best[i] < best[u])) u = i;
    in[u] = true;
    bottleneck = std::max(bottleneck, best[u]);
    for (size_t v = 0; v < n; ++v)
      if (!in[v]) best[v] = std::min(best[v], distance(pos[u], pos[v]));
  }
  return bottleneck;
}

Cell make_cell(uint32_t n, Rng rng, double radius) {
  require_config(n >= 2, "cell needs a storage node and at least one sensor");
  Cell cell;
  cell.n = n;
  cell.pos.resize(n);
  cell.pos[0] = {0.0, 0.0};
  for (uint32_t i = 1; i < n; ++i) cell.pos[i] = {rng.real01(), rng.real01()};
  cell.radius = radius > 0 ? radius : 1.1 * min_connecting_radius(cell.pos);
  return cell;
}

NeighborGraph build_graph(const Cell& cell) {
  NeighborGraph g;
  g.adj.resize(cell.n);
  for (uint32_t i = 0; i < cell.n; ++i)
    for (uint32_t j = i + 1; j < cell.n; ++j)
      if (distance(cell.pos[i], cell.pos[j]) <= cell.radius) {
        g.adj[i].push_back(j);
        g.adj[j].push_back(i);
      }
  return g;
}

std::vector<NodeId> undercovered(const NeighborGraph& g, unsigned t) {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < g.adj.size(); ++i)
    if (g.adj[i].size() < t) out.push_back(i);
  return out;
}

AggregationTree build_tree(const Cell& cell) {
  NeighborGraph g = build_graph(cell);
  constexpr uint16_t kUnset = std::numeric_limits<uint16_t>::max();
  AggregationTree t;
  t.parent.assign(cell.n, 0);
  t.depth.assign(cell.n, kUnset);
  t.children.resize(cell.n);
  t.depth[0] = 0;
  std::deque<NodeId> frontier{0};
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop_front();
    std::vector<NodeId> nbrs = g.adj[u];
    std::sort(nbrs.begin(), nbrs.end());
    for (NodeId v : nbrs)
      if (t.depth[v] == kUnset) {
        t.depth[v] = static_cast<uint16_t>(t.depth[u] + 1);
        frontier.push_back(v);
      }
  }
  for (uint32_t i = 1; i < cell.n; ++i) {
    require_config(t.depth[i] != kUnset,
                   "topology disconnected: node " + std::to_string(i) +
                       " cannot reach the storage node at this radius");
    NodeId best = cell.n;
    for (NodeId j : g.adj[i])
      if (t.depth[j] + 1 == t.depth[i] && j < best) best = j;
    t.parent[i] = best;
    t.children[best].push_back(i);
    t.max_depth = std::max(t.max_depth, t.depth[i]);
  }
  for (auto& c : t.children) std::sort(c.begin(), c.end());
  return t;
}

std::vector<NodeId> AggregationTree::path_to_root(NodeId i) const {
  require(i < parent.size(), "unknown node");
  std::vector<NodeId> path{i};
  while (i != kStorageNode) {
    i = parent[i];
    path.push_back(i);
  }
  return path;
}

std::vector<NodeId> subtree(const AggregationTree& t, NodeId i, unsigned m) {
  require(i < t.parent.size(), "unknown node");
  std::vector<NodeId> out;
  std::deque<std::pair<NodeId, unsigned>> frontier{{i, 0}};
  while (!frontier.empty()) {
    auto [u, d] = frontier.front();
    frontier.pop_front();
    out.push_back(u);
    if (d < m)
      for (NodeId c : t.children[u]) frontier.emplace_back(c, d + 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// mu regions as ceil(sqrt mu) columns, rows per column as equal as possible
struct GridSpec {
  uint32_t ncols;
  std::vector<uint32_t> rows;    // rows per column
  std::vector<uint32_t> offset;  // first region id per column

  explicit GridSpec(uint32_t mu) {
    ncols = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(mu))));
    uint32_t base = mu / ncols, rem = mu % ncols;
    uint32_t off = 0;
    for (uint32_t c = 0; c < ncols; ++c) {
      rows.push_back(base + (c < rem ? 1 : 0));
      offset.push_back(off);
      off += rows.back();
    }
  }

  uint32_t region(const Vec2& p) const {
    auto clampi = [](double v, uint32_t n) {
      auto idx = static_cast<int64_t>(v * n);
      if (idx < 0) idx = 0;
      if (idx >= n) idx = n - 1;
      return static_cast<uint32_t>(idx);
    };
    uint32_t col = clampi(p.x, ncols);
    uint32_t row = clampi(p.y, rows[col]);
    return offset[col] + row;
  }
};

}  // namespace

GroupPartition build_groups(const Cell& cell) {
  GroupPartition g;
  g.mu = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(cell.n))));
  GridSpec grid(g.mu);
  g.group_of.assign(cell.n, 0);
  g.members.resize(g.mu);
  for (uint32_t i = 1; i < cell.n; ++i) {
    uint32_t r = grid.region(cell.pos[i]);
    g.group_of[i] = r;
    g.members[r].push_back(i);
  }
  return g;
}

GroupPartition build_groups_uniform(uint32_t n, uint32_t mu, bool allow_ragged) {
  require_config(mu >= 1 && mu <= n - 1, "group count out of range");
  if (!allow_ragged)
    require_config((n - 1) % mu == 0, "uniform groups require mu | (n-1)");
  GroupPartition g;
  g.mu = mu;
  g.group_of.assign(n, 0);
  g.members.resize(mu);
  uint32_t per = (n - 1 + mu - 1) / mu;
  for (uint32_t i = 1; i < n; ++i) {
    uint32_t r = std::min((i - 1) / per, mu - 1);
    g.group_of[i] = r;
    g.members[r].push_back(i);
  }
  return g;
}

std::vector<uint32_t> GroupPartition::nonempty() const {
  std::vector<uint32_t> out;
  for (uint32_t r = 0; r < members.size(); ++r)
    if (!members[r].empty()) out.push_back(r);
  return out;
}

void dump_topology(std::ostream& os, const Cell& cell, const AggregationTree& t,
                   const GroupPartition& g) {
  os.precision(17);
  os << "# n " << cell.n << " radius " << cell.radius << " mu " << g.mu << "\n";
  os << "# id x y parent group\n";
  for (uint32_t i = 0; i < cell.n; ++i)
    os << i << ' ' << cell.pos[i].x << ' ' << cell.pos[i].y << ' ' << t.parent[i]
       << ' ' << g.group_of[i] << "\n";
}

LoadedTopology load_topology(std::istream& is) {
  LoadedTopology lt;
  std::string line;
  uint32_t n = 0, mu = 0;
  double radius = 0;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string word;
      while (hs >> word) {
        if (word == "n") hs >> n;
        else if (word == "radius") hs >> radius;
        else if (word == "mu") hs >> mu;
      }
      if (n > 0) header = true;
      continue;
    }
    require_config(header, "topology file missing header line");
    if (lt.cell.pos.empty()) {
      lt.cell.n = n;
      lt.cell.radius = radius;
      lt.cell.pos.resize(n);
      lt.groups.mu = mu;
      lt.groups.group_of.assign(n, 0);
      lt.groups.members.resize(mu);
    }
    std::istringstream ls(line);
    uint32_t id, parent, group;
    double x, y;
    require_config(static_cast<bool>(ls >> id >> x >> y >> parent >> group),
                   "malformed topology line: " + line);
    require_config(id < n && parent < n && group < std::max(mu, 1u),
                   "topology line out of range: " + line);
    lt.cell.pos[id] = {x, y};
    lt.groups.group_of[id] = group;
    if (id != kStorageNode) lt.groups.members[group].push_back(id);
  }
  require_config(lt.cell.n >= 2, "topology file has no nodes");
  lt.tree = build_tree(lt.cell);
  for (auto& m : lt.groups.members) std::sort(m.begin(), m.end());
  return lt;
}

}  // namespace tsq::topo
