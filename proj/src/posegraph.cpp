#include "warpkit/posegraph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <set>

#include "warpkit/errors.hpp"

namespace warpkit {

int PoseGraph::index_of(const std::string& id) const {
  const auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id);
  if (it == node_ids.end() || *it != id) return -1;
  return int(it - node_ids.begin());
}

PoseGraph build_pose_graph(const std::map<std::string, Eigen::VectorXd>& descriptors, int k) {
  if (descriptors.size() < 2) throw DataError("pose graph needs at least 2 images");
  if (k < 1) throw DataError("k must be positive");

  PoseGraph g;
  g.k = k;
  std::vector<Eigen::VectorXd> vecs;
  for (const auto& [id, v] : descriptors) {  // std::map iterates sorted
    g.node_ids.push_back(id);
    vecs.push_back(v);
  }
  const long dim = vecs.front().size();
  for (const auto& v : vecs)
    if (v.size() != dim) throw DimensionMismatch("global descriptor dimensions differ");

  const int n = int(vecs.size());
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> dists;
    dists.reserve(size_t(n) - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dists.emplace_back(1.0 - vecs[size_t(i)].dot(vecs[size_t(j)]), j);
    }
    std::sort(dists.begin(), dists.end());
    const int limit = std::min<int>(k, int(dists.size()));
    for (int m = 0; m < int(dists.size()); ++m) {
      // ties with the k-th nearest distance are all included
      if (m >= limit && dists[size_t(m)].first != dists[size_t(limit - 1)].first) break;
      const int j = dists[size_t(m)].second;
      edges.insert({std::min(i, j), std::max(i, j)});
    }
  }

  g.adjacency.assign(size_t(n), {});
  for (auto [i, j] : edges) {
    const double w = std::clamp(1.0 - vecs[size_t(i)].dot(vecs[size_t(j)]), 0.0, 2.0);
    g.adjacency[size_t(i)].emplace_back(j, w);
    g.adjacency[size_t(j)].emplace_back(i, w);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

namespace {

std::vector<int> bfs_hops(const PoseGraph& g, int start) {
  std::vector<int> hops(g.node_ids.size(), -1);
  std::deque<int> frontier{start};
  hops[size_t(start)] = 0;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    for (auto [v, w] : g.adjacency[size_t(u)])
      if (hops[size_t(v)] < 0) {
        hops[size_t(v)] = hops[size_t(u)] + 1;
        frontier.push_back(v);
      }
  }
  return hops;
}

}  // namespace

std::optional<int> hop_distance(const PoseGraph& g, const std::string& a, const std::string& b) {
  const int ia = g.index_of(a);
  const int ib = g.index_of(b);
  if (ia < 0) throw UnknownNode("unknown image id: " + a);
  if (ib < 0) throw UnknownNode("unknown image id: " + b);
  if (ia == ib) return 0;
  const std::vector<int> hops = bfs_hops(g, ia);
  if (hops[size_t(ib)] < 0) return std::nullopt;
  return hops[size_t(ib)];
}

std::vector<std::pair<std::string, std::string>> pairs_within_hops(const PoseGraph& g,
                                                                   int max_hops) {
  if (max_hops < 1) throw DataError("max_hops must be at least 1");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < int(g.node_ids.size()); ++i) {
    const std::vector<int> hops = bfs_hops(g, i);
    for (int j = i + 1; j < int(g.node_ids.size()); ++j)
      if (hops[size_t(j)] >= 1 && hops[size_t(j)] <= max_hops)
        pairs.emplace_back(g.node_ids[size_t(i)], g.node_ids[size_t(j)]);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

Eigen::VectorXd shape_descriptor(const Mask& mask) {
  constexpr int kSide = 32;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(kSide, kSide);
  // Box-average the mask into a 32x32 grid.
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.foreground(x, y))
        pooled(std::min(kSide - 1, y * kSide / mask.height),
               std::min(kSide - 1, x * kSide / mask.width)) += 1.0;

  // 3x3 binomial blur, two passes.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd blurred = Eigen::MatrixXd::Zero(kSide, kSide);
    for (int y = 0; y < kSide; ++y)
      for (int x = 0; x < kSide; ++x) {
        double sum = 0.0, weight = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= kSide || ny >= kSide) continue;
            const double w = (dx == 0 ? 2.0 : 1.0) * (dy == 0 ? 2.0 : 1.0);
            sum += w * pooled(ny, nx);
            weight += w;
          }
        blurred(y, x) = sum / weight;
      }
    pooled = blurred;
  }

  Eigen::VectorXd flat(kSide * kSide);
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x) flat(y * kSide + x) = pooled(y, x);
  const double norm = flat.norm();
  if (norm == 0.0) return Eigen::VectorXd::Constant(kSide * kSide, 1.0 / kSide);
  return flat / norm;
}

nlohmann::json posegraph_to_json(const PoseGraph& g) {
  nlohmann::json j;
  j["nodes"] = g.node_ids;
  j["k"] = g.k;
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < int(g.node_ids.size()); ++i)
    for (auto [v, w] : g.adjacency[size_t(i)])
      if (v > i) edges.push_back({g.node_ids[size_t(i)], g.node_ids[size_t(v)], w});
  j["edges"] = std::move(edges);
  return j;
}

PoseGraph posegraph_from_json(const nlohmann::json& j) {
  PoseGraph g;
  g.node_ids = j.at("nodes").get<std::vector<std::string>>();
  if (!std::is_sorted(g.node_ids.begin(), g.node_ids.end()))
    std::sort(g.node_ids.begin(), g.node_ids.end());
  g.k = j.at("k").get<int>();
  g.adjacency.assign(g.node_ids.size(), {});
  for (const auto& e : j.at("edges")) {
    const int a = g.index_of(e.at(0).get<std::string>());
    const int b = g.index_of(e.at(1).get<std::string>());
    if (a < 0 || b < 0) throw DataError("pose graph edge references unknown node");
    const double w = e.at(2).get<double>();
    g.adjacency[size_t(a)].emplace_back(b, w);
    g.adjacency[size_t(b)].emplace_back(a, w);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

}  // namespace warpkit
