#include "warpkit/propagate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "warpkit/errors.hpp"

namespace warpkit {

int KeypointGraph::index_of(const std::string& image_id, int kp_idx) const {
  KeypointNode probe{image_id, kp_idx, {}};
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), probe);
  if (it == nodes.end() || it->image_id != image_id || it->kp_idx != kp_idx) return -1;
  return int(it - nodes.begin());
}

KeypointGraph build_keypoint_graph(const std::vector<MatchSet>& pairwise,
                                   const std::vector<double>& ratio_cutoffs, int min_matches,
                                   const std::string& target_image) {
  if (!ratio_cutoffs.empty() && ratio_cutoffs.size() != 1 &&
      ratio_cutoffs.size() != pairwise.size())
    throw DimensionMismatch("ratio cutoffs must be one value or one per match set");

  KeypointGraph g;
  g.target_image = target_image;

  // Collect surviving matches per pair first; only pairs with enough
  // survivors contribute nodes and edges.
  struct Edge {
    KeypointNode a, b;
    double cost;
  };
  std::vector<Edge> edges;
  for (size_t s = 0; s < pairwise.size(); ++s) {
    const MatchSet& set = pairwise[s];
    const double cutoff = ratio_cutoffs.empty()
                              ? std::numeric_limits<double>::infinity()
                              : ratio_cutoffs[ratio_cutoffs.size() == 1 ? 0 : s];
    std::vector<const Match*> surviving;
    for (const Match& m : set.pairs)
      if (m.ratio <= cutoff) surviving.push_back(&m);
    if (int(surviving.size()) < min_matches) continue;

    const double denom = 1.0 + set.params.lambda;
    for (const Match* m : surviving) {
      Edge e;
      e.a = {set.image_a, m->a_idx, set.a_points[size_t(m->a_idx)]};
      e.b = {set.image_b, m->b_idx, set.b_points[size_t(m->b_idx)]};
      e.cost = std::clamp(1.0 - m->score / denom, 0.0, 1.0);
      edges.push_back(std::move(e));
    }
  }

  for (const Edge& e : edges) {
    g.nodes.push_back(e.a);
    g.nodes.push_back(e.b);
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end(),
                            [](const KeypointNode& a, const KeypointNode& b) {
                              return a.image_id == b.image_id && a.kp_idx == b.kp_idx;
                            }),
                g.nodes.end());

  g.adjacency.assign(g.nodes.size(), {});
  std::map<std::pair<int, int>, double> best_cost;  // deduplicate, keep cheapest
  for (const Edge& e : edges) {
    const int ia = g.index_of(e.a.image_id, e.a.kp_idx);
    const int ib = g.index_of(e.b.image_id, e.b.kp_idx);
    if (ia == ib) continue;
    const std::pair<int, int> key{std::min(ia, ib), std::max(ia, ib)};
    const auto it = best_cost.find(key);
    if (it == best_cost.end() || e.cost < it->second) best_cost[key] = e.cost;
  }
  for (const auto& [key, cost] : best_cost) {
    g.adjacency[size_t(key.first)].emplace_back(key.second, cost);
    g.adjacency[size_t(key.second)].emplace_back(key.first, cost);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

TrackSet propagate_tracks(const KeypointGraph& g, double max_path_cost) {
  std::vector<int> target_nodes;
  for (int i = 0; i < int(g.nodes.size()); ++i)
    if (g.nodes[size_t(i)].image_id == g.target_image) target_nodes.push_back(i);
  if (target_nodes.empty())
    throw UnknownTarget("target image has no keypoints in the graph: " + g.target_image);

  TrackSet tracks;
  tracks.target_image = g.target_image;

  for (const int start : target_nodes) {
    // Dijkstra; nonnegative costs.
    std::vector<double> dist(g.nodes.size(), std::numeric_limits<double>::infinity());
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>>
        heap;
    dist[size_t(start)] = 0.0;
    heap.push({0.0, start});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[size_t(u)]) continue;
      for (const auto& [v, w] : g.adjacency[size_t(u)]) {
        const double nd = d + w;
        if (nd < dist[size_t(v)]) {
          dist[size_t(v)] = nd;
          heap.push({nd, v});
        }
      }
    }

    const int kp = g.nodes[size_t(start)].kp_idx;
    auto& track = tracks.tracks[kp];
    track[g.target_image] = {g.nodes[size_t(start)].position, 0.0};
    // Nodes are sorted by (image_id, kp_idx), so scanning in order and
    // keeping strict improvements applies the lexicographic tie-break.
    for (size_t v = 0; v < g.nodes.size(); ++v) {
      const KeypointNode& node = g.nodes[v];
      if (node.image_id == g.target_image) continue;
      if (dist[v] > max_path_cost) continue;
      const auto it = track.find(node.image_id);
      if (it == track.end() || dist[v] < it->second.cost)
        track[node.image_id] = {node.position, dist[v]};
    }
  }
  return tracks;
}

TrackSet prune_images(const TrackSet& tracks, int min_matches_per_image) {
  std::map<std::string, int> counts;
  for (const auto& [kp, track] : tracks.tracks)
    for (const auto& [image, pt] : track)
      if (image != tracks.target_image) ++counts[image];

  TrackSet out;
  out.target_image = tracks.target_image;
  for (const auto& [kp, track] : tracks.tracks) {
    std::map<std::string, TrackPoint> kept;
    for (const auto& [image, pt] : track)
      if (image == tracks.target_image || counts[image] >= min_matches_per_image)
        kept[image] = pt;
    out.tracks[kp] = std::move(kept);
  }
  return out;
}

std::vector<std::string> select_subset(
    const std::vector<std::pair<std::string, std::string>>& image_groups,
    const std::string& target_image, SubsetHeuristic heuristic, const std::string& argument) {
  std::string target_group;
  bool target_found = false;
  for (const auto& [id, group] : image_groups)
    if (id == target_image) {
      target_group = group;
      target_found = true;
      break;
    }
  if (!target_found) throw UnknownHeuristicInput("target image not in manifest: " + target_image);

  auto lowered = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
  };

  std::vector<std::string> out;
  switch (heuristic) {
    case SubsetHeuristic::keyword_group: {
      if (argument.empty()) throw UnknownHeuristicInput("keyword heuristic needs a keyword");
      const std::string needle = lowered(argument);
      for (const auto& [id, group] : image_groups)
        if (lowered(group).find(needle) != std::string::npos) out.push_back(id);
      break;
    }
    case SubsetHeuristic::neighbor_groups: {
      std::ifstream in(argument);
      if (!in) throw UnknownHeuristicInput("cannot read group adjacency file: " + argument);
      nlohmann::json adj = nlohmann::json::parse(in, nullptr, false);
      if (adj.is_discarded() || !adj.is_object())
        throw UnknownHeuristicInput("group adjacency file must be a JSON object");
      if (!adj.contains(target_group))
        throw UnknownHeuristicInput("adjacency file lacks group: " + target_group);
      std::vector<std::string> groups = adj.at(target_group).get<std::vector<std::string>>();
      groups.push_back(target_group);
      for (const auto& [id, group] : image_groups)
        if (std::find(groups.begin(), groups.end(), group) != groups.end()) out.push_back(id);
      break;
    }
    case SubsetHeuristic::explicit_list: {
      std::stringstream ss(argument);
      std::string token;
      while (std::getline(ss, token, ','))
        if (!token.empty()) out.push_back(token);
      break;
    }
  }
  return out;
}

nlohmann::json tracks_to_json(const TrackSet& tracks) {
  nlohmann::json j;
  j["target_image"] = tracks.target_image;
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [kp, track] : tracks.tracks) {
    nlohmann::json images = nlohmann::json::object();
    for (const auto& [image, pt] : track)
      images[image] = {pt.position.x, pt.position.y, pt.cost};
    t[std::to_string(kp)] = std::move(images);
  }
  j["tracks"] = std::move(t);
  return j;
}

TrackSet tracks_from_json(const nlohmann::json& j) {
  TrackSet tracks;
  tracks.target_image = j.at("target_image").get<std::string>();
  for (const auto& [kp_str, images] : j.at("tracks").items()) {
    auto& track = tracks.tracks[std::stoi(kp_str)];
    for (const auto& [image, arr] : images.items())
      track[image] = {{arr.at(0).get<double>(), arr.at(1).get<double>()}, arr.at(2).get<double>()};
  }
  return tracks;
}

}  // namespace warpkit
