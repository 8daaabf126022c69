#pragma once

#include <map>
#include <string>
#include <vector>

#include "warpkit/matcher.hpp"

#include <nlohmann/json_fwd.hpp>

namespace warpkit {

struct KeypointNode {
  std::string image_id;
  int kp_idx = 0;
  Point2 position;  // pixels

  friend bool operator<(const KeypointNode& a, const KeypointNode& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.kp_idx < b.kp_idx;
  }
};

/// Keypoints across the image set connected by thresholded pairwise
/// matches; edge cost = 1 - score/(1 + lambda), in [0,1], so better matches
/// are cheaper to traverse.
struct KeypointGraph {
  std::vector<KeypointNode> nodes;  // sorted by (image_id, kp_idx)
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  std::string target_image;

  int index_of(const std::string& image_id, int kp_idx) const;
};

/// Builds the graph from ratio-thresholded match sets. `ratio_cutoffs`
/// holds one cutoff per match set (or a single broadcast value); pairs
/// retaining fewer than `min_matches` matches contribute no edges.
KeypointGraph build_keypoint_graph(const std::vector<MatchSet>& pairwise,
                                   const std::vector<double>& ratio_cutoffs, int min_matches,
                                   const std::string& target_image);

struct TrackPoint {
  Point2 position;
  double cost = 0.0;
};

/// One track per target keypoint: the chosen keypoint per image and its
/// shortest-path cost. Always contains the target image itself at cost 0.
struct TrackSet {
  std::string target_image;
  std::map<int, std::map<std::string, TrackPoint>> tracks;  // target kp -> image -> point
};

/// Single-source shortest paths from every target keypoint; per image the
/// cheapest reachable keypoint is kept when its path cost is at most
/// `max_path_cost`. Cost ties break by (image_id, keypoint index).
TrackSet propagate_tracks(const KeypointGraph& g, double max_path_cost);

/// Drops images contributing fewer than `min_matches_per_image` track
/// points. The target image is always kept.
TrackSet prune_images(const TrackSet& tracks, int min_matches_per_image);

enum class SubsetHeuristic { keyword_group, neighbor_groups, explicit_list };

/// Image ids selected for reconstruction. `argument` is the keyword, the
/// path to a group-adjacency JSON file, or a comma-separated id list,
/// depending on the heuristic.
std::vector<std::string> select_subset(const std::vector<std::pair<std::string, std::string>>& image_groups,
                                       const std::string& target_image, SubsetHeuristic heuristic,
                                       const std::string& argument);

nlohmann::json tracks_to_json(const TrackSet& tracks);
TrackSet tracks_from_json(const nlohmann::json& j);

}  // namespace warpkit
