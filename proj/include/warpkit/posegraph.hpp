#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "warpkit/image.hpp"

#include <nlohmann/json_fwd.hpp>

namespace warpkit {

/// kNN graph over images; edge weight is the cosine distance between
/// global descriptors. Immutable after build.
struct PoseGraph {
  std::vector<std::string> node_ids;  // sorted
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  int k = 0;

  int index_of(const std::string& id) const;
};

/// Connects every node to its k nearest neighbors by cosine distance and
/// symmetrizes (an edge is kept if either endpoint selected it).
PoseGraph build_pose_graph(const std::map<std::string, Eigen::VectorXd>& descriptors, int k);

/// Unweighted shortest-path hop count; nullopt when unreachable.
std::optional<int> hop_distance(const PoseGraph& g, const std::string& a, const std::string& b);

/// All unordered pairs within `max_hops`, lexicographic, each once.
std::vector<std::pair<std::string, std::string>> pairs_within_hops(const PoseGraph& g,
                                                                   int max_hops);

/// Default global descriptor: the mask box-downsampled to 32x32, blurred
/// and flattened to a unit vector. Stands in for CNN pooling; externally
/// computed vectors can be supplied to build_pose_graph instead.
Eigen::VectorXd shape_descriptor(const Mask& mask);

nlohmann::json posegraph_to_json(const PoseGraph& g);
PoseGraph posegraph_from_json(const nlohmann::json& j);

}  // namespace warpkit
