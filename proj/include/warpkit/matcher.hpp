#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "warpkit/descriptors.hpp"
#include "warpkit/tps.hpp"

namespace warpkit {

struct MatchParams {
  double sigma_f = 1.75;
  double sigma_w = 18.0;
  double lambda = 0.3;
  double min_second_nn_px = 10.0;   // competitor must be at least this far from the best match
  double precision_threshold = 0.85;
};

enum MatchFlags : uint8_t {
  kNoSecondNeighbor = 1,  // no eligible competitor; ratio forced to 0
};

struct Match {
  int a_idx = -1;
  int b_idx = -1;
  double score = 0.0;
  double ratio = 0.0;
  uint8_t flags = 0;
};

/// Ranked candidate correspondences from image A to image B, sorted by
/// ascending ratio (most distinctive first). Keypoint positions are kept
/// so the set is self-contained for evaluation and serialization.
struct MatchSet {
  std::string image_a, image_b;
  std::vector<Point2> a_points, b_points;  // pixel positions
  std::vector<Match> pairs;
  MatchParams params;
  bool has_warp = false;
};

/// Symmetric spatial prior in pixels: the mean of (a) how far u lands from
/// v's image in A and (b) how far v lands from u's image in B. `warp_to_a`
/// maps B's normalized frame into A's, `warp_to_b` the reverse.
double warp_distance(Point2 u_px, Point2 v_px, const TpsWarp& warp_to_a,
                     const TpsWarp& warp_to_b, ImageSize size_a, ImageSize size_b);

/// exp(-d_f / sigma_f) + lambda * exp(-d_w / sigma_w).
double match_score(double d_f, double d_w, const MatchParams& params);

/// Best-scoring candidate in B for every visible keypoint in A, ranked by
/// the ratio test (best competitor at least min_second_nn_px away). Pass
/// null warps for appearance-only matching (the spatial term is dropped).
MatchSet match_images(const DescriptorSet& desc_a, const DescriptorSet& desc_b,
                      const TpsWarp* warp_to_a, const TpsWarp* warp_to_b, ImageSize size_a,
                      ImageSize size_b, const MatchParams& params);

/// Ratio cutoff where cumulative precision first falls below `target`,
/// linearly interpolated; `is_correct` labels each ranked match. Throws
/// UnattainablePrecision when the curve never reaches the target.
double threshold_at_precision(const MatchSet& matches, const std::vector<uint8_t>& is_correct,
                              double target);

/// CSV with header a_idx,b_idx,a_x,a_y,b_x,b_y,score,ratio,flags.
void save_matches_csv(const std::filesystem::path& path, const MatchSet& matches);
MatchSet load_matches_csv(const std::filesystem::path& path);

}  // namespace warpkit
