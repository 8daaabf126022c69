#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "warpkit/image.hpp"
#include "warpkit/tps.hpp"

namespace warpkit {

/// Foreground mask plus its traced outer contour (closed polygon, pixel
/// coordinates, from the largest connected component; holes ignored).
struct Silhouette {
  Mask mask;
  std::vector<Point2> contour;
};

Silhouette make_silhouette(const Mask& mask);

/// Resamples a closed polygon to `samples` points at uniform arc length.
std::vector<Point2> resample_contour(const std::vector<Point2>& contour, int samples);

/// Shape-context descriptors (5 log-radial x 12 angular bins) for a point
/// set, radii normalized by the set's mean pairwise distance.
Eigen::MatrixXd shape_context_descriptors(const std::vector<Point2>& points);

/// Chi-squared cost between two descriptor sets, rows of `a` vs rows of `b`.
Eigen::MatrixXd shape_context_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Matched contour point pairs via shape-context descriptors and a
/// minimum-cost one-to-one assignment. Throws DegenerateContour when a
/// contour has fewer raw points than `samples`.
std::vector<std::pair<Point2, Point2>> silhouette_correspondences(const Silhouette& a,
                                                                  const Silhouette& b,
                                                                  int samples);

struct ExemplarWarpBank {
  struct Entry {
    TpsWarp warp;
    WarpEnergy energy;
  };
  std::vector<Entry> warps;  // sorted ascending by mean energy
  double percentile_lo = 50.0;
  double percentile_hi = 90.0;
  size_t mined_total = 0;    // pre-filter count, including skipped failures
  size_t failed = 0;
};

/// Solves a TPS per silhouette pair (normalized coordinates), sorts by mean
/// energy and keeps the [lo, hi) percentile band. Pairs whose system cannot
/// be solved are skipped with a counter, not an error.
ExemplarWarpBank mine_exemplar_bank(const std::vector<std::pair<Silhouette, Silhouette>>& pairs,
                                    double lo = 50.0, double hi = 90.0, int samples = 100);

struct ChromaticParams {
  std::array<double, 3> scale = {1.0, 1.0, 1.0};
  std::array<double, 3> shift = {0.0, 0.0, 0.0};
};

struct SyntheticPair {
  std::string original_id;
  Image warped_image;
  Mask warped_mask;
  // Pixel-coordinate correspondences, original -> warped frame. Exact by
  // construction; only the raster resampling is approximate.
  std::vector<std::pair<Point2, Point2>> correspondences;
  TpsWarp applied_warp;  // normalized coordinates, original -> warped frame
  ChromaticParams chromatic;
  size_t warp_index = 0;
};

/// Applies a bank warp to the image (inverse mapping, bilinear, black
/// background), samples n stratified foreground points and records their
/// exact warped positions. Deterministic in `rng_seed`.
SyntheticPair generate_pair(const Image& image, const Silhouette& silhouette,
                            const ExemplarWarpBank& bank, int n, bool chromatic,
                            uint64_t rng_seed);

}  // namespace warpkit
