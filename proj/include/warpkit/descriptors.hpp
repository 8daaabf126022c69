#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "warpkit/image.hpp"

namespace warpkit {

/// Named 2D keypoints on one image, pixel coordinates.
struct KeypointSet {
  std::string image_id;
  std::vector<Point2> points;
  std::vector<uint8_t> visibility;        // 1 = visible
  std::vector<std::string> names;         // empty, or one label per point

  size_t size() const { return points.size(); }
  bool visible(size_t i) const { return visibility.empty() || visibility[i] != 0; }
};

struct DescriptorConfig {
  int patch_radius = 8;
  int spatial_cells = 4;
  int orientation_bins = 8;
  double clip = 0.2;

  int dimension() const { return spatial_cells * spatial_cells * orientation_bins; }
  std::string id() const;
};

using DescriptorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DescriptorSet {
  KeypointSet keypoints;
  DescriptorMatrix vectors;  // M x D, rows L2-normalized
  std::string descriptor_id;
};

/// Gradient-orientation patch descriptor at each keypoint (grayscale,
/// reflect-padded patches). A zero-gradient patch yields the uniform unit
/// vector so rows are always unit norm.
DescriptorSet extract(const Image& image, const KeypointSet& keypoints,
                      const DescriptorConfig& config = {});

/// Euclidean distance between two descriptor rows.
double appearance_distance(std::span<const float> a, std::span<const float> b);

/// Foreground lattice keypoints at the given stride, anchored at (0,0),
/// row-major. May be empty.
KeypointSet sample_foreground_grid(const Mask& mask, int stride, const std::string& image_id = {});

/// Binary descriptor file ("WDSC", version, M, D, row-major float32) plus a
/// JSON sidecar with the image id and keypoint coordinates.
void save_descriptors(const std::filesystem::path& bin_path,
                      const std::filesystem::path& sidecar_path, const DescriptorSet& set);
DescriptorSet load_descriptors(const std::filesystem::path& bin_path,
                               const std::filesystem::path& sidecar_path);

}  // namespace warpkit
