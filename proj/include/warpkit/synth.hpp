#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "warpkit/exemplar.hpp"
#include "warpkit/manifest.hpp"
#include "warpkit/propagate.hpp"

namespace warpkit {

/// A textured dome surface rendered from several orthographic viewpoints.
/// view_00 is frontal and serves as the reconstruction target; gt.json
/// records the surface and camera parameters for evaluation.
struct ToyDatasetOptions {
  int n_images = 12;
  int image_size = 128;
  int texture_blobs = 90;
  uint64_t seed = 7;
  double max_yaw_deg = 24.0;
  double max_pitch_deg = 6.0;
};

void write_toy_dataset(const std::filesystem::path& dir, const ToyDatasetOptions& options);

/// Random rigid 3D points observed by F orthographic cameras.
struct RigidScene {
  Eigen::MatrixX3d shape;                              // P x 3
  std::vector<Eigen::Matrix<double, 2, 3>> rotations;  // per-frame motion rows
  Eigen::MatrixX2d translations;                       // per-frame image offsets
  Eigen::MatrixXd projections;                         // 2F x P, x;y rows interleaved
};

RigidScene make_rigid_scene(int frames, int points, uint64_t seed, double translation_scale = 0.0);

/// Tracks from a rigid scene; target is frame 0 and stays fully observed.
/// Other observations are dropped independently with probability
/// `missing_frac` (at least 3 points are kept per frame).
TrackSet scene_tracks(const RigidScene& scene, double missing_frac, uint64_t seed);

/// Foreground blob whose texture is a motif tiled `repeats` times per axis,
/// so local appearance repeats across the object.
struct TexturedBlob {
  Image image;
  Mask mask;
};

TexturedBlob make_textured_blob(int size, int repeats, uint64_t seed);

/// Bank of randomly generated warps on a k-grid: smooth nonaffine
/// deformations, or purely affine maps when `affine_only` is set. The bank
/// keeps every warp (percentile band [0,100]).
ExemplarWarpBank make_random_warp_bank(int count, int k, double amplitude, bool affine_only,
                                       uint64_t seed);

}  // namespace warpkit
