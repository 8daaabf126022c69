#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "warpkit/propagate.hpp"

namespace warpkit {

/// Stacked 2F x P tracked-point matrix, per-frame x and y rows interleaved
/// (rows 2f and 2f+1). `w` is centered per frame over observed entries;
/// `w_raw` keeps the original pixel coordinates for un-centering.
struct MeasurementMatrix {
  Eigen::MatrixXd w;
  Eigen::MatrixXd w_raw;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // 2F x P
  std::vector<std::string> frame_ids;
  int target_frame = 0;
  Eigen::MatrixX2d centroids;   // per-frame observed means removed from w
  std::vector<int> track_ids;   // column -> target keypoint index

  int frames() const { return int(frame_ids.size()); }
  int points() const { return int(w.cols()); }
};

/// Assembles the matrix from tracks, dropping columns observed in fewer
/// than `min_visibility_frac` of the frames. Every kept column is observed
/// in the target frame.
MeasurementMatrix build_measurement_matrix(const TrackSet& tracks,
                                           double min_visibility_frac = 0.10);

struct Reconstruction {
  Eigen::MatrixX3d shape;  // P x 3
  std::vector<Eigen::Matrix<double, 2, 3>> rotations;
  Eigen::MatrixX2d translations;
  double residual = 0.0;   // RMSE over observed entries, pixels
  bool degenerate_rank = false;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Rank-3 rigid factorization with missing data: alternately fill missing
/// entries from the current model, truncate to rank 3, apply the metric
/// upgrade (per-frame equal-norm/orthogonality constraints in least
/// squares) and project motion rows onto the orthonormal manifold. Stops
/// when the observed-entry RMSE changes less than `tol`; throws
/// DivergedFactorization after 5 consecutive residual increases.
Reconstruction factorize_rigid(const MeasurementMatrix& m, int max_iters = 100,
                               double tol = 1e-10);

/// Keeps the target frame's observed pixel coordinates for x and y
/// (bit-equal to the measurements) and takes only the depth along the
/// target camera's viewing axis from the reconstructed shape.
Eigen::MatrixX3d xy_snap(const Reconstruction& recon, const MeasurementMatrix& m);

/// ASCII PLY, one vertex per point with its track id as a scalar property.
void save_ply(const std::filesystem::path& path, const Eigen::MatrixX3d& points,
              const std::vector<int>& track_ids);

}  // namespace warpkit
