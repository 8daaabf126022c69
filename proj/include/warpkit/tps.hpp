#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "warpkit/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

namespace warpkit {

/// A solved thin-plate-spline transform mapping its source frame to a
/// target frame. Coordinates are normalized [-1,1] units throughout.
struct TpsWarp {
  std::vector<Point2> source_points;
  Eigen::VectorXd wx, wy;   // nonaffine weights, one per source point
  Eigen::Vector3d ax, ay;   // affine coefficients (constant, x, y)
};

/// The (n+3)x(n+3) TPS system for a fixed source configuration, with its
/// inverse precomputed. Immutable; safe to share across threads.
struct SystemMatrix {
  int n = 0;
  Eigen::MatrixXd l;
  Eigen::MatrixXd l_inv;
  std::vector<Point2> source_points;
};

struct WarpEnergy {
  double bending = 0.0;      // w'Kw quadratic form, both coordinates
  double affine = 0.0;       // ||A - I||_F^2 of the 2x2 linear part
  double mean_energy = 0.0;  // (bending + affine) / 2
};

/// K*K control lattice. `source` is always the regular row-major lattice
/// spanning [-1,1]^2; `target` is its deformed image.
struct ControlGrid {
  int k = 0;
  std::vector<Point2> source;
  std::vector<Point2> target;
};

/// U(r) = r^2 log r^2, with the removable singularity U(0) = 0.
double radial_kernel(double r);

/// Builds L = [[K, P],[P', 0]] and its inverse for the given source points.
/// Throws SingularSystem when the 1-norm condition estimate exceeds
/// `condition_cap` (collinear or duplicated points).
SystemMatrix build_system(const std::vector<Point2>& source_points, double condition_cap = 1e12);

/// Solves theta = L^-1 [targets; 0] for both coordinates.
TpsWarp solve_coefficients(const SystemMatrix& system, const std::vector<Point2>& targets);

Point2 apply_warp(const TpsWarp& warp, Point2 p);
std::vector<Point2> apply_warp(const TpsWarp& warp, const std::vector<Point2>& points);

WarpEnergy warp_energy(const TpsWarp& warp, const SystemMatrix& system);

/// Jacobian of warped eval points w.r.t. the target control coordinates.
/// Layout: rows 0..M-1 are x outputs, rows M..2M-1 are y outputs; columns
/// 0..N-1 are x targets, N..2N-1 y targets. The transform is linear in the
/// targets, so this matrix is independent of them; the x/y blocks are
/// identical and the off-blocks zero.
Eigen::MatrixXd warp_points_jacobian(const SystemMatrix& system,
                                     const std::vector<Point2>& eval_points);

/// The regular k*k lattice over [-1,1]^2 in row-major order.
std::vector<Point2> regular_lattice(int k);

ControlGrid identity_grid(int k);

TpsWarp grid_warp(const ControlGrid& grid);

struct GridFit {
  ControlGrid grid;
  std::vector<double> mse_history;  // mean squared correspondence error per iteration
};

/// Gradient descent on the deformed grid coordinates, minimizing the mean
/// squared distance between warped source keypoints and their targets,
/// optionally penalized by bending energy. step_size <= 0 selects an exact
/// line search (the objective is quadratic).
GridFit fit_grid_to_correspondences(const std::vector<Point2>& source_kps,
                                    const std::vector<Point2>& target_kps, int k, int iterations,
                                    double step_size = 0.0, double bending_weight = 0.0);

nlohmann::json warp_to_json(const TpsWarp& warp);
TpsWarp warp_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const ControlGrid& grid);
ControlGrid grid_from_json(const nlohmann::json& j);

}  // namespace warpkit
