#include "warpkit/tps.hpp"

#include <nlohmann/json.hpp>

#include "warpkit/errors.hpp"

namespace warpkit {

double radial_kernel(double r) {
  if (r == 0.0) return 0.0;
  const double r2 = r * r;
  return r2 * std::log(r2);
}

namespace {

double kernel_between(Point2 a, Point2 b) {
  const double r2 = squared_norm(a - b);
  if (r2 == 0.0) return 0.0;
  return r2 * std::log(r2);
}

// Basis row (U(||p - x_1||), ..., U(||p - x_n||), 1, p.x, p.y).
Eigen::RowVectorXd basis_row(const std::vector<Point2>& sources, Point2 p) {
  const int n = int(sources.size());
  Eigen::RowVectorXd b(n + 3);
  for (int i = 0; i < n; ++i) b(i) = kernel_between(p, sources[i]);
  b(n) = 1.0;
  b(n + 1) = p.x;
  b(n + 2) = p.y;
  return b;
}

}  // namespace

SystemMatrix build_system(const std::vector<Point2>& source_points, double condition_cap) {
  const int n = int(source_points.size());
  if (n < 3) throw SingularSystem("TPS system needs at least 3 source points");
  for (const Point2& p : source_points)
    if (!is_finite(p)) throw SingularSystem("non-finite source point");

  SystemMatrix sys;
  sys.n = n;
  sys.source_points = source_points;
  sys.l = Eigen::MatrixXd::Zero(n + 3, n + 3);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double u = kernel_between(source_points[i], source_points[j]);
      sys.l(i, j) = u;
      sys.l(j, i) = u;
    }
    sys.l(i, n) = 1.0;
    sys.l(i, n + 1) = source_points[i].x;
    sys.l(i, n + 2) = source_points[i].y;
    sys.l(n, i) = 1.0;
    sys.l(n + 1, i) = source_points[i].x;
    sys.l(n + 2, i) = source_points[i].y;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.l);
  if (!lu.isInvertible()) throw SingularSystem("TPS system matrix is singular");
  sys.l_inv = lu.inverse();
  if (!sys.l_inv.allFinite()) throw SingularSystem("TPS system inverse is not finite");

  // Exact 1-norm condition number; the inverse is explicit anyway.
  const double cond =
      sys.l.cwiseAbs().colwise().sum().maxCoeff() * sys.l_inv.cwiseAbs().colwise().sum().maxCoeff();
  if (cond > condition_cap)
    throw SingularSystem("TPS system condition " + std::to_string(cond) + " exceeds cap");
  return sys;
}

TpsWarp solve_coefficients(const SystemMatrix& system, const std::vector<Point2>& targets) {
  const int n = system.n;
  if (int(targets.size()) != n)
    throw DimensionMismatch("expected " + std::to_string(n) + " targets, got " +
                            std::to_string(targets.size()));

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
  for (int i = 0; i < n; ++i) {
    rhs(i, 0) = targets[i].x;
    rhs(i, 1) = targets[i].y;
  }
  const Eigen::MatrixXd theta = system.l_inv * rhs;

  TpsWarp warp;
  warp.source_points = system.source_points;
  warp.wx = theta.col(0).head(n);
  warp.wy = theta.col(1).head(n);
  warp.ax = theta.col(0).tail(3);
  warp.ay = theta.col(1).tail(3);
  return warp;
}

Point2 apply_warp(const TpsWarp& warp, Point2 p) {
  double x = warp.ax(0) + warp.ax(1) * p.x + warp.ax(2) * p.y;
  double y = warp.ay(0) + warp.ay(1) * p.x + warp.ay(2) * p.y;
  for (size_t i = 0; i < warp.source_points.size(); ++i) {
    const double u = kernel_between(p, warp.source_points[i]);
    x += warp.wx(long(i)) * u;
    y += warp.wy(long(i)) * u;
  }
  return {x, y};
}

std::vector<Point2> apply_warp(const TpsWarp& warp, const std::vector<Point2>& points) {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (Point2 p : points) out.push_back(apply_warp(warp, p));
  return out;
}

WarpEnergy warp_energy(const TpsWarp& warp, const SystemMatrix& system) {
  const int n = system.n;
  if (warp.wx.size() != n || warp.wy.size() != n)
    throw DimensionMismatch("warp was not solved against this system");

  const auto k = system.l.topLeftCorner(n, n);
  WarpEnergy e;
  e.bending = warp.wx.dot(k * warp.wx) + warp.wy.dot(k * warp.wy);
  if (e.bending < 0.0) e.bending = 0.0;  // clamp numerical noise

  Eigen::Matrix2d a;
  a << warp.ax(1), warp.ax(2), warp.ay(1), warp.ay(2);
  e.affine = (a - Eigen::Matrix2d::Identity()).squaredNorm();
  e.mean_energy = 0.5 * (e.bending + e.affine);
  return e;
}

Eigen::MatrixXd warp_points_jacobian(const SystemMatrix& system,
                                     const std::vector<Point2>& eval_points) {
  const int n = system.n;
  const int m = int(eval_points.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * m, 2 * n);
  for (int r = 0; r < m; ++r) {
    // out_x(p) = basis(p) . L^-1 [tx; 0], so d out_x / d tx = (basis . L^-1)[0:n].
    const Eigen::RowVectorXd h = basis_row(system.source_points, eval_points[r]) * system.l_inv;
    jac.block(r, 0, 1, n) = h.head(n);
    jac.block(m + r, n, 1, n) = h.head(n);
  }
  return jac;
}

std::vector<Point2> regular_lattice(int k) {
  if (k < 2) throw DataError("lattice side must be at least 2");
  std::vector<Point2> pts;
  pts.reserve(size_t(k) * k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c)
      pts.push_back({-1.0 + 2.0 * c / (k - 1), -1.0 + 2.0 * r / (k - 1)});
  return pts;
}

ControlGrid identity_grid(int k) {
  ControlGrid g;
  g.k = k;
  g.source = regular_lattice(k);
  g.target = g.source;
  return g;
}

TpsWarp grid_warp(const ControlGrid& grid) {
  return solve_coefficients(build_system(grid.source), grid.target);
}

GridFit fit_grid_to_correspondences(const std::vector<Point2>& source_kps,
                                    const std::vector<Point2>& target_kps, int k, int iterations,
                                    double step_size, double bending_weight) {
  if (source_kps.size() != target_kps.size())
    throw DimensionMismatch("correspondence lists differ in length");
  const int m = int(source_kps.size());
  if (m < 3) throw DataError("need at least 3 correspondences");

  const SystemMatrix sys = build_system(regular_lattice(k));
  const int n = sys.n;

  // Hat matrix H: warped(source_kps) = H * targets, per coordinate.
  Eigen::MatrixXd hat(m, n);
  for (int r = 0; r < m; ++r)
    hat.row(r) = (basis_row(sys.source_points, source_kps[r]) * sys.l_inv).head(n);

  // Bending quadratic in grid targets: g' (W' K W) g with W = top-left of L^-1.
  Eigen::MatrixXd bend = Eigen::MatrixXd::Zero(n, n);
  if (bending_weight > 0.0) {
    const Eigen::MatrixXd w = sys.l_inv.topLeftCorner(n, n);
    bend = w.transpose() * sys.l.topLeftCorner(n, n) * w;
    bend = 0.5 * (bend + bend.transpose());
  }

  Eigen::VectorXd tx(m), ty(m);
  for (int r = 0; r < m; ++r) {
    tx(r) = target_kps[r].x;
    ty(r) = target_kps[r].y;
  }

  Eigen::VectorXd gx(n), gy(n);
  for (int i = 0; i < n; ++i) {
    gx(i) = sys.source_points[i].x;
    gy(i) = sys.source_points[i].y;
  }

  auto mse = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return ((hat * x - tx).squaredNorm() + (hat * y - ty).squaredNorm()) / m;
  };

  GridFit fit;
  fit.mse_history.reserve(size_t(iterations) + 1);
  fit.mse_history.push_back(mse(gx, gy));

  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd rx = hat * gx - tx;
    const Eigen::VectorXd ry = hat * gy - ty;
    Eigen::VectorXd dx = (2.0 / m) * (hat.transpose() * rx);
    Eigen::VectorXd dy = (2.0 / m) * (hat.transpose() * ry);
    if (bending_weight > 0.0) {
      dx += 2.0 * bending_weight * (bend * gx);
      dy += 2.0 * bending_weight * (bend * gy);
    }

    const double grad_sq = dx.squaredNorm() + dy.squaredNorm();
    if (grad_sq < 1e-28) {
      fit.mse_history.push_back(mse(gx, gy));
      break;
    }

    double step = step_size;
    if (step <= 0.0) {
      // Exact line search for the quadratic objective: t = g'g / g'Hg.
      const Eigen::VectorXd hx = hat * dx;
      const Eigen::VectorXd hy = hat * dy;
      double curvature = (2.0 / m) * (hx.squaredNorm() + hy.squaredNorm());
      if (bending_weight > 0.0)
        curvature += 2.0 * bending_weight * (dx.dot(bend * dx) + dy.dot(bend * dy));
      if (curvature <= 0.0) break;
      step = grad_sq / curvature;
    }

    gx -= step * dx;
    gy -= step * dy;
    fit.mse_history.push_back(mse(gx, gy));
  }

  fit.grid.k = k;
  fit.grid.source = sys.source_points;
  fit.grid.target.resize(size_t(n));
  for (int i = 0; i < n; ++i) fit.grid.target[size_t(i)] = {gx(i), gy(i)};
  return fit;
}

namespace {

nlohmann::json points_to_json(const std::vector<Point2>& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (Point2 p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point2> points_from_json(const nlohmann::json& arr) {
  std::vector<Point2> pts;
  pts.reserve(arr.size());
  for (const auto& e : arr) pts.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return pts;
}

}  // namespace

nlohmann::json warp_to_json(const TpsWarp& warp) {
  nlohmann::json j;
  j["source_points"] = points_to_json(warp.source_points);
  j["wx"] = std::vector<double>(warp.wx.begin(), warp.wx.end());
  j["wy"] = std::vector<double>(warp.wy.begin(), warp.wy.end());
  j["ax"] = std::vector<double>(warp.ax.begin(), warp.ax.end());
  j["ay"] = std::vector<double>(warp.ay.begin(), warp.ay.end());
  return j;
}

TpsWarp warp_from_json(const nlohmann::json& j) {
  TpsWarp warp;
  warp.source_points = points_from_json(j.at("source_points"));
  const auto wx = j.at("wx").get<std::vector<double>>();
  const auto wy = j.at("wy").get<std::vector<double>>();
  if (wx.size() != warp.source_points.size() || wy.size() != warp.source_points.size())
    throw DimensionMismatch("warp JSON weight length mismatch");
  warp.wx = Eigen::Map<const Eigen::VectorXd>(wx.data(), long(wx.size()));
  warp.wy = Eigen::Map<const Eigen::VectorXd>(wy.data(), long(wy.size()));
  const auto ax = j.at("ax").get<std::vector<double>>();
  const auto ay = j.at("ay").get<std::vector<double>>();
  if (ax.size() != 3 || ay.size() != 3) throw DimensionMismatch("warp JSON affine length mismatch");
  warp.ax = Eigen::Vector3d(ax[0], ax[1], ax[2]);
  warp.ay = Eigen::Vector3d(ay[0], ay[1], ay[2]);
  return warp;
}

nlohmann::json grid_to_json(const ControlGrid& grid) {
  nlohmann::json j;
  j["k"] = grid.k;
  j["source"] = points_to_json(grid.source);
  j["target"] = points_to_json(grid.target);
  return j;
}

ControlGrid grid_from_json(const nlohmann::json& j) {
  ControlGrid g;
  g.k = j.at("k").get<int>();
  g.source = points_from_json(j.at("source"));
  g.target = points_from_json(j.at("target"));
  if (g.source.size() != size_t(g.k) * g.k || g.target.size() != g.source.size())
    throw DimensionMismatch("grid JSON size mismatch");
  return g;
}

}  // namespace warpkit
