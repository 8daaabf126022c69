#include "warpkit/tps.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "warpkit/errors.hpp"
#include "warpkit/rng.hpp"
#include "test_util.hpp"

using namespace warpkit;

TEST_CASE("radial kernel values") {
  CHECK(radial_kernel(0.0) == 0.0);
  CHECK(radial_kernel(1.0) == 0.0);
  CHECK(radial_kernel(std::sqrt(M_E)) == doctest::Approx(M_E).epsilon(1e-12));
}

TEST_CASE("build_system on a minimal triangle") {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}};
  const SystemMatrix sys = build_system(pts);
  CHECK(sys.l.rows() == 6);
  for (int i = 0; i < 3; ++i) CHECK(sys.l(i, i) == 0.0);
  CHECK((sys.l - sys.l.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_system on the paper-scale grid") {
  const SystemMatrix sys = build_system(regular_lattice(10));
  CHECK(sys.l.rows() == 103);
  CHECK((sys.l - sys.l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd eye = sys.l * sys.l_inv;
  CHECK((eye - Eigen::MatrixXd::Identity(103, 103)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("build_system rejects collinear points") {
  const std::vector<Point2> pts{{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(build_system(pts), SingularSystem);
}

TEST_CASE("build_system rejects duplicated points") {
  const std::vector<Point2> pts{{0, 0}, {0, 0}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(build_system(pts), SingularSystem);
}

TEST_CASE("solve_coefficients identity and uniform scale") {
  const SystemMatrix sys = build_system(regular_lattice(4));

  const TpsWarp identity = solve_coefficients(sys, sys.source_points);
  CHECK(identity.wx.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(identity.wy.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(identity.ax(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(identity.ax(1) == doctest::Approx(1.0));
  CHECK(identity.ax(2) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(identity.ay(2) == doctest::Approx(1.0));

  std::vector<Point2> doubled;
  for (Point2 p : sys.source_points) doubled.push_back(2.0 * p);
  const TpsWarp scaled = solve_coefficients(sys, doubled);
  CHECK(scaled.wx.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(scaled.ax(1) == doctest::Approx(2.0));
  CHECK(scaled.ay(2) == doctest::Approx(2.0));
}

TEST_CASE("interpolation conditions and side constraints hold") {
  Rng rng(21);
  const SystemMatrix sys = build_system(regular_lattice(5));
  for (int trial = 0; trial < 20; ++trial) {
    const auto targets = testutil::smooth_targets(sys.source_points, 0.15, rng);
    const TpsWarp warp = solve_coefficients(sys, targets);

    const auto mapped = apply_warp(warp, sys.source_points);
    for (size_t i = 0; i < mapped.size(); ++i)
      CHECK(distance(mapped[i], targets[i]) < 1e-8);

    const double tol = 1e-8 * std::max(warp.wx.cwiseAbs().maxCoeff(),
                                       warp.wy.cwiseAbs().maxCoeff()) +
                       1e-10;
    CHECK(std::abs(warp.wx.sum()) < tol);
    CHECK(std::abs(warp.wy.sum()) < tol);
    double wx_x = 0, wx_y = 0, wy_x = 0, wy_y = 0;
    for (int i = 0; i < sys.n; ++i) {
      wx_x += warp.wx(i) * sys.source_points[size_t(i)].x;
      wx_y += warp.wx(i) * sys.source_points[size_t(i)].y;
      wy_x += warp.wy(i) * sys.source_points[size_t(i)].x;
      wy_y += warp.wy(i) * sys.source_points[size_t(i)].y;
    }
    CHECK(std::abs(wx_x) < tol);
    CHECK(std::abs(wx_y) < tol);
    CHECK(std::abs(wy_x) < tol);
    CHECK(std::abs(wy_y) < tol);
  }
}

TEST_CASE("solver is linear in the targets") {
  Rng rng(22);
  const SystemMatrix sys = build_system(regular_lattice(4));
  const auto t1 = testutil::smooth_targets(sys.source_points, 0.2, rng);
  const auto t2 = testutil::smooth_targets(sys.source_points, 0.2, rng);
  const double alpha = 0.7, beta = -0.4;

  std::vector<Point2> mix(t1.size());
  for (size_t i = 0; i < t1.size(); ++i) mix[i] = alpha * t1[i] + beta * t2[i];

  const TpsWarp w1 = solve_coefficients(sys, t1);
  const TpsWarp w2 = solve_coefficients(sys, t2);
  const TpsWarp wm = solve_coefficients(sys, mix);
  CHECK((wm.wx - alpha * w1.wx - beta * w2.wx).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((wm.wy - alpha * w1.wy - beta * w2.wy).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((wm.ax - alpha * w1.ax - beta * w2.ax).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((wm.ay - alpha * w1.ay - beta * w2.ay).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("apply_warp reduces to the affine part when w = 0") {
  TpsWarp warp;
  warp.source_points = regular_lattice(3);
  warp.wx = Eigen::VectorXd::Zero(9);
  warp.wy = Eigen::VectorXd::Zero(9);
  warp.ax = Eigen::Vector3d(0.3, 1.2, -0.1);
  warp.ay = Eigen::Vector3d(-0.2, 0.4, 0.9);

  const Point2 p{0.37, -0.81};
  const Point2 q = apply_warp(warp, p);
  CHECK(q.x == doctest::Approx(0.3 + 1.2 * p.x - 0.1 * p.y));
  CHECK(q.y == doctest::Approx(-0.2 + 0.4 * p.x + 0.9 * p.y));
}

TEST_CASE("affine targets leave no nonaffine residue") {
  const SystemMatrix sys = build_system(regular_lattice(6));
  std::vector<Point2> targets;
  for (Point2 p : sys.source_points)
    targets.push_back({0.9 * p.x - 0.2 * p.y + 0.05, 0.15 * p.x + 1.1 * p.y - 0.3});
  const TpsWarp warp = solve_coefficients(sys, targets);
  CHECK(warp.wx.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(warp.wy.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(warp_energy(warp, sys).bending < 1e-12);
}

TEST_CASE("warp energy of identity and rotation") {
  const SystemMatrix sys = build_system(regular_lattice(4));

  const TpsWarp identity = solve_coefficients(sys, sys.source_points);
  const WarpEnergy e0 = warp_energy(identity, sys);
  CHECK(e0.bending == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e0.affine == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<Point2> rotated;
  for (Point2 p : sys.source_points) rotated.push_back({-p.y, p.x});  // 90 degrees
  const WarpEnergy e1 = warp_energy(solve_coefficients(sys, rotated), sys);
  CHECK(e1.bending < 1e-10);
  CHECK(e1.affine == doctest::Approx(4.0));
  CHECK(e1.mean_energy == doctest::Approx(0.5 * (e1.bending + e1.affine)));
}

namespace {

// Analytic second derivatives of the nonaffine part of a warp coordinate.
struct BendingIntegrand {
  const TpsWarp& warp;
  bool x_coord;

  double operator()(double x, double y) const {
    double fxx = 0, fxy = 0, fyy = 0;
    const Eigen::VectorXd& w = x_coord ? warp.wx : warp.wy;
    for (size_t i = 0; i < warp.source_points.size(); ++i) {
      const double dx = x - warp.source_points[i].x;
      const double dy = y - warp.source_points[i].y;
      const double r2 = dx * dx + dy * dy;
      if (r2 < 1e-14) continue;
      const double lg = std::log(r2);
      fxx += w(long(i)) * (2.0 * lg + 2.0 + 4.0 * dx * dx / r2);
      fyy += w(long(i)) * (2.0 * lg + 2.0 + 4.0 * dy * dy / r2);
      fxy += w(long(i)) * (4.0 * dx * dy / r2);
    }
    return fxx * fxx + 2.0 * fxy * fxy + fyy * fyy;
  }
};

double quadrature_bending(const TpsWarp& warp) {
  // Two-zone midpoint rule; the integrand decays like r^-4 thanks to the
  // side conditions, so a moderate outer box suffices.
  double total = 0.0;
  for (const bool x_coord : {true, false}) {
    const BendingIntegrand f{warp, x_coord};
    const double inner = 3.0, outer = 24.0;
    const double h1 = 0.02;
    for (double x = -inner + h1 / 2; x < inner; x += h1)
      for (double y = -inner + h1 / 2; y < inner; y += h1) total += f(x, y) * h1 * h1;
    const double h2 = 0.12;
    for (double x = -outer + h2 / 2; x < outer; x += h2)
      for (double y = -outer + h2 / 2; y < outer; y += h2) {
        if (std::abs(x) < inner && std::abs(y) < inner) continue;
        total += f(x, y) * h2 * h2;
      }
  }
  return total / (8.0 * M_PI);
}

}  // namespace

TEST_CASE("bending energy matches the quadrature oracle") {
  Rng rng(33);
  const SystemMatrix sys = build_system(regular_lattice(3));
  const auto targets = testutil::smooth_targets(sys.source_points, 0.25, rng);
  const TpsWarp warp = solve_coefficients(sys, targets);

  const double quadratic_form = warp_energy(warp, sys).bending;
  CHECK(quadratic_form > 0.0);
  const double integral = quadrature_bending(warp);
  CHECK(quadratic_form == doctest::Approx(integral).epsilon(0.05));
}

TEST_CASE("jacobian rows at control points are unit rows") {
  const SystemMatrix sys = build_system(regular_lattice(4));
  const Eigen::MatrixXd jac = warp_points_jacobian(sys, sys.source_points);
  const int n = sys.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CHECK(jac(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
      CHECK(jac(n + i, n + j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
      CHECK(jac(i, n + j) == 0.0);
      CHECK(jac(n + i, j) == 0.0);
    }
}

TEST_CASE("jacobian rows sum to one (constant reproduction)") {
  Rng rng(44);
  const SystemMatrix sys = build_system(regular_lattice(5));
  std::vector<Point2> eval;
  for (int i = 0; i < 7; ++i) eval.push_back({rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)});
  const Eigen::MatrixXd jac = warp_points_jacobian(sys, eval);
  for (long r = 0; r < jac.rows(); ++r)
    CHECK(jac.row(r).sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("jacobian matches central finite differences") {
  Rng rng(55);
  const int k = 4;
  const SystemMatrix sys = build_system(regular_lattice(k));
  const int n = sys.n;

  std::vector<Point2> eval;
  for (int i = 0; i < 5; ++i) eval.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  const int m = int(eval.size());
  const Eigen::MatrixXd jac = warp_points_jacobian(sys, eval);

  auto targets = testutil::smooth_targets(sys.source_points, 0.2, rng);
  const double step = 1e-5;
  for (int j = 0; j < 2 * n; ++j) {
    auto plus = targets, minus = targets;
    if (j < n) {
      plus[size_t(j)].x += step;
      minus[size_t(j)].x -= step;
    } else {
      plus[size_t(j - n)].y += step;
      minus[size_t(j - n)].y -= step;
    }
    const auto out_plus = apply_warp(solve_coefficients(sys, plus), eval);
    const auto out_minus = apply_warp(solve_coefficients(sys, minus), eval);
    for (int r = 0; r < m; ++r) {
      const double fd_x = (out_plus[size_t(r)].x - out_minus[size_t(r)].x) / (2 * step);
      const double fd_y = (out_plus[size_t(r)].y - out_minus[size_t(r)].y) / (2 * step);
      CHECK(jac(r, j) == doctest::Approx(fd_x).epsilon(1e-5));
      CHECK(jac(m + r, j) == doctest::Approx(fd_y).epsilon(1e-5));
    }
  }
}

TEST_CASE("grid fit keeps an already-satisfied identity") {
  Rng rng(66);
  std::vector<Point2> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)});
  const GridFit fit = fit_grid_to_correspondences(pts, pts, 5, 50);
  CHECK(fit.mse_history.front() < 1e-20);
  for (size_t i = 0; i < fit.grid.target.size(); ++i)
    CHECK(distance(fit.grid.target[i], fit.grid.source[i]) < 1e-9);
}

TEST_CASE("grid fit recovers an affine map") {
  Rng rng(67);
  std::vector<Point2> src, dst;
  for (int i = 0; i < 60; ++i) {
    const Point2 p{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    src.push_back(p);
    dst.push_back({1.1 * p.x + 0.2 * p.y - 0.05, -0.15 * p.x + 0.95 * p.y + 0.1});
  }
  const GridFit fit = fit_grid_to_correspondences(src, dst, 5, 400);
  CHECK(fit.mse_history.back() < 1e-6);
}

TEST_CASE("grid fit descends monotonically with a small fixed step") {
  Rng rng(68);
  const SystemMatrix sys = build_system(regular_lattice(5));
  const auto grid_targets = testutil::smooth_targets(sys.source_points, 0.12, rng);
  const TpsWarp truth = solve_coefficients(sys, grid_targets);

  std::vector<Point2> src, dst;
  for (int i = 0; i < 50; ++i) {
    const Point2 p{rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95)};
    src.push_back(p);
    dst.push_back(apply_warp(truth, p));
  }
  const GridFit fit = fit_grid_to_correspondences(src, dst, 5, 200, 0.05);
  for (size_t i = 1; i < fit.mse_history.size(); ++i)
    CHECK(fit.mse_history[i] <= fit.mse_history[i - 1] + 1e-15);
}

TEST_CASE("grid fit reaches an exemplar warp's correspondences") {
  Rng rng(69);
  const SystemMatrix sys = build_system(regular_lattice(10));
  const auto grid_targets = testutil::smooth_targets(sys.source_points, 0.1, rng);
  const TpsWarp truth = solve_coefficients(sys, grid_targets);

  std::vector<Point2> src, dst;
  for (int i = 0; i < 100; ++i) {
    const Point2 p{rng.uniform(-0.98, 0.98), rng.uniform(-0.98, 0.98)};
    src.push_back(p);
    dst.push_back(apply_warp(truth, p));
  }
  const GridFit fit = fit_grid_to_correspondences(src, dst, 10, 2000);

  double total = 0.0;
  const TpsWarp fitted = grid_warp(fit.grid);
  for (size_t i = 0; i < src.size(); ++i) total += distance(apply_warp(fitted, src[i]), dst[i]);
  CHECK(total / double(src.size()) < 0.02);  // 1% of the [-1,1] span
}

TEST_CASE("warp JSON round-trip is exact") {
  Rng rng(70);
  const SystemMatrix sys = build_system(regular_lattice(4));
  const TpsWarp warp = solve_coefficients(sys, testutil::smooth_targets(sys.source_points, 0.2, rng));
  const TpsWarp back = warp_from_json(warp_to_json(warp));
  CHECK(back.source_points.size() == warp.source_points.size());
  for (size_t i = 0; i < warp.source_points.size(); ++i) {
    CHECK(back.source_points[i].x == warp.source_points[i].x);
    CHECK(back.source_points[i].y == warp.source_points[i].y);
  }
  CHECK((back.wx - warp.wx).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.wy - warp.wy).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.ax - warp.ax).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.ay - warp.ay).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const SystemMatrix sys = build_system(regular_lattice(3));
  std::vector<Point2> short_targets(4, Point2{0, 0});
  CHECK_THROWS_AS(solve_coefficients(sys, short_targets), DimensionMismatch);

  TpsWarp warp;
  warp.source_points = regular_lattice(4);
  warp.wx = Eigen::VectorXd::Zero(16);
  warp.wy = Eigen::VectorXd::Zero(16);
  warp.ax = Eigen::Vector3d(0, 1, 0);
  warp.ay = Eigen::Vector3d(0, 0, 1);
  CHECK_THROWS_AS(warp_energy(warp, sys), DimensionMismatch);
}
