#include "warpkit/reconstruct.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "warpkit/errors.hpp"
#include "warpkit/synth.hpp"
#include "test_util.hpp"

using namespace warpkit;

namespace {

double diameter(const Eigen::MatrixX3d& shape) {
  double best = 0.0;
  for (long i = 0; i < shape.rows(); ++i)
    for (long j = i + 1; j < shape.rows(); ++j)
      best = std::max(best, (shape.row(i) - shape.row(j)).norm());
  return best;
}

}  // namespace

TEST_CASE("measurement matrix assembly and centering") {
  const RigidScene scene = make_rigid_scene(5, 12, 301, 4.0);
  const TrackSet tracks = scene_tracks(scene, 0.0, 302);
  const MeasurementMatrix m = build_measurement_matrix(tracks, 0.10);

  CHECK(m.frames() == 5);
  CHECK(m.points() == 12);
  CHECK(m.mask.all());
  CHECK(m.frame_ids[size_t(m.target_frame)] == "frame_00");

  for (int r = 0; r < 2 * m.frames(); ++r) {
    double mean = 0.0;
    int count = 0;
    for (int c = 0; c < m.points(); ++c)
      if (m.mask(r, c)) {
        mean += m.w(r, c);
        ++count;
      }
    CHECK(std::abs(mean / count) < 1e-12);
  }
}

TEST_CASE("columns under the visibility floor are dropped") {
  const RigidScene scene = make_rigid_scene(20, 6, 303);
  TrackSet tracks = scene_tracks(scene, 0.0, 304);
  // track 0: visible only in the target frame (1 of 20 = 5%)
  auto& track0 = tracks.tracks.at(0);
  for (int f = 1; f < 20; ++f) {
    char id[32];
    std::snprintf(id, sizeof id, "frame_%02d", f);
    track0.erase(id);
  }
  const MeasurementMatrix m = build_measurement_matrix(tracks, 0.10);
  CHECK(m.points() == 5);
  for (int id : m.track_ids) CHECK(id != 0);
}

TEST_CASE("empty tracks are rejected") {
  CHECK_THROWS_AS(build_measurement_matrix(TrackSet{}, 0.1), EmptyTracks);
}

TEST_CASE("noiseless factorization recovers the shape up to gauge") {
  const RigidScene scene = make_rigid_scene(12, 30, 305, 2.0);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.0, 306), 0.10);
  const Reconstruction recon = factorize_rigid(m);

  CHECK_FALSE(recon.degenerate_rank);
  const auto aligned = testutil::procrustes(recon.shape, scene.shape);
  CHECK(aligned.rmse < 1e-6 * diameter(scene.shape));
  CHECK(recon.residual < 1e-8);

  for (const auto& rot : recon.rotations) {
    CHECK(std::abs(rot.row(0).norm() - rot.row(1).norm()) < 1e-3);
    CHECK(std::abs(rot.row(0).dot(rot.row(1))) < 1e-3);
  }
}

TEST_CASE("30 percent missing data still reconstructs accurately") {
  const RigidScene scene = make_rigid_scene(12, 30, 307, 2.0);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.30, 308), 0.10);
  const Reconstruction recon = factorize_rigid(m, 200);
  const auto aligned = testutil::procrustes(recon.shape, scene.shape);
  CHECK(aligned.rmse < 0.01 * diameter(scene.shape));
}

TEST_CASE("observed residual is nonincreasing" * doctest::may_fail(false)) {
  const RigidScene scene = make_rigid_scene(10, 24, 309);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.25, 310), 0.10);
  const Reconstruction recon = factorize_rigid(m, 150);
  for (size_t i = 1; i < recon.residual_history.size(); ++i)
    CHECK(recon.residual_history[i] <=
          recon.residual_history[i - 1] + 1e-12 * (1.0 + recon.residual_history[i - 1]));
}

TEST_CASE("reported residual equals the model's observed RMSE") {
  const RigidScene scene = make_rigid_scene(8, 20, 311);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.2, 312), 0.10);
  const Reconstruction recon = factorize_rigid(m, 150);

  Eigen::MatrixXd motion(2 * m.frames(), 3);
  for (int f = 0; f < m.frames(); ++f) motion.middleRows<2>(2 * f) = recon.rotations[size_t(f)];
  double sq = 0.0;
  size_t count = 0;
  for (int r = 0; r < 2 * m.frames(); ++r)
    for (int c = 0; c < m.points(); ++c)
      if (m.mask(r, c)) {
        const double model = motion.row(r).dot(recon.shape.row(c)) +
                             recon.translations(r / 2, r % 2);
        const double d = model - m.w(r, c);
        sq += d * d;
        ++count;
      }
  CHECK(std::sqrt(sq / double(count)) == doctest::Approx(recon.residual).epsilon(1e-9));
}

TEST_CASE("a global rotation of the scene changes nothing after alignment") {
  const RigidScene base = make_rigid_scene(12, 25, 313);
  RigidScene rotated = base;
  const Eigen::Matrix3d q =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  rotated.shape = base.shape * q.transpose();
  for (size_t f = 0; f < rotated.rotations.size(); ++f)
    rotated.rotations[f] = base.rotations[f] * q.transpose();
  // projections are invariant: R q' (q X) = R X
  const Reconstruction ra =
      factorize_rigid(build_measurement_matrix(scene_tracks(base, 0.0, 314), 0.1));
  const Reconstruction rb =
      factorize_rigid(build_measurement_matrix(scene_tracks(rotated, 0.0, 314), 0.1));
  CHECK(testutil::procrustes(ra.shape, rb.shape).rmse < 1e-6);
}

TEST_CASE("planar scenes are flagged degenerate") {
  RigidScene scene = make_rigid_scene(6, 16, 315);
  scene.shape.col(2).setZero();
  // in-plane views only so the data stays rank deficient
  for (size_t f = 0; f < scene.rotations.size(); ++f) {
    const double a = 0.3 * double(f);
    Eigen::Matrix<double, 2, 3> rot;
    rot << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0;
    scene.rotations[f] = rot;
  }
  for (int f = 0; f < 6; ++f)
    for (int p = 0; p < 16; ++p) {
      const Eigen::Vector3d x = scene.shape.row(p);
      scene.projections(2 * f, p) = scene.rotations[size_t(f)].row(0).dot(x);
      scene.projections(2 * f + 1, p) = scene.rotations[size_t(f)].row(1).dot(x);
    }
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.0, 316), 0.1);
  const Reconstruction recon = factorize_rigid(m);
  CHECK(recon.degenerate_rank);

  // fronto-parallel planar object: all snapped depths agree
  const Eigen::MatrixX3d snapped = xy_snap(recon, m);
  const double spread = snapped.col(2).maxCoeff() - snapped.col(2).minCoeff();
  const double extent = diameter(scene.shape);
  CHECK(spread < 1e-6 * extent);
}

TEST_CASE("xy snap keeps the target frame's pixels bit for bit") {
  const RigidScene scene = make_rigid_scene(9, 22, 317, 3.0);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.2, 318), 0.1);
  const Reconstruction recon = factorize_rigid(m, 150);
  const Eigen::MatrixX3d snapped = xy_snap(recon, m);
  for (int c = 0; c < m.points(); ++c) {
    CHECK(snapped(c, 0) == m.w_raw(2 * m.target_frame, c));
    CHECK(snapped(c, 1) == m.w_raw(2 * m.target_frame + 1, c));
  }
}

TEST_CASE("snapped depths preserve the true depth ordering") {
  const RigidScene scene = make_rigid_scene(12, 30, 319, 1.0);
  const MeasurementMatrix m = build_measurement_matrix(scene_tracks(scene, 0.0, 320), 0.1);
  const Reconstruction recon = factorize_rigid(m);
  const Eigen::MatrixX3d snapped = xy_snap(recon, m);

  // The reflection half of the gauge is unobservable under orthography;
  // resolve it through the shape alignment before comparing depths.
  const auto aligned = testutil::procrustes(recon.shape, scene.shape);
  const Eigen::Matrix<double, 2, 3>& rot = scene.rotations[size_t(m.target_frame)];
  const Eigen::Vector3d view = rot.row(0).transpose().cross(rot.row(1).transpose());

  std::vector<double> truth, recovered;
  for (int c = 0; c < m.points(); ++c) {
    truth.push_back(view.dot(scene.shape.row(m.track_ids[size_t(c)])));
    recovered.push_back(aligned.det * snapped(c, 2));
  }
  CHECK(testutil::spearman(recovered, truth) > 0.95);
}

TEST_CASE("insufficient data is rejected") {
  const RigidScene scene = make_rigid_scene(2, 10, 321);
  CHECK_THROWS_AS(factorize_rigid(build_measurement_matrix(scene_tracks(scene, 0.0, 322), 0.1)),
                  InsufficientData);
}

TEST_CASE("PLY output is stable and well formed") {
  Eigen::MatrixX3d pts(3, 3);
  pts << 1.5, -2.25, 3.0, 0.1, 0.2, 0.3, -7, 8, 9.000000001;
  const auto path = std::filesystem::temp_directory_path() / "warpkit_test.ply";
  save_ply(path, pts, {0, 4, 7});

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "ply");
  std::string line, all;
  int vertex_lines = 0;
  bool past_header = false;
  while (std::getline(in, line)) {
    if (past_header && !line.empty()) ++vertex_lines;
    if (line == "end_header") past_header = true;
    all += line + "\n";
  }
  CHECK(vertex_lines == 3);
  CHECK(all.find("element vertex 3") != std::string::npos);
  CHECK(all.find("property int track_id") != std::string::npos);
  std::filesystem::remove(path);
}
