#include "warpkit/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "warpkit/errors.hpp"

namespace warpkit {

MeasurementMatrix build_measurement_matrix(const TrackSet& tracks, double min_visibility_frac) {
  if (tracks.tracks.empty()) throw EmptyTracks("no tracks to assemble");

  std::vector<std::string> frames;
  for (const auto& [kp, track] : tracks.tracks)
    for (const auto& [image, pt] : track) frames.push_back(image);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  const int f = int(frames.size());

  auto frame_index = [&](const std::string& id) {
    return int(std::lower_bound(frames.begin(), frames.end(), id) - frames.begin());
  };

  // Columns: tracks observed in enough frames. Track map iteration is
  // ordered by keypoint index, so columns are deterministic.
  std::vector<int> track_ids;
  for (const auto& [kp, track] : tracks.tracks) {
    if (!track.count(tracks.target_image))
      throw EmptyTracks("track missing its target-frame point");
    if (double(track.size()) + 1e-9 >= min_visibility_frac * f) track_ids.push_back(kp);
  }
  if (track_ids.empty()) throw EmptyTracks("no track passes the visibility threshold");
  const int p = int(track_ids.size());

  MeasurementMatrix m;
  m.frame_ids = frames;
  m.target_frame = frame_index(tracks.target_image);
  m.track_ids = track_ids;
  m.w_raw = Eigen::MatrixXd::Zero(2 * f, p);
  m.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(2 * f, p, false);

  for (int c = 0; c < p; ++c) {
    const auto& track = tracks.tracks.at(track_ids[size_t(c)]);
    for (const auto& [image, pt] : track) {
      const int fr = frame_index(image);
      m.w_raw(2 * fr, c) = pt.position.x;
      m.w_raw(2 * fr + 1, c) = pt.position.y;
      m.mask(2 * fr, c) = true;
      m.mask(2 * fr + 1, c) = true;
    }
  }

  m.w = m.w_raw;
  m.centroids = Eigen::MatrixX2d::Zero(f, 2);
  for (int fr = 0; fr < f; ++fr)
    for (int axis = 0; axis < 2; ++axis) {
      const int row = 2 * fr + axis;
      double sum = 0.0;
      int count = 0;
      for (int c = 0; c < p; ++c)
        if (m.mask(row, c)) {
          sum += m.w_raw(row, c);
          ++count;
        }
      const double mean = count > 0 ? sum / count : 0.0;
      m.centroids(fr, axis) = mean;
      for (int c = 0; c < p; ++c)
        if (m.mask(row, c)) m.w(row, c) -= mean;
        else m.w(row, c) = 0.0;
    }
  return m;
}

namespace {

// Least-squares metric upgrade: find G with M = A G satisfying the
// per-frame equal-norm and orthogonality constraints.
Eigen::Matrix3d metric_upgrade(const Eigen::MatrixXd& a) {
  const int f = int(a.rows()) / 2;
  auto q_row = [](const Eigen::RowVector3d& u, const Eigen::RowVector3d& v) {
    Eigen::Matrix<double, 1, 6> row;
    row << u(0) * v(0), u(0) * v(1) + u(1) * v(0), u(0) * v(2) + u(2) * v(0), u(1) * v(1),
        u(1) * v(2) + u(2) * v(1), u(2) * v(2);
    return row;
  };

  Eigen::MatrixXd lhs(2 * f + 1, 6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * f + 1);
  for (int fr = 0; fr < f; ++fr) {
    const Eigen::RowVector3d i_row = a.row(2 * fr);
    const Eigen::RowVector3d j_row = a.row(2 * fr + 1);
    lhs.row(2 * fr) = q_row(i_row, i_row) - q_row(j_row, j_row);
    lhs.row(2 * fr + 1) = q_row(i_row, j_row);
  }
  // Fix the global scale: row norms average to one.
  Eigen::Matrix<double, 1, 6> scale_row = Eigen::Matrix<double, 1, 6>::Zero();
  for (int fr = 0; fr < f; ++fr) {
    const Eigen::RowVector3d i_row = a.row(2 * fr);
    const Eigen::RowVector3d j_row = a.row(2 * fr + 1);
    scale_row += q_row(i_row, i_row) + q_row(j_row, j_row);
  }
  lhs.row(2 * f) = scale_row;
  rhs(2 * f) = 2.0 * f;

  const Eigen::Matrix<double, 6, 1> qv =
      lhs.colPivHouseholderQr().solve(rhs);
  Eigen::Matrix3d q;
  q << qv(0), qv(1), qv(2), qv(1), qv(3), qv(4), qv(2), qv(4), qv(5);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(q);
  Eigen::Vector3d vals = eig.eigenvalues();
  const double floor_val = std::max(vals.maxCoeff(), 1.0) * 1e-12;
  for (int i = 0; i < 3; ++i) vals(i) = std::max(vals(i), floor_val);
  return eig.eigenvectors() * vals.cwiseSqrt().asDiagonal();
}

Eigen::Matrix<double, 2, 3> project_to_orthonormal(const Eigen::Matrix<double, 2, 3>& block) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

Reconstruction factorize_rigid(const MeasurementMatrix& m, int max_iters, double tol) {
  const int f = m.frames();
  const int p = m.points();
  if (f < 3 || p < 4)
    throw InsufficientData("factorization needs at least 3 frames and 4 points");

  Reconstruction recon;
  recon.rotations.assign(size_t(f), Eigen::Matrix<double, 2, 3>::Zero());
  recon.translations = Eigen::MatrixX2d::Zero(f, 2);

  // Initial fill: per-column means of observed x entries and y entries.
  Eigen::MatrixXd est(2 * f, p);
  for (int c = 0; c < p; ++c) {
    double sx = 0.0, sy = 0.0;
    int nx = 0, ny = 0;
    for (int fr = 0; fr < f; ++fr) {
      if (m.mask(2 * fr, c)) {
        sx += m.w(2 * fr, c);
        ++nx;
      }
      if (m.mask(2 * fr + 1, c)) {
        sy += m.w(2 * fr + 1, c);
        ++ny;
      }
    }
    for (int fr = 0; fr < f; ++fr) {
      est(2 * fr, c) = nx > 0 ? sx / nx : 0.0;
      est(2 * fr + 1, c) = ny > 0 ? sy / ny : 0.0;
    }
  }

  const size_t observed = size_t((m.mask == true).count());
  double prev_residual = std::numeric_limits<double>::infinity();
  int increases = 0;

  Eigen::MatrixXd motion(2 * f, 3);
  Eigen::MatrixXd shape(3, p);
  Eigen::VectorXd row_means(2 * f);

  for (int iter = 0; iter < max_iters; ++iter) {
    // (1) complete the matrix with the current estimate
    Eigen::MatrixXd filled = m.mask.select(m.w, est);

    // translations as full-row means of the completed matrix
    row_means = filled.rowwise().mean();
    const Eigen::MatrixXd centered = filled.colwise() - row_means;

    // (2) rank-3 truncation
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Vector3d sv = svd.singularValues().head(3);
    if (sv(0) > 0.0) recon.degenerate_rank = sv(2) < 1e-6 * sv(0);
    const Eigen::Vector3d scale = sv.cwiseSqrt();
    Eigen::MatrixXd a = svd.matrixU().leftCols(3) * scale.asDiagonal();
    Eigen::MatrixXd s = scale.asDiagonal() * svd.matrixV().leftCols(3).transpose();

    // (3) metric upgrade, (4) motion projection
    const Eigen::Matrix3d g = metric_upgrade(a);
    Eigen::MatrixXd upgraded = a * g;
    for (int fr = 0; fr < f; ++fr)
      motion.middleRows<2>(2 * fr) = project_to_orthonormal(upgraded.middleRows<2>(2 * fr));

    // refit shape against observed entries with the projected motion fixed
    for (int c = 0; c < p; ++c) {
      int rows = 0;
      for (int r = 0; r < 2 * f; ++r) rows += m.mask(r, c) ? 1 : 0;
      Eigen::MatrixXd mm(rows, 3);
      Eigen::VectorXd vv(rows);
      int k = 0;
      for (int r = 0; r < 2 * f; ++r)
        if (m.mask(r, c)) {
          mm.row(k) = motion.row(r);
          vv(k) = m.w(r, c) - row_means(r);
          ++k;
        }
      shape.col(c) = mm.colPivHouseholderQr().solve(vv);
    }

    est = (motion * shape).colwise() + row_means;

    double sq = 0.0;
    for (int r = 0; r < 2 * f; ++r)
      for (int c = 0; c < p; ++c)
        if (m.mask(r, c)) {
          const double d = est(r, c) - m.w(r, c);
          sq += d * d;
        }
    const double residual = std::sqrt(sq / double(observed));
    recon.residual_history.push_back(residual);
    recon.iterations = iter + 1;

    if (residual > prev_residual) {
      if (++increases >= 5)
        throw DivergedFactorization("observed residual increased 5 iterations in a row");
    } else {
      increases = 0;
    }
    const bool converged = std::abs(prev_residual - residual) < tol;
    prev_residual = residual;
    if (converged) break;
  }

  recon.shape = shape.transpose();
  if (recon.degenerate_rank) {
    // Rank-deficient data leaves one shape mode unconstrained; collapse it
    // instead of reporting amplified noise.
    const Eigen::RowVector3d center = recon.shape.colwise().mean();
    Eigen::MatrixX3d centered_shape = recon.shape.rowwise() - center;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered_shape,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::Vector3d sv = svd.singularValues();
    sv(2) = 0.0;
    recon.shape =
        (svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose()).rowwise() + center;
  }
  for (int fr = 0; fr < f; ++fr) {
    recon.rotations[size_t(fr)] = motion.middleRows<2>(2 * fr);
    recon.translations(fr, 0) = row_means(2 * fr);
    recon.translations(fr, 1) = row_means(2 * fr + 1);
  }
  recon.residual = prev_residual;
  return recon;
}

Eigen::MatrixX3d xy_snap(const Reconstruction& recon, const MeasurementMatrix& m) {
  const int p = m.points();
  const int t = m.target_frame;
  Eigen::MatrixX3d out(p, 3);

  const Eigen::Matrix<double, 2, 3>& rot = recon.rotations[size_t(t)];
  const Eigen::Vector3d r1 = rot.row(0);
  const Eigen::Vector3d r2 = rot.row(1);
  const Eigen::Vector3d view = r1.cross(r2);  // target camera's depth axis

  for (int c = 0; c < p; ++c) {
    out(c, 0) = m.w_raw(2 * t, c);
    out(c, 1) = m.w_raw(2 * t + 1, c);
    // Rank-deficient data carries no depth signal (all orthographic views
    // of a plane are affinely equivalent), so report a flat relief.
    out(c, 2) = recon.degenerate_rank ? 0.0 : view.dot(recon.shape.row(c));
  }
  return out;
}

void save_ply(const std::filesystem::path& path, const Eigen::MatrixX3d& points,
              const std::vector<int>& track_ids) {
  if (size_t(points.rows()) != track_ids.size())
    throw DimensionMismatch("one track id per point required");
  std::ofstream out(path, std::ios::binary);  // binary: keep \n exact on all platforms
  if (!out) throw DataError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << points.rows()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property int track_id\nend_header\n";
  char line[160];
  for (long i = 0; i < points.rows(); ++i) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %d\n", points(i, 0), points(i, 1),
                  points(i, 2), track_ids[size_t(i)]);
    out << line;
  }
  if (!out) throw DataError("short write to " + path.string());
}

}  // namespace warpkit
