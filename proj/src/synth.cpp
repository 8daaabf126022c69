#include "warpkit/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

#include "warpkit/errors.hpp"
#include "warpkit/rng.hpp"

namespace warpkit {

namespace {

struct DomeSurface {
  double radius_u = 0.62;
  double radius_v = 0.45;
  double height = 0.35;

  bool inside(double u, double v) const {
    const double q = (u / radius_u) * (u / radius_u) + (v / radius_v) * (v / radius_v);
    return q <= 1.0;
  }
  double z(double u, double v) const {
    const double q = (u / radius_u) * (u / radius_u) + (v / radius_v) * (v / radius_v);
    return q >= 1.0 ? 0.0 : height * std::sqrt(1.0 - q);
  }
};

struct TextureBlobSpec {
  double u, v, radius;
  double color[3];
};

Eigen::Matrix3d rotation_yaw_pitch(double yaw, double pitch) {
  Eigen::Matrix3d ry, rx;
  ry << std::cos(yaw), 0, std::sin(yaw), 0, 1, 0, -std::sin(yaw), 0, std::cos(yaw);
  rx << 1, 0, 0, 0, std::cos(pitch), -std::sin(pitch), 0, std::sin(pitch), std::cos(pitch);
  return rx * ry;
}

}  // namespace

void write_toy_dataset(const std::filesystem::path& dir, const ToyDatasetOptions& opt) {
  if (opt.n_images < 3) throw DataError("toy dataset needs at least 3 views");
  std::filesystem::create_directories(dir);

  Rng rng(opt.seed);
  const DomeSurface dome;

  std::vector<TextureBlobSpec> blobs;
  blobs.reserve(size_t(opt.texture_blobs));
  while (int(blobs.size()) < opt.texture_blobs) {
    TextureBlobSpec b;
    b.u = rng.uniform(-dome.radius_u, dome.radius_u);
    b.v = rng.uniform(-dome.radius_v, dome.radius_v);
    if (!dome.inside(b.u, b.v)) continue;
    b.radius = rng.uniform(0.03, 0.10);
    for (double& c : b.color) c = rng.uniform(-0.45, 0.45);
    blobs.push_back(b);
  }

  auto texture = [&](double u, double v, int channel) {
    double value = 0.55 + 0.18 * std::sin(9.0 * u + 4.0 * v + channel) +
                   0.10 * std::sin(5.0 * v - 3.0 * u - 2.0 * channel);
    for (const TextureBlobSpec& b : blobs) {
      const double d2 = (u - b.u) * (u - b.u) + (v - b.v) * (v - b.v);
      value += b.color[channel] * std::exp(-d2 / (2.0 * b.radius * b.radius));
    }
    return std::clamp(value, 0.02, 1.0);
  };

  // Surface anchor points used as part annotations.
  const std::vector<std::pair<double, double>> anchors = {
      {0.0, 0.0},   {0.45, 0.0},   {-0.45, 0.0}, {0.0, 0.32},  {0.0, -0.32},
      {0.3, 0.22},  {-0.3, 0.22},  {0.3, -0.22}, {-0.3, -0.22}};

  const int size = opt.image_size;
  const double scale = 0.42 * size;  // object units to pixels
  const double cx = 0.5 * (size - 1), cy = 0.5 * (size - 1);

  DatasetManifest manifest;
  manifest.root = dir;

  nlohmann::json gt;
  gt["surface"] = {{"radius_u", dome.radius_u},
                   {"radius_v", dome.radius_v},
                   {"height", dome.height},
                   {"scale", scale},
                   {"center_x", cx},
                   {"center_y", cy}};
  nlohmann::json views = nlohmann::json::array();

  const int oversample = 3;
  const int grid = size * oversample;
  for (int view = 0; view < opt.n_images; ++view) {
    // Frontal target first, remaining views spread over the yaw range.
    double yaw = 0.0, pitch = 0.0;
    if (view > 0) {
      const double t = double(view - 1) / double(opt.n_images - 2);
      yaw = (2.0 * t - 1.0) * opt.max_yaw_deg * M_PI / 180.0;
      pitch = std::sin(4.0 * M_PI * t) * opt.max_pitch_deg * M_PI / 180.0;
    }
    const Eigen::Matrix3d rot = rotation_yaw_pitch(yaw, pitch);

    Image img(size, size, 3);
    Mask mask(size, size);
    Eigen::MatrixXd depth = Eigen::MatrixXd::Constant(size, size, -1e9);

    for (int gv = 0; gv < grid; ++gv)
      for (int gu = 0; gu < grid; ++gu) {
        const double u = (2.0 * gu / (grid - 1) - 1.0) * 0.75;
        const double v = (2.0 * gv / (grid - 1) - 1.0) * 0.75;
        if (!dome.inside(u, v)) continue;
        const Eigen::Vector3d p = rot * Eigen::Vector3d(u, v, dome.z(u, v));
        const int px = int(std::lround(cx + scale * p.x()));
        const int py = int(std::lround(cy + scale * p.y()));
        if (px < 0 || py < 0 || px >= size || py >= size) continue;
        if (p.z() <= depth(py, px)) continue;
        depth(py, px) = p.z();
        mask.set(px, py, true);
        for (int c = 0; c < 3; ++c) img.at(px, py, c) = float(texture(u, v, c));
      }

    char id[32];
    std::snprintf(id, sizeof id, "view_%02d", view);

    ManifestRecord rec;
    rec.image_id = id;
    rec.image_path = std::string(id) + ".png";
    rec.mask_path = std::string(id) + "_mask.png";
    rec.group_label = view % 2 == 0 ? "dome_alpha" : "dome_beta";
    rec.parts.image_id = id;
    for (size_t a = 0; a < anchors.size(); ++a) {
      const auto [u, v] = anchors[a];
      const Eigen::Vector3d p = rot * Eigen::Vector3d(u, v, dome.z(u, v));
      const double px = cx + scale * p.x();
      const double py = cy + scale * p.y();
      rec.parts.names.push_back("p" + std::to_string(a));
      rec.parts.points.push_back({px, py});
      rec.parts.visibility.push_back(
          uint8_t(px >= 0 && py >= 0 && px < size && py < size ? 1 : 0));
    }

    save_png(dir / rec.image_path, img);
    save_mask(dir / rec.mask_path, mask);
    manifest.records.push_back(std::move(rec));

    views.push_back({{"image_id", id}, {"yaw", yaw}, {"pitch", pitch}});
  }

  gt["views"] = std::move(views);
  save_manifest(dir / "manifest.json", manifest);
  std::ofstream gt_out(dir / "gt.json");
  gt_out << gt.dump(2) << "\n";
  if (!gt_out) throw DataError("cannot write toy ground truth");
}

RigidScene make_rigid_scene(int frames, int points, uint64_t seed, double translation_scale) {
  if (frames < 1 || points < 1) throw DataError("scene needs frames and points");
  Rng rng(seed);

  RigidScene scene;
  scene.shape = Eigen::MatrixX3d(points, 3);
  for (int p = 0; p < points; ++p)
    for (int c = 0; c < 3; ++c) scene.shape(p, c) = rng.uniform(-1.0, 1.0);
  // Center the cloud so gauge comparisons are clean.
  const Eigen::RowVector3d mean = scene.shape.colwise().mean();
  scene.shape.rowwise() -= mean;

  scene.rotations.reserve(size_t(frames));
  scene.translations = Eigen::MatrixX2d::Zero(frames, 2);
  scene.projections = Eigen::MatrixXd(2 * frames, points);
  for (int f = 0; f < frames; ++f) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-9) axis = Eigen::Vector3d::UnitZ();
    axis.normalize();
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    Eigen::Matrix<double, 2, 3> rows = rot.topRows<2>();
    scene.rotations.push_back(rows);
    scene.translations(f, 0) = translation_scale * rng.normal();
    scene.translations(f, 1) = translation_scale * rng.normal();
    for (int p = 0; p < points; ++p) {
      const Eigen::Vector3d x = scene.shape.row(p);
      scene.projections(2 * f, p) = rows.row(0).dot(x) + scene.translations(f, 0);
      scene.projections(2 * f + 1, p) = rows.row(1).dot(x) + scene.translations(f, 1);
    }
  }
  return scene;
}

TrackSet scene_tracks(const RigidScene& scene, double missing_frac, uint64_t seed) {
  Rng rng(seed);
  const int frames = int(scene.rotations.size());
  const int points = int(scene.shape.rows());

  TrackSet tracks;
  char id[32];
  std::snprintf(id, sizeof id, "frame_%02d", 0);
  tracks.target_image = id;

  for (int f = 0; f < frames; ++f) {
    std::snprintf(id, sizeof id, "frame_%02d", f);
    const std::string frame_id = id;
    std::vector<char> drop(size_t(points), 0);
    if (f != 0) {
      int kept = points;
      for (int p = 0; p < points; ++p)
        if (rng.uniform() < missing_frac) {
          drop[size_t(p)] = 1;
          --kept;
        }
      for (int p = 0; p < points && kept < 3; ++p)
        if (drop[size_t(p)]) {
          drop[size_t(p)] = 0;
          ++kept;
        }
    }
    for (int p = 0; p < points; ++p)
      if (!drop[size_t(p)])
        tracks.tracks[p][frame_id] = {
            {scene.projections(2 * f, p), scene.projections(2 * f + 1, p)}, 0.0};
  }
  return tracks;
}

TexturedBlob make_textured_blob(int size, int repeats, uint64_t seed) {
  Rng rng(seed);
  TexturedBlob out;
  out.image = Image(size, size, 3);
  out.mask = Mask(size, size);

  // Random smooth motif, tiled `repeats` times per axis.
  const int motif = std::max(4, size / std::max(1, repeats));
  std::vector<float> pattern(size_t(motif) * motif * 3);
  for (float& v : pattern) v = float(rng.uniform(0.1, 1.0));
  // one smoothing pass to give the motif gradients rather than pixel noise
  std::vector<float> smooth = pattern;
  for (int y = 0; y < motif; ++y)
    for (int x = 0; x < motif; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = (x + dx + motif) % motif;
            const int ny = (y + dy + motif) % motif;
            acc += pattern[(size_t(ny) * motif + nx) * 3 + size_t(c)];
          }
        smooth[(size_t(y) * motif + x) * 3 + size_t(c)] = acc / 9.f;
      }

  const double cx = 0.5 * (size - 1), cy = 0.5 * (size - 1);
  const double ru = 0.38 * size, rv = 0.30 * size;
  const double wobble_phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double angle = std::atan2(y - cy, x - cx);
      const double wob = 1.0 + 0.12 * std::sin(3.0 * angle + wobble_phase);
      const double q = ((x - cx) / (ru * wob)) * ((x - cx) / (ru * wob)) +
                       ((y - cy) / (rv * wob)) * ((y - cy) / (rv * wob));
      if (q > 1.0) continue;
      out.mask.set(x, y, true);
      for (int c = 0; c < 3; ++c)
        out.image.at(x, y, c) = smooth[(size_t(y % motif) * motif + size_t(x % motif)) * 3 + size_t(c)];
    }
  return out;
}

ExemplarWarpBank make_random_warp_bank(int count, int k, double amplitude, bool affine_only,
                                       uint64_t seed) {
  Rng rng(seed);
  const SystemMatrix sys = build_system(regular_lattice(k));

  ExemplarWarpBank bank;
  bank.percentile_lo = 0.0;
  bank.percentile_hi = 100.0;
  bank.mined_total = size_t(count);

  for (int i = 0; i < count; ++i) {
    std::vector<Point2> targets(sys.source_points.size());
    if (affine_only) {
      const double a11 = 1.0 + amplitude * rng.normal();
      const double a12 = amplitude * rng.normal();
      const double a21 = amplitude * rng.normal();
      const double a22 = 1.0 + amplitude * rng.normal();
      const double bx = amplitude * rng.normal();
      const double by = amplitude * rng.normal();
      for (size_t p = 0; p < targets.size(); ++p) {
        const Point2 s = sys.source_points[p];
        targets[p] = {a11 * s.x + a12 * s.y + bx, a21 * s.x + a22 * s.y + by};
      }
    } else {
      // Smooth random displacement field: a few low-frequency waves.
      struct Wave {
        double fx, fy, phase, cx, cy;
      };
      std::vector<Wave> waves(3);
      for (Wave& w : waves) {
        w.fx = rng.uniform(0.5, 2.2);
        w.fy = rng.uniform(0.5, 2.2);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.cx = amplitude * rng.uniform(-1.0, 1.0);
        w.cy = amplitude * rng.uniform(-1.0, 1.0);
      }
      for (size_t p = 0; p < targets.size(); ++p) {
        const Point2 s = sys.source_points[p];
        double dx = 0.0, dy = 0.0;
        for (const Wave& w : waves) {
          const double arg = w.fx * s.x + w.fy * s.y + w.phase;
          dx += w.cx * std::sin(arg);
          dy += w.cy * std::cos(arg);
        }
        targets[p] = {s.x + dx, s.y + dy};
      }
    }
    ExemplarWarpBank::Entry entry;
    entry.warp = solve_coefficients(sys, targets);
    entry.energy = warp_energy(entry.warp, sys);
    bank.warps.push_back(std::move(entry));
  }

  std::stable_sort(bank.warps.begin(), bank.warps.end(), [](const auto& a, const auto& b) {
    return a.energy.mean_energy < b.energy.mean_energy;
  });
  return bank;
}

}  // namespace warpkit
