#include "warpkit/descriptors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "warpkit/errors.hpp"

namespace warpkit {

std::string DescriptorConfig::id() const {
  return "gradhist-r" + std::to_string(patch_radius) + "-c" + std::to_string(spatial_cells) +
         "-o" + std::to_string(orientation_bins);
}

namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

DescriptorSet extract(const Image& image, const KeypointSet& keypoints,
                      const DescriptorConfig& config) {
  const int radius = config.patch_radius;
  const int patch = 2 * radius;
  if (image.width < patch || image.height < patch)
    throw OutOfBounds("image smaller than descriptor patch");

  const Image gray = image.to_gray();
  const int dim = config.dimension();
  const int cells = config.spatial_cells;
  const int obins = config.orientation_bins;
  const int cell_px = patch / cells;

  DescriptorSet set;
  set.keypoints = keypoints;
  set.descriptor_id = config.id();
  set.vectors = DescriptorMatrix::Zero(long(keypoints.size()), dim);

  auto pixel = [&](int x, int y) {
    return double(gray.at(reflect(x, gray.width), reflect(y, gray.height), 0));
  };

  std::vector<double> hist(size_t(dim), 0.0);
  for (size_t k = 0; k < keypoints.size(); ++k) {
    std::fill(hist.begin(), hist.end(), 0.0);
    const int cx = int(std::lround(keypoints.points[k].x));
    const int cy = int(std::lround(keypoints.points[k].y));
    for (int dy = -radius; dy < radius; ++dy)
      for (int dx = -radius; dx < radius; ++dx) {
        const int px = cx + dx;
        const int py = cy + dy;
        const double gx = pixel(px + 1, py) - pixel(px - 1, py);
        const double gy = pixel(px, py + 1) - pixel(px, py - 1);
        const double mag = std::sqrt(gx * gx + gy * gy);
        if (mag == 0.0) continue;
        const int cell_x = (dx + radius) / cell_px;
        const int cell_y = (dy + radius) / cell_px;
        const double angle = std::atan2(gy, gx);
        const int bin =
            std::clamp(int(std::floor((angle + M_PI) / (2.0 * M_PI) * obins)), 0, obins - 1);
        hist[size_t((cell_y * cells + cell_x) * obins + bin)] += mag;
      }

    double norm = 0.0;
    for (double v : hist) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      set.vectors.row(long(k)).setConstant(float(1.0 / std::sqrt(double(dim))));
      continue;
    }
    double clipped_norm = 0.0;
    for (double& v : hist) {
      v = std::min(v / norm, config.clip);
      clipped_norm += v * v;
    }
    clipped_norm = std::sqrt(clipped_norm);
    for (int d = 0; d < dim; ++d) set.vectors(long(k), d) = float(hist[size_t(d)] / clipped_norm);
  }
  return set;
}

double appearance_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch("descriptor dimensions differ");
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

KeypointSet sample_foreground_grid(const Mask& mask, int stride, const std::string& image_id) {
  if (stride < 1) throw DataError("stride must be positive");
  KeypointSet set;
  set.image_id = image_id;
  for (int y = 0; y < mask.height; y += stride)
    for (int x = 0; x < mask.width; x += stride)
      if (mask.foreground(x, y)) {
        set.points.push_back({double(x), double(y)});
        set.visibility.push_back(1);
      }
  return set;
}

void save_descriptors(const std::filesystem::path& bin_path,
                      const std::filesystem::path& sidecar_path, const DescriptorSet& set) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + bin_path.string());
  const uint32_t version = 1;
  const uint32_t m = uint32_t(set.vectors.rows());
  const uint32_t d = uint32_t(set.vectors.cols());
  out.write("WDSC", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(set.vectors.data()), std::streamsize(sizeof(float)) * m * d);
  if (!out) throw DataError("short write to " + bin_path.string());

  nlohmann::json j;
  j["image_id"] = set.keypoints.image_id;
  j["descriptor_id"] = set.descriptor_id;
  nlohmann::json pts = nlohmann::json::array();
  for (size_t i = 0; i < set.keypoints.size(); ++i)
    pts.push_back({set.keypoints.points[i].x, set.keypoints.points[i].y,
                   int(set.keypoints.visible(i))});
  j["keypoints"] = std::move(pts);
  std::ofstream side(sidecar_path);
  side << j.dump(2) << "\n";
  if (!side) throw DataError("cannot write " + sidecar_path.string());
}

DescriptorSet load_descriptors(const std::filesystem::path& bin_path,
                               const std::filesystem::path& sidecar_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw DataError("cannot read " + bin_path.string());
  char magic[4];
  uint32_t version = 0, m = 0, d = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || std::memcmp(magic, "WDSC", 4) != 0)
    throw DataError("bad descriptor file header: " + bin_path.string());
  if (version != 1) throw DataError("unsupported descriptor file version");

  DescriptorSet set;
  set.vectors = DescriptorMatrix(m, d);
  in.read(reinterpret_cast<char*>(set.vectors.data()), std::streamsize(sizeof(float)) * m * d);
  if (!in) throw DataError("truncated descriptor file: " + bin_path.string());

  std::ifstream side(sidecar_path);
  if (!side) throw DataError("cannot read " + sidecar_path.string());
  nlohmann::json j = nlohmann::json::parse(side);
  set.keypoints.image_id = j.at("image_id").get<std::string>();
  set.descriptor_id = j.value("descriptor_id", "");
  for (const auto& e : j.at("keypoints")) {
    set.keypoints.points.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    set.keypoints.visibility.push_back(uint8_t(e.size() > 2 ? e.at(2).get<int>() : 1));
  }
  if (set.keypoints.size() != m) throw DataError("sidecar keypoint count mismatch");
  return set;
}

}  // namespace warpkit
