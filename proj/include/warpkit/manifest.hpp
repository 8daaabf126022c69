#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "warpkit/descriptors.hpp"
#include "warpkit/matcher.hpp"

#include <nlohmann/json_fwd.hpp>

namespace warpkit {

struct ManifestRecord {
  std::string image_id;
  std::string image_path;  // relative to the manifest root
  std::string mask_path;
  std::string group_label;
  KeypointSet parts;  // optional named part annotations with visibility
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;

  const ManifestRecord* find(const std::string& image_id) const;
  std::filesystem::path image_file(const ManifestRecord& r) const { return root / r.image_path; }
  std::filesystem::path mask_file(const ManifestRecord& r) const { return root / r.mask_path; }
};

/// Loads and validates a manifest JSON: unique image ids, referenced files
/// present on disk.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// All pipeline parameters with their defaults; serialized next to every
/// output so runs are reproducible.
struct PipelineConfig {
  int k_grid = 10;
  int n_points = 100;
  int m_copies = 9;
  int stride = 8;
  double sigma_f = 1.75;
  double sigma_w = 18.0;
  double lambda = 0.3;
  double alpha = 0.05;
  double precision = 0.85;
  int hop_limit_eval = 3;
  int hop_limit_reconstruct = 4;
  int min_pair_matches = 50;
  double path_cost_max = 0.4;
  int min_image_matches = 30;
  double visibility_frac = 0.10;
  double percentile_lo = 50.0;
  double percentile_hi = 90.0;
  double min_second_nn_px = 10.0;
  int contour_samples = 100;
  int knn = 5;
  double grid_bound = 1.5;
  int fit_iterations = 2000;
  double fit_step = 0.0;  // <= 0: exact line search
  double bary_dist_max = 0.1;
  uint64_t seed = 0;
  int jobs = 1;
  bool chromatic = true;

  void validate() const;  // throws DataError on out-of-range values
  nlohmann::json to_json() const;

  /// Applies one `key = value` assignment; unknown keys are an error.
  void set(const std::string& key, const std::string& value);
};

/// Flat key = value config file; '#' starts a comment.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

MatchParams match_params(const PipelineConfig& c);

}  // namespace warpkit
