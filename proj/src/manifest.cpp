#include "warpkit/manifest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "warpkit/errors.hpp"

namespace warpkit {

const ManifestRecord* DatasetManifest::find(const std::string& image_id) const {
  for (const ManifestRecord& r : records)
    if (r.image_id == image_id) return &r;
  return nullptr;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("manifest is not valid JSON: " + path.string());

  DatasetManifest m;
  m.root = path.parent_path();
  std::set<std::string> seen;
  for (const auto& rec : j.at("records")) {
    ManifestRecord r;
    r.image_id = rec.at("image_id").get<std::string>();
    r.image_path = rec.at("image_path").get<std::string>();
    r.mask_path = rec.at("mask_path").get<std::string>();
    r.group_label = rec.value("group_label", "");
    if (!seen.insert(r.image_id).second)
      throw DataError("duplicate image id in manifest: " + r.image_id);
    if (rec.contains("parts")) {
      r.parts.image_id = r.image_id;
      for (const auto& part : rec.at("parts")) {
        r.parts.names.push_back(part.at("name").get<std::string>());
        r.parts.points.push_back({part.at("x").get<double>(), part.at("y").get<double>()});
        r.parts.visibility.push_back(uint8_t(part.value("visible", true) ? 1 : 0));
      }
    }
    if (!std::filesystem::exists(m.root / r.image_path))
      throw DataError("manifest record '" + r.image_id +
                      "': missing image file " + (m.root / r.image_path).string());
    if (!std::filesystem::exists(m.root / r.mask_path))
      throw DataError("manifest record '" + r.image_id +
                      "': missing mask file " + (m.root / r.mask_path).string());
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  nlohmann::json j;
  nlohmann::json records = nlohmann::json::array();
  for (const ManifestRecord& r : manifest.records) {
    nlohmann::json rec;
    rec["image_id"] = r.image_id;
    rec["image_path"] = r.image_path;
    rec["mask_path"] = r.mask_path;
    rec["group_label"] = r.group_label;
    if (r.parts.size() > 0) {
      nlohmann::json parts = nlohmann::json::array();
      for (size_t i = 0; i < r.parts.size(); ++i) {
        parts.push_back({{"name", r.parts.names[i]},
                         {"x", r.parts.points[i].x},
                         {"y", r.parts.points[i].y},
                         {"visible", r.parts.visible(i)}});
      }
      rec["parts"] = std::move(parts);
    }
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write manifest: " + path.string());
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string("config out of range: ") + what);
  };
  require(k_grid >= 2 && k_grid <= 40, "k_grid in [2,40]");
  require(n_points >= 1, "n_points >= 1");
  require(m_copies >= 1, "m_copies >= 1");
  require(stride >= 1, "stride >= 1");
  require(sigma_f > 0.0, "sigma_f > 0");
  require(sigma_w > 0.0, "sigma_w > 0");
  require(lambda >= 0.0, "lambda >= 0");
  require(alpha > 0.0 && alpha <= 1.0, "alpha in (0,1]");
  require(precision > 0.0 && precision <= 1.0, "precision in (0,1]");
  require(hop_limit_eval >= 1, "hop_limit_eval >= 1");
  require(hop_limit_reconstruct >= 1, "hop_limit_reconstruct >= 1");
  require(min_pair_matches >= 0, "min_pair_matches >= 0");
  require(path_cost_max >= 0.0, "path_cost_max >= 0");
  require(min_image_matches >= 0, "min_image_matches >= 0");
  require(visibility_frac >= 0.0 && visibility_frac <= 1.0, "visibility_frac in [0,1]");
  require(percentile_lo >= 0.0 && percentile_hi <= 100.0 && percentile_lo <= percentile_hi,
          "percentile band in [0,100]");
  require(min_second_nn_px >= 0.0, "min_second_nn_px >= 0");
  require(contour_samples >= 10, "contour_samples >= 10");
  require(knn >= 1, "knn >= 1");
  require(grid_bound >= 1.0, "grid_bound >= 1");
  require(fit_iterations >= 1, "fit_iterations >= 1");
  require(bary_dist_max > 0.0, "bary_dist_max > 0");
  require(jobs >= 1, "jobs >= 1");
}

nlohmann::json PipelineConfig::to_json() const {
  return nlohmann::json{{"k_grid", k_grid},
                        {"n_points", n_points},
                        {"m_copies", m_copies},
                        {"stride", stride},
                        {"sigma_f", sigma_f},
                        {"sigma_w", sigma_w},
                        {"lambda", lambda},
                        {"alpha", alpha},
                        {"precision", precision},
                        {"hop_limit_eval", hop_limit_eval},
                        {"hop_limit_reconstruct", hop_limit_reconstruct},
                        {"min_pair_matches", min_pair_matches},
                        {"path_cost_max", path_cost_max},
                        {"min_image_matches", min_image_matches},
                        {"visibility_frac", visibility_frac},
                        {"percentile_lo", percentile_lo},
                        {"percentile_hi", percentile_hi},
                        {"min_second_nn_px", min_second_nn_px},
                        {"contour_samples", contour_samples},
                        {"knn", knn},
                        {"grid_bound", grid_bound},
                        {"fit_iterations", fit_iterations},
                        {"fit_step", fit_step},
                        {"bary_dist_max", bary_dist_max},
                        {"seed", seed},
                        {"jobs", jobs},
                        {"chromatic", chromatic}};
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_double = [&] { return std::stod(value); };
  auto as_bool = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw DataError("config value for " + key + " must be a boolean");
  };
  if (key == "k_grid") k_grid = as_int();
  else if (key == "n_points") n_points = as_int();
  else if (key == "m_copies") m_copies = as_int();
  else if (key == "stride") stride = as_int();
  else if (key == "sigma_f") sigma_f = as_double();
  else if (key == "sigma_w") sigma_w = as_double();
  else if (key == "lambda") lambda = as_double();
  else if (key == "alpha") alpha = as_double();
  else if (key == "precision") precision = as_double();
  else if (key == "hop_limit_eval") hop_limit_eval = as_int();
  else if (key == "hop_limit_reconstruct") hop_limit_reconstruct = as_int();
  else if (key == "min_pair_matches") min_pair_matches = as_int();
  else if (key == "path_cost_max") path_cost_max = as_double();
  else if (key == "min_image_matches") min_image_matches = as_int();
  else if (key == "visibility_frac") visibility_frac = as_double();
  else if (key == "percentile_lo") percentile_lo = as_double();
  else if (key == "percentile_hi") percentile_hi = as_double();
  else if (key == "min_second_nn_px") min_second_nn_px = as_double();
  else if (key == "contour_samples") contour_samples = as_int();
  else if (key == "knn") knn = as_int();
  else if (key == "grid_bound") grid_bound = as_double();
  else if (key == "fit_iterations") fit_iterations = as_int();
  else if (key == "fit_step") fit_step = as_double();
  else if (key == "bary_dist_max") bary_dist_max = as_double();
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "jobs") jobs = as_int();
  else if (key == "chromatic") chromatic = as_bool();
  else throw DataError("unknown config key: " + key);
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

MatchParams match_params(const PipelineConfig& c) {
  MatchParams p;
  p.sigma_f = c.sigma_f;
  p.sigma_w = c.sigma_w;
  p.lambda = c.lambda;
  p.min_second_nn_px = c.min_second_nn_px;
  p.precision_threshold = c.precision;
  return p;
}

}  // namespace warpkit
