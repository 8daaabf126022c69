#include "warpkit/matcher.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "warpkit/errors.hpp"

namespace warpkit {

double warp_distance(Point2 u_px, Point2 v_px, const TpsWarp& warp_to_a,
                     const TpsWarp& warp_to_b, ImageSize size_a, ImageSize size_b) {
  const Point2 v_in_a = to_pixels(apply_warp(warp_to_a, to_normalized(v_px, size_b)), size_a);
  const Point2 u_in_b = to_pixels(apply_warp(warp_to_b, to_normalized(u_px, size_a)), size_b);
  return 0.5 * (distance(u_px, v_in_a) + distance(v_px, u_in_b));
}

double match_score(double d_f, double d_w, const MatchParams& params) {
  return std::exp(-d_f / params.sigma_f) + params.lambda * std::exp(-d_w / params.sigma_w);
}

MatchSet match_images(const DescriptorSet& desc_a, const DescriptorSet& desc_b,
                      const TpsWarp* warp_to_a, const TpsWarp* warp_to_b, ImageSize size_a,
                      ImageSize size_b, const MatchParams& params) {
  if (desc_a.vectors.cols() != desc_b.vectors.cols())
    throw DimensionMismatch("descriptor dimensions differ between images");
  if (desc_a.keypoints.size() == 0 || desc_b.keypoints.size() == 0)
    throw DataError("cannot match empty keypoint sets");

  const bool use_warp = warp_to_a != nullptr && warp_to_b != nullptr;
  MatchParams effective = params;
  if (!use_warp) effective.lambda = 0.0;

  MatchSet out;
  out.image_a = desc_a.keypoints.image_id;
  out.image_b = desc_b.keypoints.image_id;
  out.a_points = desc_a.keypoints.points;
  out.b_points = desc_b.keypoints.points;
  out.params = effective;
  out.has_warp = use_warp;

  const int na = int(desc_a.keypoints.size());
  const int nb = int(desc_b.keypoints.size());

  // Project each keypoint set into the other frame once; d_w then reduces
  // to two pixel distances per candidate.
  std::vector<Point2> b_in_a(size_t(nb), Point2{}), a_in_b(size_t(na), Point2{});
  if (use_warp) {
    for (int j = 0; j < nb; ++j)
      b_in_a[size_t(j)] =
          to_pixels(apply_warp(*warp_to_a, to_normalized(desc_b.keypoints.points[size_t(j)], size_b)), size_a);
    for (int i = 0; i < na; ++i)
      a_in_b[size_t(i)] =
          to_pixels(apply_warp(*warp_to_b, to_normalized(desc_a.keypoints.points[size_t(i)], size_a)), size_b);
  }

  std::vector<double> scores(size_t(nb), 0.0);
  for (int i = 0; i < na; ++i) {
    if (!desc_a.keypoints.visible(size_t(i))) continue;
    const Point2 u = desc_a.keypoints.points[size_t(i)];

    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < nb; ++j) {
      if (!desc_b.keypoints.visible(size_t(j))) {
        scores[size_t(j)] = -1.0;
        continue;
      }
      const double d_f = appearance_distance(
          {desc_a.vectors.row(i).data(), size_t(desc_a.vectors.cols())},
          {desc_b.vectors.row(j).data(), size_t(desc_b.vectors.cols())});
      double d_w = 0.0;
      if (use_warp)
        d_w = 0.5 * (distance(u, b_in_a[size_t(j)]) +
                     distance(desc_b.keypoints.points[size_t(j)], a_in_b[size_t(i)]));
      const double s = match_score(d_f, d_w, effective);
      scores[size_t(j)] = s;
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    if (best < 0) continue;

    // Best competitor far enough from the chosen candidate.
    double second = -1.0;
    const Point2 best_pos = desc_b.keypoints.points[size_t(best)];
    for (int j = 0; j < nb; ++j) {
      if (j == best || scores[size_t(j)] < 0.0) continue;
      if (distance(desc_b.keypoints.points[size_t(j)], best_pos) < effective.min_second_nn_px)
        continue;
      second = std::max(second, scores[size_t(j)]);
    }

    Match m;
    m.a_idx = i;
    m.b_idx = best;
    m.score = best_score;
    if (second < 0.0) {
      m.ratio = 0.0;
      m.flags |= kNoSecondNeighbor;
    } else {
      m.ratio = second / best_score;
    }
    out.pairs.push_back(m);
  }

  std::stable_sort(out.pairs.begin(), out.pairs.end(), [](const Match& x, const Match& y) {
    if (x.ratio != y.ratio) return x.ratio < y.ratio;
    return x.a_idx < y.a_idx;
  });
  return out;
}

double threshold_at_precision(const MatchSet& matches, const std::vector<uint8_t>& is_correct,
                              double target) {
  if (is_correct.size() != matches.pairs.size())
    throw DimensionMismatch("correctness labels must cover every ranked match");
  if (matches.pairs.empty()) throw UnattainablePrecision("no matches to threshold");

  size_t correct = 0;
  bool reached = false;
  double prev_ratio = 0.0, prev_precision = 1.0;
  for (size_t k = 0; k < matches.pairs.size(); ++k) {
    if (is_correct[k]) ++correct;
    const double precision = double(correct) / double(k + 1);
    const double ratio = matches.pairs[k].ratio;
    if (precision >= target) {
      reached = true;
    } else if (reached) {
      // First dip below target; interpolate the crossing ratio.
      const double dp = precision - prev_precision;
      if (dp == 0.0 || ratio == prev_ratio) return prev_ratio;
      const double t = (target - prev_precision) / dp;
      return prev_ratio + t * (ratio - prev_ratio);
    }
    prev_ratio = ratio;
    prev_precision = precision;
  }
  if (!reached)
    throw UnattainablePrecision("precision never reaches " + std::to_string(target));
  return matches.pairs.back().ratio;  // never drops below target: keep all
}

void save_matches_csv(const std::filesystem::path& path, const MatchSet& matches) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "a_idx,b_idx,a_x,a_y,b_x,b_y,score,ratio,flags\n";
  char line[256];
  for (const Match& m : matches.pairs) {
    const Point2 a = matches.a_points[size_t(m.a_idx)];
    const Point2 b = matches.b_points[size_t(m.b_idx)];
    std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%u\n", m.a_idx,
                  m.b_idx, a.x, a.y, b.x, b.y, m.score, m.ratio, unsigned(m.flags));
    out << line;
  }
  if (!out) throw DataError("short write to " + path.string());
}

MatchSet load_matches_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty match file: " + path.string());

  MatchSet set;
  int max_a = -1, max_b = -1;
  std::vector<std::pair<Point2, Point2>> positions;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Match m;
    Point2 a, b;
    unsigned flags = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf,%lf,%u", &m.a_idx, &m.b_idx, &a.x,
                    &a.y, &b.x, &b.y, &m.score, &m.ratio, &flags) != 9)
      throw DataError("malformed match row in " + path.string() + ": " + line);
    m.flags = uint8_t(flags);
    max_a = std::max(max_a, m.a_idx);
    max_b = std::max(max_b, m.b_idx);
    set.pairs.push_back(m);
    positions.emplace_back(a, b);
  }
  set.a_points.assign(size_t(max_a + 1), Point2{});
  set.b_points.assign(size_t(max_b + 1), Point2{});
  for (size_t i = 0; i < set.pairs.size(); ++i) {
    set.a_points[size_t(set.pairs[i].a_idx)] = positions[i].first;
    set.b_points[size_t(set.pairs[i].b_idx)] = positions[i].second;
  }
  return set;
}

}  // namespace warpkit
