#include "warpkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "warpkit/errors.hpp"

namespace warpkit {

namespace {

// For each ground-truth pair, the index of the ranked match whose source
// keypoint sits on it (nearest within src_tol), or -1. Both pck and
// pr_curve share this lookup so their counts agree exactly.
std::vector<int> match_for_gt(const MatchSet& matches, const GroundTruthMatches& gt,
                              double src_tol) {
  std::vector<int> assigned(gt.pairs.size(), -1);
  for (size_t g = 0; g < gt.pairs.size(); ++g) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < matches.pairs.size(); ++m) {
      const Point2 a = matches.a_points[size_t(matches.pairs[m].a_idx)];
      const double d = distance(a, gt.pairs[g].first);
      if (d <= src_tol && d < best) {  // ties keep the earlier-ranked match
        best = d;
        assigned[g] = int(m);
      }
    }
  }
  return assigned;
}

bool within_radius(const MatchSet& matches, int match_idx, Point2 gt_target, double radius) {
  const Point2 b = matches.b_points[size_t(matches.pairs[size_t(match_idx)].b_idx)];
  return distance(b, gt_target) <= radius;
}

}  // namespace

double pck(const MatchSet& matches, const GroundTruthMatches& gt, double alpha, ImageSize size_a,
           ImageSize size_b, double src_tol) {
  if (alpha <= 0.0) throw DataError("alpha must be positive");
  if (gt.pairs.empty()) return 0.0;
  const double radius = alpha * 0.5 * (image_diagonal(size_a) + image_diagonal(size_b));
  const std::vector<int> assigned = match_for_gt(matches, gt, src_tol);

  size_t correct = 0;
  for (size_t g = 0; g < gt.pairs.size(); ++g)
    if (assigned[g] >= 0 && within_radius(matches, assigned[g], gt.pairs[g].second, radius))
      ++correct;
  return double(correct) / double(gt.pairs.size());
}

PrCurve pr_curve(const MatchSet& matches, const GroundTruthMatches& gt, double alpha,
                 ImageSize size_a, ImageSize size_b, double src_tol) {
  if (alpha <= 0.0) throw DataError("alpha must be positive");
  PrCurve curve;
  curve.alpha = alpha;
  if (gt.pairs.empty() || matches.pairs.empty()) return curve;

  const double radius = alpha * 0.5 * (image_diagonal(size_a) + image_diagonal(size_b));
  const std::vector<int> assigned = match_for_gt(matches, gt, src_tol);
  std::vector<std::vector<size_t>> gt_of_match(matches.pairs.size());
  for (size_t g = 0; g < gt.pairs.size(); ++g)
    if (assigned[g] >= 0) gt_of_match[size_t(assigned[g])].push_back(g);

  size_t tp = 0, fp = 0;
  double prev_recall = 0.0, prev_precision = 1.0;
  for (size_t m = 0; m < matches.pairs.size(); ++m) {
    for (size_t g : gt_of_match[m]) {
      if (within_radius(matches, int(m), gt.pairs[g].second, radius))
        ++tp;
      else
        ++fp;
      const double recall = double(tp) / double(gt.pairs.size());
      const double precision = double(tp) / double(tp + fp);
      curve.ap += (recall - prev_recall) * 0.5 * (precision + prev_precision);
      curve.points.emplace_back(recall, precision);
      prev_recall = recall;
      prev_precision = precision;
    }
  }
  return curve;
}

namespace {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulation(const std::vector<Point2>& points) {
  const int n = int(points.size());
  if (n < 3) throw DegenerateTriangulation("need at least 3 points to triangulate");

  // Symbolic perturbation: cocircular ties (four corners of a rectangle
  // would otherwise yield overlapping triangles) are broken by a tiny
  // index-dependent jitter used only for the circumcircle tests.
  double span = 0.0;
  for (const Point2& p : points) span = std::max({span, std::abs(p.x), std::abs(p.y)});
  if (span == 0.0) span = 1.0;
  std::vector<Point2> jittered(points);
  for (int i = 0; i < n; ++i) {
    const double t = double(i + 1);
    jittered[size_t(i)].x += span * 1e-9 * std::sin(12.9898 * t);
    jittered[size_t(i)].y += span * 1e-9 * std::sin(78.233 * t + 1.0);
  }

  std::vector<std::array<int, 3>> triangles;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        if (std::abs(cross(points[size_t(i)], points[size_t(j)], points[size_t(k)])) < 1e-12)
          continue;
        const Point2 a = jittered[size_t(i)], b = jittered[size_t(j)], c = jittered[size_t(k)];

        // Circumcircle from the perpendicular-bisector equations.
        const double d = 2.0 * cross(a, b, c);
        const double na = squared_norm(a), nb = squared_norm(b), nc = squared_norm(c);
        const double ux = (na * (b.y - c.y) + nb * (c.y - a.y) + nc * (a.y - b.y)) / d;
        const double uy = (na * (c.x - b.x) + nb * (a.x - c.x) + nc * (b.x - a.x)) / d;
        const Point2 center{ux, uy};
        const double r2 = squared_norm(a - center);

        bool empty = true;
        for (int p = 0; p < n && empty; ++p) {
          if (p == i || p == j || p == k) continue;
          if (squared_norm(jittered[size_t(p)] - center) < r2) empty = false;
        }
        if (empty) triangles.push_back({i, j, k});
      }

  if (triangles.empty()) throw DegenerateTriangulation("all points collinear");
  std::sort(triangles.begin(), triangles.end());
  return triangles;
}

std::array<double, 3> barycentric(Point2 p, Point2 a, Point2 b, Point2 c) {
  const double d = cross(a, b, c);
  if (d == 0.0) throw DegenerateTriangulation("degenerate triangle");
  const double wa = cross(p, b, c) / d;
  const double wb = cross(a, p, c) / d;
  return {wa, wb, 1.0 - wa - wb};
}

namespace {

constexpr double kInsideEps = 1e-9;

bool bary_inside(const std::array<double, 3>& w) {
  return w[0] >= -kInsideEps && w[1] >= -kInsideEps && w[2] >= -kInsideEps;
}

// Assigns each point to the first (lowest-index) triangle containing it.
std::vector<int> assign_triangles(const std::vector<Point2>& pts,
                                  const std::vector<Point2>& vertices,
                                  const std::vector<std::array<int, 3>>& triangles) {
  std::vector<int> owner(pts.size(), -1);
  for (size_t p = 0; p < pts.size(); ++p)
    for (size_t t = 0; t < triangles.size(); ++t) {
      const auto& tri = triangles[t];
      const auto w = barycentric(pts[p], vertices[size_t(tri[0])], vertices[size_t(tri[1])],
                                 vertices[size_t(tri[2])]);
      if (bary_inside(w)) {
        owner[p] = int(t);
        break;
      }
    }
  return owner;
}

}  // namespace

GroundTruthMatches expand_pseudo_gt(const KeypointSet& parts_a, const KeypointSet& parts_b,
                                    const KeypointSet& dense_a, const KeypointSet& dense_b,
                                    double max_bary_dist) {
  if (parts_a.size() != parts_b.size())
    throw DimensionMismatch("part sets must align index for index");

  std::vector<int> shared;  // part indices visible in both images
  for (size_t i = 0; i < parts_a.size(); ++i)
    if (parts_a.visible(i) && parts_b.visible(i)) shared.push_back(int(i));
  if (shared.size() < 3) throw DegenerateTriangulation("fewer than 3 mutually visible parts");

  std::vector<Point2> va, vb;
  for (int i : shared) {
    va.push_back(parts_a.points[size_t(i)]);
    vb.push_back(parts_b.points[size_t(i)]);
  }
  const auto tris_a = delaunay_triangulation(va);
  const auto tris_b = delaunay_triangulation(vb);

  // Triangles correspond across images through their part-index triples.
  std::map<std::array<int, 3>, int> b_by_parts;
  for (size_t t = 0; t < tris_b.size(); ++t) {
    std::array<int, 3> key{shared[size_t(tris_b[t][0])], shared[size_t(tris_b[t][1])],
                           shared[size_t(tris_b[t][2])]};
    b_by_parts[key] = int(t);
  }

  std::vector<Point2> da, db;
  for (size_t i = 0; i < dense_a.size(); ++i)
    if (dense_a.visible(i)) da.push_back(dense_a.points[i]);
  for (size_t i = 0; i < dense_b.size(); ++i)
    if (dense_b.visible(i)) db.push_back(dense_b.points[i]);

  const std::vector<int> owner_a = assign_triangles(da, va, tris_a);
  const std::vector<int> owner_b = assign_triangles(db, vb, tris_b);

  // Dense B points and their barycentric coordinates, grouped by triangle.
  std::vector<std::vector<std::pair<size_t, std::array<double, 3>>>> by_tri_b(tris_b.size());
  for (size_t p = 0; p < db.size(); ++p) {
    if (owner_b[p] < 0) continue;
    const auto& tri = tris_b[size_t(owner_b[p])];
    by_tri_b[size_t(owner_b[p])].emplace_back(
        p, barycentric(db[p], vb[size_t(tri[0])], vb[size_t(tri[1])], vb[size_t(tri[2])]));
  }

  GroundTruthMatches out;
  out.provenance = Provenance::pseudo;
  for (size_t p = 0; p < da.size(); ++p) {
    if (owner_a[p] < 0) continue;
    const auto& tri_a = tris_a[size_t(owner_a[p])];
    const std::array<int, 3> key{shared[size_t(tri_a[0])], shared[size_t(tri_a[1])],
                                 shared[size_t(tri_a[2])]};
    const auto it = b_by_parts.find(key);
    if (it == b_by_parts.end()) continue;  // triangulations disagree here

    const auto wa =
        barycentric(da[p], va[size_t(tri_a[0])], va[size_t(tri_a[1])], va[size_t(tri_a[2])]);
    double best = max_bary_dist;
    int best_q = -1;
    for (const auto& [q, wb] : by_tri_b[size_t(it->second)]) {
      const double d = std::sqrt((wa[0] - wb[0]) * (wa[0] - wb[0]) +
                                 (wa[1] - wb[1]) * (wa[1] - wb[1]) +
                                 (wa[2] - wb[2]) * (wa[2] - wb[2]));
      if (d < best) {
        best = d;
        best_q = int(q);
      }
    }
    if (best_q >= 0) out.pairs.emplace_back(da[p], db[size_t(best_q)]);
  }
  return out;
}

std::vector<int> filter_test_pairs(const std::vector<AnnotatedPair>& pairs, int min_shared_parts,
                                   double energy_percentile) {
  std::vector<int> candidates;
  std::vector<double> energies;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const AnnotatedPair& pr = pairs[i];
    if (pr.parts_a.size() != pr.parts_b.size()) continue;
    std::vector<Point2> src, dst;
    for (size_t p = 0; p < pr.parts_a.size(); ++p)
      if (pr.parts_a.visible(p) && pr.parts_b.visible(p)) {
        src.push_back(to_normalized(pr.parts_a.points[p], pr.size_a));
        dst.push_back(to_normalized(pr.parts_b.points[p], pr.size_b));
      }
    if (int(src.size()) < min_shared_parts) continue;
    try {
      const SystemMatrix sys = build_system(src);
      const WarpEnergy e = warp_energy(solve_coefficients(sys, dst), sys);
      candidates.push_back(int(i));
      energies.push_back(e.bending);
    } catch (const SingularSystem&) {
      // degenerate annotation layout: treat as unusable
    }
  }
  if (candidates.empty()) return {};

  std::vector<double> sorted = energies;
  std::sort(sorted.begin(), sorted.end());
  // Nearest-rank percentile: energies above it are "very high" and dropped.
  const double pos = energy_percentile / 100.0 * double(sorted.size());
  const size_t rank = size_t(std::clamp(std::ceil(pos) - 1.0, 0.0, double(sorted.size() - 1)));
  const double cutoff = sorted[rank];

  std::vector<int> kept;
  for (size_t i = 0; i < candidates.size(); ++i)
    if (energies[i] <= cutoff) kept.push_back(candidates[i]);
  return kept;
}

}  // namespace warpkit
