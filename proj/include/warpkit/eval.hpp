#pragma once

#include <array>
#include <string>
#include <vector>

#include "warpkit/descriptors.hpp"
#include "warpkit/matcher.hpp"

namespace warpkit {

enum class Provenance { annotated, pseudo, synthetic };

struct GroundTruthMatches {
  std::vector<std::pair<Point2, Point2>> pairs;  // source in A, target in B (pixels)
  Provenance provenance = Provenance::annotated;
};

struct PrCurve {
  std::vector<std::pair<double, double>> points;  // (recall, precision) along the ranking
  double ap = 0.0;
  double alpha = 0.0;
};

/// Fraction of ground-truth source points whose predicted match lies within
/// alpha * L of the true target, L being the mean diagonal of the two
/// images. Ground-truth points without a prediction count as incorrect.
/// A prediction belongs to a ground-truth point when the match's source
/// keypoint is within `src_tol` pixels of it.
double pck(const MatchSet& matches, const GroundTruthMatches& gt, double alpha, ImageSize size_a,
           ImageSize size_b, double src_tol = 0.5);

/// Precision-recall over the ratio-ranked matches; recall is measured
/// against all ground-truth source points, so the final recall equals the
/// PCK at the same alpha. AP by the trapezoid rule.
PrCurve pr_curve(const MatchSet& matches, const GroundTruthMatches& gt, double alpha,
                 ImageSize size_a, ImageSize size_b, double src_tol = 0.5);

/// Brute-force Delaunay triangulation (small point sets). Triangles are
/// vertex-index triples, each sorted ascending, the list sorted
/// lexicographically. Throws DegenerateTriangulation when every triple is
/// collinear.
std::vector<std::array<int, 3>> delaunay_triangulation(const std::vector<Point2>& points);

/// Barycentric coordinates of p in triangle (a, b, c).
std::array<double, 3> barycentric(Point2 p, Point2 a, Point2 b, Point2 c);

/// Expands sparse part annotations into dense pseudo-ground-truth: each
/// image is triangulated on the parts visible in both, and a dense point of
/// A matches the dense point of B in the same (part-labelled) triangle with
/// the closest barycentric coordinates, accepted below `max_bary_dist`.
GroundTruthMatches expand_pseudo_gt(const KeypointSet& parts_a, const KeypointSet& parts_b,
                                    const KeypointSet& dense_a, const KeypointSet& dense_b,
                                    double max_bary_dist = 0.1);

struct AnnotatedPair {
  KeypointSet parts_a, parts_b;
  ImageSize size_a, size_b;
};

/// Indices of pairs that keep at least `min_shared_parts` mutually visible
/// parts and whose annotation TPS bending energy is not in the top
/// (100 - energy_percentile) percent. Unsolvable pairs are dropped.
std::vector<int> filter_test_pairs(const std::vector<AnnotatedPair>& pairs,
                                   int min_shared_parts = 7, double energy_percentile = 90.0);

}  // namespace warpkit
