#include "warpkit/exemplar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "warpkit/assignment.hpp"
#include "warpkit/errors.hpp"
#include "warpkit/rng.hpp"

namespace warpkit {

namespace {

// Labels 8-connected components; returns the label raster and writes the
// id of the largest component (0 if the mask is empty).
std::vector<int> label_components(const Mask& mask, int& largest) {
  std::vector<int> labels(mask.data.size(), 0);
  std::vector<size_t> sizes{0};
  int next = 1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.foreground(x, y) || labels[size_t(y) * mask.width + x] != 0) continue;
      size_t count = 0;
      std::queue<std::pair<int, int>> frontier;
      frontier.push({x, y});
      labels[size_t(y) * mask.width + x] = next;
      while (!frontier.empty()) {
        auto [cx, cy] = frontier.front();
        frontier.pop();
        ++count;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
            size_t idx = size_t(ny) * mask.width + nx;
            if (mask.data[idx] != 0 && labels[idx] == 0) {
              labels[idx] = next;
              frontier.push({nx, ny});
            }
          }
      }
      sizes.push_back(count);
      ++next;
    }
  }
  largest = 0;
  size_t best = 0;
  for (int l = 1; l < next; ++l)
    if (sizes[size_t(l)] > best) {
      best = sizes[size_t(l)];
      largest = l;
    }
  return labels;
}

// Moore-neighbor boundary tracing with Jacob's stopping criterion.
std::vector<Point2> trace_boundary(const Mask& mask, const std::vector<int>& labels, int label) {
  // Clockwise neighbor ring starting north (y grows downward).
  static constexpr int kdx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static constexpr int kdy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

  int sx = -1, sy = -1;
  for (int y = 0; y < mask.height && sx < 0; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (labels[size_t(y) * mask.width + x] == label) {
        sx = x;
        sy = y;
        break;
      }
  if (sx < 0) return {};

  auto is_fg = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= mask.width || y >= mask.height) return false;
    return labels[size_t(y) * mask.width + x] == label;
  };

  auto next_move = [&](int cx, int cy, int enter) {
    for (int s = 1; s <= 8; ++s) {
      const int d = (enter + s) % 8;
      if (is_fg(cx + kdx[d], cy + kdy[d])) return d;
    }
    return -1;
  };

  // The scan order guarantees the west neighbor of the start pixel is
  // background, so treat the start as entered from the west.
  int enter = 6;
  int dir = next_move(sx, sy, enter);
  if (dir < 0) return {{double(sx), double(sy)}};  // isolated pixel

  int cx = sx + kdx[dir], cy = sy + kdy[dir];
  enter = (dir + 4) % 8;
  const int fx = cx, fy = cy, fenter = enter;  // state after the first move

  std::vector<Point2> contour;
  const size_t cap = 4 * mask.data.size() + 8;
  while (contour.size() < cap) {
    contour.push_back({double(cx), double(cy)});
    dir = next_move(cx, cy, enter);
    cx += kdx[dir];
    cy += kdy[dir];
    enter = (dir + 4) % 8;
    // full loop: back at the first traced pixel from the same direction
    if (cx == fx && cy == fy && enter == fenter) break;
  }
  return contour;
}

}  // namespace

Silhouette make_silhouette(const Mask& mask) {
  if (mask.foreground_count() == 0) throw DegenerateContour("mask has no foreground");
  int largest = 0;
  const std::vector<int> labels = label_components(mask, largest);

  Silhouette s;
  s.mask = Mask(mask.width, mask.height);
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == largest) s.mask.data[i] = 255;
  s.contour = trace_boundary(mask, labels, largest);
  return s;
}

std::vector<Point2> resample_contour(const std::vector<Point2>& contour, int samples) {
  if (contour.empty() || samples <= 0) return {};
  const int m = int(contour.size());
  std::vector<double> cumulative(size_t(m) + 1, 0.0);
  for (int i = 0; i < m; ++i)
    cumulative[size_t(i) + 1] = cumulative[size_t(i)] + distance(contour[size_t(i)], contour[size_t((i + 1) % m)]);
  const double total = cumulative[size_t(m)];
  if (total == 0.0) return std::vector<Point2>(size_t(samples), contour[0]);

  std::vector<Point2> out;
  out.reserve(size_t(samples));
  int edge = 0;
  for (int j = 0; j < samples; ++j) {
    const double target = total * j / samples;
    while (edge + 1 < m && cumulative[size_t(edge) + 1] <= target) ++edge;
    const double len = cumulative[size_t(edge) + 1] - cumulative[size_t(edge)];
    const double t = len > 0.0 ? (target - cumulative[size_t(edge)]) / len : 0.0;
    const Point2 a = contour[size_t(edge)];
    const Point2 b = contour[size_t((edge + 1) % m)];
    out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
  }
  return out;
}

Eigen::MatrixXd shape_context_descriptors(const std::vector<Point2>& points) {
  constexpr int kRadialBins = 5;
  constexpr int kAngularBins = 12;
  constexpr double kInnerRadius = 0.125;  // relative to mean pairwise distance
  constexpr double kOuterRadius = 2.0;

  const int n = int(points.size());
  Eigen::MatrixXd desc = Eigen::MatrixXd::Zero(n, kRadialBins * kAngularBins);
  if (n < 2) return desc;

  double mean_dist = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) mean_dist += distance(points[size_t(i)], points[size_t(j)]);
  mean_dist /= 0.5 * n * (n - 1);
  if (mean_dist == 0.0) mean_dist = 1.0;

  const double log_inner = std::log(kInnerRadius);
  const double log_span = std::log(kOuterRadius) - log_inner;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Point2 d = points[size_t(j)] - points[size_t(i)];
      const double r = norm(d) / mean_dist;
      int rbin = 0;
      if (r > 0.0)
        rbin = std::clamp(int(std::floor((std::log(r) - log_inner) / log_span * kRadialBins)), 0,
                          kRadialBins - 1);
      const double angle = std::atan2(d.y, d.x);
      const int abin =
          std::clamp(int(std::floor((angle + M_PI) / (2.0 * M_PI) * kAngularBins)), 0,
                     kAngularBins - 1);
      desc(i, rbin * kAngularBins + abin) += 1.0;
    }
    desc.row(i) /= double(n - 1);
  }
  return desc;
}

Eigen::MatrixXd shape_context_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("descriptor widths differ");
  Eigen::MatrixXd cost(a.rows(), b.rows());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < b.rows(); ++j) {
      double c = 0.0;
      for (long k = 0; k < a.cols(); ++k) {
        const double s = a(i, k) + b(j, k);
        if (s > 0.0) {
          const double d = a(i, k) - b(j, k);
          c += d * d / s;
        }
      }
      cost(i, j) = 0.5 * c;
    }
  return cost;
}

std::vector<std::pair<Point2, Point2>> silhouette_correspondences(const Silhouette& a,
                                                                  const Silhouette& b,
                                                                  int samples) {
  if (int(a.contour.size()) < samples || int(b.contour.size()) < samples)
    throw DegenerateContour("contour shorter than requested sample count");

  const std::vector<Point2> pa = resample_contour(a.contour, samples);
  const std::vector<Point2> pb = resample_contour(b.contour, samples);
  const Eigen::MatrixXd cost =
      shape_context_cost(shape_context_descriptors(pa), shape_context_descriptors(pb));
  const std::vector<int> assign = solve_assignment(cost);

  std::vector<std::pair<Point2, Point2>> matches;
  matches.reserve(size_t(samples));
  for (int i = 0; i < samples; ++i) matches.emplace_back(pa[size_t(i)], pb[size_t(assign[size_t(i)])]);
  return matches;
}

ExemplarWarpBank mine_exemplar_bank(const std::vector<std::pair<Silhouette, Silhouette>>& pairs,
                                    double lo, double hi, int samples) {
  if (pairs.size() < 10) throw DataError("exemplar mining needs at least 10 silhouette pairs");
  if (lo < 0.0 || hi > 100.0 || lo > hi) throw DataError("invalid percentile band");

  ExemplarWarpBank bank;
  bank.percentile_lo = lo;
  bank.percentile_hi = hi;
  bank.mined_total = pairs.size();

  std::vector<ExemplarWarpBank::Entry> mined;
  for (const auto& [sa, sb] : pairs) {
    try {
      const auto corr = silhouette_correspondences(sa, sb, samples);
      std::vector<Point2> src, dst;
      src.reserve(corr.size());
      dst.reserve(corr.size());
      for (const auto& [p, q] : corr) {
        src.push_back(to_normalized(p, sa.mask.size()));
        dst.push_back(to_normalized(q, sb.mask.size()));
      }
      const SystemMatrix sys = build_system(src);
      ExemplarWarpBank::Entry entry;
      entry.warp = solve_coefficients(sys, dst);
      entry.energy = warp_energy(entry.warp, sys);
      mined.push_back(std::move(entry));
    } catch (const SingularSystem&) {
      ++bank.failed;
    } catch (const DegenerateContour&) {
      ++bank.failed;
    }
  }

  std::stable_sort(mined.begin(), mined.end(), [](const auto& x, const auto& y) {
    return x.energy.mean_energy < y.energy.mean_energy;
  });

  const size_t n = mined.size();
  for (size_t i = 0; i < n; ++i) {
    const double rank = 100.0 * double(i);
    if (rank >= lo * double(n) && rank < hi * double(n)) bank.warps.push_back(std::move(mined[i]));
  }
  return bank;
}

namespace {

std::vector<size_t> stratified_foreground_sample(const Mask& mask, int n, Rng& rng) {
  std::vector<size_t> foreground;
  int min_x = mask.width, min_y = mask.height, max_x = -1, max_y = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.foreground(x, y)) {
        foreground.push_back(size_t(y) * mask.width + x);
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
  if (foreground.empty()) throw DegenerateContour("mask has no foreground to sample");

  const int cells = std::max(1, int(std::ceil(std::sqrt(double(n)))));
  const double span_x = double(max_x - min_x + 1);
  const double span_y = double(max_y - min_y + 1);
  std::vector<std::vector<size_t>> buckets(size_t(cells) * cells);
  for (size_t idx : foreground) {
    const int x = int(idx % size_t(mask.width));
    const int y = int(idx / size_t(mask.width));
    const int cx = std::min(cells - 1, int((x - min_x) / span_x * cells));
    const int cy = std::min(cells - 1, int((y - min_y) / span_y * cells));
    buckets[size_t(cy) * cells + cx].push_back(idx);
  }

  std::vector<size_t> picks;
  picks.reserve(size_t(n));
  for (const auto& bucket : buckets) {
    if (int(picks.size()) >= n) break;
    if (!bucket.empty()) picks.push_back(bucket[rng.below(bucket.size())]);
  }
  std::vector<char> taken(mask.data.size(), 0);
  for (size_t idx : picks) taken[idx] = 1;
  while (int(picks.size()) < n) {
    size_t idx = foreground[rng.below(foreground.size())];
    for (int attempt = 0; attempt < 64 && taken[idx]; ++attempt)
      idx = foreground[rng.below(foreground.size())];
    taken[idx] = 1;
    picks.push_back(idx);
  }
  return picks;
}

}  // namespace

SyntheticPair generate_pair(const Image& image, const Silhouette& silhouette,
                            const ExemplarWarpBank& bank, int n, bool chromatic,
                            uint64_t rng_seed) {
  if (bank.warps.empty()) throw EmptyBank("exemplar bank is empty");
  if (n < 1) throw DataError("need at least one correspondence");
  if (image.width != silhouette.mask.width || image.height != silhouette.mask.height)
    throw DimensionMismatch("image and mask sizes differ");

  Rng rng(rng_seed);
  SyntheticPair pair;
  pair.warp_index = rng.below(bank.warps.size());
  pair.applied_warp = bank.warps[pair.warp_index].warp;

  if (chromatic) {
    for (int c = 0; c < 3; ++c) pair.chromatic.scale[size_t(c)] = rng.uniform(0.8, 1.2);
    for (int c = 0; c < 3; ++c) pair.chromatic.shift[size_t(c)] = rng.uniform(-0.1, 0.1);
  }

  // Backward mapping: solve the swapped system so each output pixel pulls
  // from the original frame.
  const std::vector<Point2> forward_targets =
      apply_warp(pair.applied_warp, pair.applied_warp.source_points);
  const TpsWarp inverse =
      solve_coefficients(build_system(forward_targets), pair.applied_warp.source_points);

  const ImageSize sz = image.size();
  pair.warped_image = Image(image.width, image.height, image.channels);
  pair.warped_mask = Mask(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const Point2 src_norm = apply_warp(inverse, to_normalized({double(x), double(y)}, sz));
      const Point2 src_px = to_pixels(src_norm, sz);
      for (int c = 0; c < image.channels; ++c)
        pair.warped_image.at(x, y, c) = bilinear_sample(image, src_px.x, src_px.y, c);
      const int mx = int(std::lround(src_px.x));
      const int my = int(std::lround(src_px.y));
      const bool inside = mx >= 0 && my >= 0 && mx < sz.width && my < sz.height;
      pair.warped_mask.set(x, y, inside && silhouette.mask.foreground(mx, my));
    }

  if (chromatic) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        for (int c = 0; c < image.channels; ++c) {
          const size_t ch = image.channels == 1 ? 0 : size_t(c);
          float v = pair.warped_image.at(x, y, c);
          v = float(v * pair.chromatic.scale[ch] + pair.chromatic.shift[ch]);
          pair.warped_image.at(x, y, c) = std::clamp(v, 0.f, 1.f);
        }
  }

  const std::vector<size_t> picks = stratified_foreground_sample(silhouette.mask, n, rng);
  pair.correspondences.reserve(picks.size());
  for (size_t idx : picks) {
    const Point2 src{double(idx % size_t(image.width)), double(idx / size_t(image.width))};
    const Point2 dst_norm = apply_warp(pair.applied_warp, to_normalized(src, sz));
    pair.correspondences.emplace_back(src, to_pixels(dst_norm, sz));
  }
  return pair;
}

}  // namespace warpkit
