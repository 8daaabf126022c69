#pragma once

#include <cmath>
#include <vector>

namespace warpkit {

/// A 2D point. Coordinates are either pixels or normalized [-1,1] units,
/// depending on context; all TPS math runs in normalized coordinates and
/// the conversion happens at module boundaries.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) { return std::sqrt(squared_norm(p)); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline double image_diagonal(ImageSize s) {
  return std::sqrt(double(s.width) * s.width + double(s.height) * s.height);
}

/// Pixel (0..w-1, 0..h-1) to normalized [-1,1] coordinates and back.
inline Point2 to_normalized(Point2 px, ImageSize s) {
  return {2.0 * px.x / (s.width - 1) - 1.0, 2.0 * px.y / (s.height - 1) - 1.0};
}

inline Point2 to_pixels(Point2 n, ImageSize s) {
  return {(n.x + 1.0) * 0.5 * (s.width - 1), (n.y + 1.0) * 0.5 * (s.height - 1)};
}

}  // namespace warpkit
