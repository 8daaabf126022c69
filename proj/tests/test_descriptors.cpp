#include "warpkit/descriptors.hpp"

#include <doctest.h>

#include <filesystem>

#include "warpkit/errors.hpp"
#include "warpkit/rng.hpp"
#include "warpkit/synth.hpp"

using namespace warpkit;

namespace {

Image random_image(int size, uint64_t seed, int channels = 1) {
  Rng rng(seed);
  Image img(size, size, channels);
  for (float& v : img.data) v = float(rng.uniform());
  // smooth once so gradients are not pure pixel noise
  Image out = img;
  for (int y = 1; y < size - 1; ++y)
    for (int x = 1; x < size - 1; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(x, y, c) = 0.25f * (img.at(x - 1, y, c) + img.at(x + 1, y, c) +
                                   img.at(x, y - 1, c) + img.at(x, y + 1, c));
  return out;
}

KeypointSet grid_points(int size, int stride) {
  Mask full(size, size);
  std::fill(full.data.begin(), full.data.end(), uint8_t(255));
  return sample_foreground_grid(full, stride, "img");
}

}  // namespace

TEST_CASE("constant image produces the uniform unit vector") {
  Image flat(48, 48, 1);
  std::fill(flat.data.begin(), flat.data.end(), 0.5f);
  KeypointSet kps;
  kps.points = {{24, 24}, {10, 30}};
  kps.visibility = {1, 1};
  const DescriptorSet set = extract(flat, kps);
  REQUIRE(set.vectors.rows() == 2);
  const float uniform = float(1.0 / std::sqrt(double(set.vectors.cols())));
  for (long r = 0; r < set.vectors.rows(); ++r)
    for (long c = 0; c < set.vectors.cols(); ++c)
      CHECK(set.vectors(r, c) == doctest::Approx(uniform));
}

TEST_CASE("extraction is deterministic") {
  const Image img = random_image(64, 31);
  const KeypointSet kps = grid_points(64, 8);
  const DescriptorSet a = extract(img, kps);
  const DescriptorSet b = extract(img, kps);
  CHECK(a.vectors == b.vectors);
  CHECK(a.descriptor_id == b.descriptor_id);
}

TEST_CASE("rows are unit norm") {
  const Image img = random_image(64, 32);
  const DescriptorSet set = extract(img, grid_points(64, 8));
  for (long r = 0; r < set.vectors.rows(); ++r)
    CHECK(set.vectors.row(r).norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("descriptor is not rotation invariant") {
  const Image img = random_image(64, 33);
  Image rotated(64, 64, 1);  // 90 degrees clockwise
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) rotated.at(63 - y, x, 0) = img.at(x, y, 0);

  KeypointSet center;
  center.points = {{31, 31}};
  center.visibility = {1};
  const DescriptorSet a = extract(img, center);
  KeypointSet rotated_center;
  rotated_center.points = {{32, 31}};
  rotated_center.visibility = {1};
  const DescriptorSet b = extract(rotated, rotated_center);
  const double d = appearance_distance({a.vectors.row(0).data(), size_t(a.vectors.cols())},
                                       {b.vectors.row(0).data(), size_t(b.vectors.cols())});
  CHECK(d > 0.0);
}

TEST_CASE("appearance distance basics") {
  std::vector<float> a(4, 0.f), b(4, 0.f);
  a[0] = 1.f;
  b[0] = 1.f;
  CHECK(appearance_distance(a, b) == 0.0);
  b[0] = 0.f;
  b[1] = 1.f;
  CHECK(appearance_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
  b = a;
  for (float& v : b) v = -v;
  CHECK(appearance_distance(a, b) == doctest::Approx(2.0));
  std::vector<float> c(5, 0.f);
  CHECK_THROWS_AS(appearance_distance(a, c), DimensionMismatch);
}

TEST_CASE("appearance distance is a metric on random unit rows") {
  Rng rng(34);
  auto unit = [&] {
    std::vector<float> v(16);
    double n = 0;
    for (float& x : v) {
      x = float(rng.normal());
      n += double(x) * x;
    }
    for (float& x : v) x = float(x / std::sqrt(n));
    return v;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = unit(), b = unit(), c = unit();
    CHECK(appearance_distance(a, b) == doctest::Approx(appearance_distance(b, a)));
    CHECK(appearance_distance(a, c) <=
          appearance_distance(a, b) + appearance_distance(b, c) + 1e-12);
  }
}

TEST_CASE("foreground grid sampling counts") {
  Mask full(32, 32);
  std::fill(full.data.begin(), full.data.end(), uint8_t(255));
  CHECK(sample_foreground_grid(full, 8).size() == 16);

  CHECK(sample_foreground_grid(Mask(32, 32), 8).size() == 0);

  Mask half(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 16; ++x) half.set(x, y, true);
  CHECK(sample_foreground_grid(half, 8).size() == 8);
}

TEST_CASE("grid sampling is row-major") {
  Mask full(24, 24);
  std::fill(full.data.begin(), full.data.end(), uint8_t(255));
  const KeypointSet set = sample_foreground_grid(full, 8);
  REQUIRE(set.size() == 9);
  CHECK(set.points[0] == Point2{0, 0});
  CHECK(set.points[1] == Point2{8, 0});
  CHECK(set.points[3] == Point2{0, 8});
}

TEST_CASE("image smaller than a patch is rejected") {
  const Image img = random_image(12, 35);
  KeypointSet kps;
  kps.points = {{6, 6}};
  kps.visibility = {1};
  CHECK_THROWS_AS(extract(img, kps), OutOfBounds);
}

TEST_CASE("keypoints near the border use reflected pixels") {
  const Image img = random_image(40, 36);
  KeypointSet kps;
  kps.points = {{0, 0}, {39, 39}, {0, 39}};
  kps.visibility = {1, 1, 1};
  const DescriptorSet set = extract(img, kps);
  for (long r = 0; r < set.vectors.rows(); ++r)
    CHECK(set.vectors.row(r).norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("descriptor files round-trip bit for bit") {
  const Image img = random_image(64, 37, 3);
  DescriptorSet set = extract(img, grid_points(64, 16));
  set.keypoints.image_id = "img";

  const auto dir = std::filesystem::temp_directory_path() / "warpkit_desc_test";
  std::filesystem::create_directories(dir);
  save_descriptors(dir / "d.wdsc", dir / "d.json", set);
  const DescriptorSet back = load_descriptors(dir / "d.wdsc", dir / "d.json");

  CHECK(back.keypoints.image_id == "img");
  CHECK(back.descriptor_id == set.descriptor_id);
  REQUIRE(back.vectors.rows() == set.vectors.rows());
  CHECK(back.vectors == set.vectors);
  for (size_t i = 0; i < set.keypoints.size(); ++i)
    CHECK(distance(back.keypoints.points[i], set.keypoints.points[i]) == 0.0);
  std::filesystem::remove_all(dir);
}
