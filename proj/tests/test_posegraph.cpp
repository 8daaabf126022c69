#include "warpkit/posegraph.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "warpkit/errors.hpp"

using namespace warpkit;

namespace {

PoseGraph path_graph(const std::vector<std::string>& ids) {
  nlohmann::json j;
  j["nodes"] = ids;
  j["k"] = 1;
  nlohmann::json edges = nlohmann::json::array();
  for (size_t i = 0; i + 1 < ids.size(); ++i) edges.push_back({ids[i], ids[i + 1], 0.1});
  j["edges"] = std::move(edges);
  return posegraph_from_json(j);
}

Eigen::VectorXd angled(double deg) {
  Eigen::VectorXd v(2);
  v << std::cos(deg * M_PI / 180.0), std::sin(deg * M_PI / 180.0);
  return v;
}

}  // namespace

TEST_CASE("identical descriptors give a complete zero-weight graph") {
  std::map<std::string, Eigen::VectorXd> desc;
  Eigen::VectorXd v(3);
  v << 1, 0, 0;
  desc["a"] = v;
  desc["b"] = v;
  desc["c"] = v;
  const PoseGraph g = build_pose_graph(desc, 1);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(g.adjacency[i].size() == 2);  // triangle after tie-inclusive symmetrization
    for (auto [j, w] : g.adjacency[i]) CHECK(w == doctest::Approx(0.0));
  }
}

TEST_CASE("nearest neighbors follow the cosine ordering") {
  std::map<std::string, Eigen::VectorXd> desc;
  desc["a"] = angled(0);
  desc["b"] = angled(60);
  desc["c"] = angled(180);
  // pairwise cosine distances: ab = 0.5, bc = 1.5, ac = 2
  const PoseGraph g = build_pose_graph(desc, 1);
  const int a = g.index_of("a"), b = g.index_of("b"), c = g.index_of("c");

  auto has_edge = [&](int u, int v) {
    for (auto [n, w] : g.adjacency[size_t(u)])
      if (n == v) return true;
    return false;
  };
  CHECK(has_edge(a, b));
  CHECK(has_edge(b, c));       // c's nearest is b
  CHECK_FALSE(has_edge(a, c));

  for (auto [n, w] : g.adjacency[size_t(a)])
    if (n == b) CHECK(w == doctest::Approx(0.5));
}

TEST_CASE("k of at least N-1 yields the complete graph") {
  std::map<std::string, Eigen::VectorXd> desc;
  desc["a"] = angled(0);
  desc["b"] = angled(20);
  desc["c"] = angled(50);
  desc["d"] = angled(90);
  const PoseGraph g = build_pose_graph(desc, 3);
  for (size_t i = 0; i < 4; ++i) CHECK(g.adjacency[i].size() == 3);
}

TEST_CASE("hop distances on a path") {
  const PoseGraph g = path_graph({"A", "B", "C", "D"});
  CHECK(hop_distance(g, "A", "A") == 0);
  CHECK(hop_distance(g, "A", "B") == 1);
  CHECK(hop_distance(g, "A", "D") == 3);
  CHECK_THROWS_AS(hop_distance(g, "A", "Z"), UnknownNode);
}

TEST_CASE("unreachable nodes report no distance") {
  nlohmann::json j;
  j["nodes"] = {"A", "B", "C"};
  j["k"] = 1;
  j["edges"] = {{"A", "B", 0.2}};
  const PoseGraph g = posegraph_from_json(j);
  CHECK_FALSE(hop_distance(g, "A", "C").has_value());
}

TEST_CASE("hop distance is a metric on the component") {
  const PoseGraph g = path_graph({"A", "B", "C", "D", "E"});
  const std::vector<std::string> ids = g.node_ids;
  for (const auto& x : ids)
    for (const auto& y : ids) {
      const auto d_xy = hop_distance(g, x, y);
      CHECK(d_xy == hop_distance(g, y, x));
      for (const auto& z : ids)
        CHECK(*hop_distance(g, x, z) <= *hop_distance(g, x, y) + *hop_distance(g, y, z));
    }
}

TEST_CASE("pairs within hops on a path") {
  const PoseGraph g = path_graph({"A", "B", "C"});
  const auto one = pairs_within_hops(g, 1);
  CHECK(one == std::vector<std::pair<std::string, std::string>>{{"A", "B"}, {"B", "C"}});
  const auto two = pairs_within_hops(g, 2);
  CHECK(two ==
        std::vector<std::pair<std::string, std::string>>{{"A", "B"}, {"A", "C"}, {"B", "C"}});

  // monotone: pairs(h) is a subset of pairs(h+1)
  for (const auto& p : one) CHECK(std::find(two.begin(), two.end(), p) != two.end());
}

TEST_CASE("complete graph on four nodes has six close pairs") {
  std::map<std::string, Eigen::VectorXd> desc;
  desc["a"] = angled(0);
  desc["b"] = angled(15);
  desc["c"] = angled(40);
  desc["d"] = angled(70);
  const PoseGraph g = build_pose_graph(desc, 3);
  CHECK(pairs_within_hops(g, 1).size() == 6);
}

TEST_CASE("shape descriptor is unit norm and mask-dependent") {
  Mask a(40, 40), b(40, 40);
  for (int y = 10; y < 30; ++y)
    for (int x = 8; x < 32; ++x) a.set(x, y, true);
  for (int y = 5; y < 35; ++y)
    for (int x = 15; x < 25; ++x) b.set(x, y, true);

  const Eigen::VectorXd da = shape_descriptor(a);
  const Eigen::VectorXd db = shape_descriptor(b);
  CHECK(da.norm() == doctest::Approx(1.0));
  CHECK(db.norm() == doctest::Approx(1.0));
  CHECK((da - db).norm() > 0.1);
  CHECK(da == shape_descriptor(a));
}

TEST_CASE("pose graph JSON round trip") {
  std::map<std::string, Eigen::VectorXd> desc;
  desc["a"] = angled(0);
  desc["b"] = angled(25);
  desc["c"] = angled(65);
  const PoseGraph g = build_pose_graph(desc, 2);
  const PoseGraph back = posegraph_from_json(posegraph_to_json(g));
  CHECK(back.node_ids == g.node_ids);
  CHECK(back.k == g.k);
  REQUIRE(back.adjacency.size() == g.adjacency.size());
  for (size_t i = 0; i < g.adjacency.size(); ++i) CHECK(back.adjacency[i] == g.adjacency[i]);
}

TEST_CASE("mismatched descriptor dimensions are rejected") {
  std::map<std::string, Eigen::VectorXd> desc;
  desc["a"] = angled(0);
  desc["b"] = Eigen::VectorXd::Ones(5).normalized();
  CHECK_THROWS_AS(build_pose_graph(desc, 1), DimensionMismatch);
}
