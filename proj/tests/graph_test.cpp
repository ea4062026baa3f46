#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "goreloc/graph.hpp"
#include "support.hpp"

using namespace goreloc;
using testsupport::graph_node;
using testsupport::make_graph;

namespace {

Detection det_at(double cx, double cy, double half, int label, double score) {
  return Detection::from_bbox({cx - half, cy - half, cx + half, cy + half}, label, score);
}

ObjectLandmark object_at(const Eigen::Vector3d& position, int label, int categories) {
  ObjectLandmark obj;
  obj.quadric.position = position;
  obj.quadric.semi_axes = {0.2, 0.2, 0.2};
  obj.distribution.p = Eigen::VectorXd::Zero(categories);
  obj.distribution.p[label] = 1.0;
  return obj;
}

// Direct transcription of the descriptor definition: sum the neighbor
// distributions weighted by edge weight, then L2-normalize.
Eigen::VectorXd kernel_by_hand(const SceneGraph& graph, int root) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(graph.node(root).distribution.size());
  for (const GraphEdge& edge : graph.neighbors(root)) {
    sum += edge.weight * graph.node(edge.neighbor).distribution.p;
  }
  const double norm = sum.norm();
  return norm > 0 ? Eigen::VectorXd(sum / norm) : sum;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("detection filter drops low scores") {
  std::vector<Detection> raw = {det_at(100, 100, 20, 0, 0.05)};
  CHECK(filter_detections(raw).empty());
}

TEST_CASE("detection filter keeps the higher score among overlapping boxes") {
  std::vector<Detection> raw = {det_at(100, 100, 20, 0, 0.9), det_at(100, 100, 20, 1, 0.8)};
  const std::vector<Detection> kept = filter_detections(raw);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == doctest::Approx(0.9));
}

TEST_CASE("detection filter keeps disjoint boxes") {
  std::vector<Detection> raw = {det_at(100, 100, 20, 0, 0.9), det_at(400, 300, 20, 1, 0.8)};
  CHECK(filter_detections(raw).size() == 2);
}

TEST_CASE("frame graph links each node to its nearest neighbor") {
  CategorySet cats({"chair"});
  std::vector<Detection> dets = {det_at(0, 100, 5, 0, 0.9), det_at(10, 100, 5, 0, 0.9),
                                 det_at(30, 100, 5, 0, 0.9)};
  const SceneGraph g = build_frame_graph(dets, cats, 1);
  REQUIRE(g.node_count() == 3);
  CHECK(g.kind() == GraphKind::Frame);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));  // symmetric closure: node 2 picked node 1
  CHECK_FALSE(g.has_edge(0, 2));
  for (const GraphEdge& e : g.neighbors(0)) {
    if (e.neighbor == 1) CHECK(e.weight == doctest::Approx(10.0));
  }
  for (const GraphEdge& e : g.neighbors(2)) {
    if (e.neighbor == 1) CHECK(e.weight == doctest::Approx(20.0));
  }
}

TEST_CASE("single detection makes a graph with no edges") {
  CategorySet cats({"chair"});
  std::vector<Detection> dets = {det_at(100, 100, 10, 0, 0.9)};
  const SceneGraph g = build_frame_graph(dets, cats, 3);
  REQUIRE(g.node_count() == 1);
  CHECK(g.neighbors(0).empty());
}

TEST_CASE("k at least n-1 yields the complete graph") {
  CategorySet cats({"chair"});
  std::vector<Detection> dets = {det_at(50, 50, 5, 0, 0.9), det_at(200, 80, 5, 0, 0.9),
                                 det_at(90, 300, 5, 0, 0.9), det_at(400, 400, 5, 0, 0.9)};
  for (int k : {3, 10}) {
    const SceneGraph g = build_frame_graph(dets, cats, k);
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) CHECK(g.has_edge(a, b));
  }
}

TEST_CASE("map graph weights are metric distances") {
  std::vector<ObjectLandmark> objects = {object_at({0, 0, 0}, 0, 2),
                                         object_at({2, 0, 0}, 1, 2)};
  const SceneGraph g = build_map_graph(objects, 3);
  REQUIRE(g.node_count() == 2);
  CHECK(g.kind() == GraphKind::Map);
  REQUIRE(g.neighbors(0).size() == 1);
  CHECK(g.neighbors(0)[0].weight == doctest::Approx(2.0));
}

TEST_CASE("map graph on a unit square keeps sides, not diagonals") {
  std::vector<ObjectLandmark> objects = {object_at({0, 0, 0}, 0, 2), object_at({1, 0, 0}, 0, 2),
                                         object_at({0, 1, 0}, 0, 2), object_at({1, 1, 0}, 0, 2)};
  const SceneGraph g = build_map_graph(objects, 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(1, 3));
  CHECK(g.has_edge(2, 3));
  CHECK_FALSE(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(1, 2));
  for (const GraphEdge& e : g.neighbors(0)) CHECK(e.weight == doctest::Approx(1.0));
}

TEST_CASE("empty inputs build empty graphs") {
  CategorySet cats({"chair"});
  CHECK(build_frame_graph({}, cats, 3).node_count() == 0);
  CHECK(build_map_graph({}, 3).node_count() == 0);
}

TEST_CASE("kernel vector worked example") {
  // Root with two neighbors: one pure chair at weight 10, one half chair half
  // table at weight 20. Accumulated mass (10*1 + 20*0.5, 20*0.5) = (20, 10),
  // normalized to (2, 1)/sqrt(5).
  std::vector<GraphNode> nodes;
  nodes.push_back(graph_node(0, {0, 0, 0}, 2, 0, 1.0));
  nodes.push_back(graph_node(1, {10, 0, 0}, 2, 0, 1.0));
  GraphNode mixed = graph_node(2, {20, 0, 0}, 2, 0, 0.5);
  mixed.distribution.p[1] = 0.5;
  nodes.push_back(mixed);
  const SceneGraph g =
      make_graph(GraphKind::Frame, std::move(nodes), {{0, 1, 10.0}, {0, 2, 20.0}});

  const Eigen::VectorXd v = kernel_vector(g, 0);
  CHECK(v[0] == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(v[1] == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(v.norm() == doctest::Approx(1.0));
}

TEST_CASE("isolated node has a zero kernel vector") {
  std::vector<GraphNode> nodes = {graph_node(0, {0, 0, 0}, 3, 1, 1.0)};
  const SceneGraph g = make_graph(GraphKind::Frame, std::move(nodes), {});
  CHECK(kernel_vector(g, 0).norm() == doctest::Approx(0.0));
}

TEST_CASE("normalization cancels the weight scale for a single neighbor") {
  for (double w : {0.001, 1.0, 5000.0}) {
    std::vector<GraphNode> nodes = {graph_node(0, {0, 0, 0}, 2, 0, 1.0),
                                    graph_node(1, {1, 0, 0}, 2, 1, 0.8)};
    const SceneGraph g = make_graph(GraphKind::Frame, std::move(nodes), {{0, 1, w}});
    const Eigen::VectorXd v = kernel_vector(g, 0);
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("node distance closed forms") {
  Eigen::VectorXd a(2), b(2), c(2), zero(2);
  a << 1, 0;
  b << 0, 1;
  c << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  zero << 0, 0;
  CHECK(node_distance(a, a) == doctest::Approx(0.0));
  CHECK(node_distance(a, b) == doctest::Approx(1.0));
  CHECK(node_distance(c, a) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
  CHECK(node_distance(zero, a) == doctest::Approx(1.0));
  CHECK(node_distance(zero, zero) == doctest::Approx(1.0));
}

TEST_CASE("node distance stays within the unit interval") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a[j] = u(rng);
      b[j] = u(rng);
    }
    const double d = node_distance(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("scaling every edge weight leaves kernel vectors unchanged") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> coord(0.0, 600.0);
  std::uniform_int_distribution<int> label(0, 4);
  std::uniform_real_distribution<double> score(0.2, 1.0);
  CategorySet cats({"a", "b", "c", "d", "e"});
  std::vector<Detection> dets;
  for (int i = 0; i < 12; ++i) dets.push_back(det_at(coord(rng), coord(rng) * 0.75, 4, label(rng), score(rng)));
  const SceneGraph g = build_frame_graph(dets, cats, 3);

  const std::vector<Eigen::VectorXd> base = all_kernel_vectors(g);
  for (double lambda : {0.01, 100.0}) {
    const std::vector<Eigen::VectorXd> scaled = all_kernel_vectors(g.with_scaled_weights(lambda));
    REQUIRE(scaled.size() == base.size());
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK((scaled[i] - base[i]).norm() < 1e-12);
    }
  }
}

TEST_CASE("kernel vectors match a brute-force oracle on random graphs") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> node_count(1, 20);
  std::uniform_real_distribution<double> coord(0.0, 600.0);
  std::uniform_int_distribution<int> label(0, 9);
  std::uniform_real_distribution<double> score(0.15, 1.0);
  std::uniform_int_distribution<int> knn(1, 6);
  CategorySet cats({"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"});

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Detection> dets;
    const int n = node_count(rng);
    for (int i = 0; i < n; ++i)
      dets.push_back(det_at(coord(rng), coord(rng) * 0.75, 3, label(rng), score(rng)));
    const SceneGraph g = build_frame_graph(filter_detections(dets), cats, knn(rng));

    const std::vector<Eigen::VectorXd> all = all_kernel_vectors(g);
    REQUIRE(static_cast<int>(all.size()) == g.node_count());
    for (int i = 0; i < g.node_count(); ++i) {
      CHECK((all[i] - kernel_by_hand(g, i)).norm() < 1e-12);
      CHECK((kernel_vector(g, i) - all[i]).norm() < 1e-12);
    }
  }
}

TEST_CASE("kernel vector ignores adjacency list order") {
  std::vector<GraphNode> nodes;
  for (int i = 0; i < 4; ++i) nodes.push_back(graph_node(i, {double(i), 0, 0}, 3, i % 3, 0.5 + 0.1 * i));
  const SceneGraph fwd =
      make_graph(GraphKind::Frame, nodes, {{0, 1, 3.0}, {0, 2, 7.0}, {0, 3, 1.0}});
  const SceneGraph rev =
      make_graph(GraphKind::Frame, nodes, {{0, 3, 1.0}, {0, 2, 7.0}, {0, 1, 3.0}});
  CHECK((kernel_vector(fwd, 0) - kernel_vector(rev, 0)).norm() < 1e-12);
}

}  // TEST_SUITE
