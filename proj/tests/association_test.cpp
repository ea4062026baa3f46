#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "goreloc/association.hpp"
#include "goreloc/graph.hpp"
#include "support.hpp"

using namespace goreloc;
using testsupport::graph_node;
using testsupport::make_graph;
using testsupport::test_camera;

namespace {

// Small world shared by the ransac cases: objects on a grid in front of the
// camera, one detection per object rendered through the true pose.
struct MiniScene {
  CategorySet cats{std::vector<std::string>{"a", "b", "c", "d", "e", "f"}};
  std::vector<ObjectLandmark> objects;
  std::vector<Detection> detections;
  SceneGraph map_graph;
  SceneGraph frame_graph;
  PoseSE3 true_pose;  // world-to-camera

  explicit MiniScene(int count = 6) {
    true_pose.rotation = rotation_from_axis_angle({0.0, 0.12, 0.0});
    true_pose.translation = {0.1, -0.05, 0.2};
    const CameraIntrinsics k = test_camera();
    for (int i = 0; i < count; ++i) {
      ObjectLandmark obj;
      obj.id = i;
      obj.quadric.position = {-1.0 + 0.45 * i, (i % 2 == 0) ? -0.5 : 0.55, 4.0 + 0.3 * (i % 3)};
      obj.quadric.semi_axes = {0.18, 0.18, 0.18};
      obj.distribution.p = Eigen::VectorXd::Zero(6);
      obj.distribution.p[i % 6] = 1.0;
      objects.push_back(obj);

      const Ellipse2D e = project_quadric(obj.quadric, true_pose, k);
      detections.push_back(Detection::from_bbox(e.bounding_box(), i % 6, 0.95));
    }
    map_graph = build_map_graph(objects, 3);
    frame_graph = build_frame_graph(detections, cats, 3);
  }
};

}  // namespace

TEST_SUITE("association") {

TEST_CASE("label index partitions nodes by most likely label") {
  std::vector<GraphNode> nodes = {graph_node(0, {0, 0, 0}, 2, 0, 0.9),
                                  graph_node(1, {5, 0, 0}, 2, 1, 0.8),
                                  graph_node(2, {9, 0, 0}, 2, 0, 0.7)};
  const SceneGraph g =
      make_graph(GraphKind::Map, std::move(nodes), {{0, 1, 5.0}, {1, 2, 4.0}});
  const LabelIndex index = build_label_index(g);
  REQUIRE(index.label_count() == 2);
  REQUIRE(index.bucket(0).size() == 2);
  CHECK(index.bucket(0)[0].node == 0);
  CHECK(index.bucket(0)[1].node == 2);
  REQUIRE(index.bucket(1).size() == 1);
  CHECK(index.bucket(1)[0].node == 1);
}

TEST_CASE("label index files mixed distributions under their mode") {
  // 0.75/0.25 book-vase split sorts into the book bucket.
  GraphNode mixed = graph_node(0, {0, 0, 0}, 2, 0, 0.75);
  mixed.distribution.p[1] = 0.25;
  const SceneGraph g = make_graph(GraphKind::Map, {mixed}, {});
  const LabelIndex index = build_label_index(g);
  CHECK(index.bucket(0).size() == 1);
  CHECK(index.bucket(1).empty());
}

TEST_CASE("label index of an empty graph has empty buckets") {
  const SceneGraph g = make_graph(GraphKind::Map, {}, {});
  const LabelIndex index = build_label_index(g);
  CHECK(index.bucket(0).empty());
  CHECK(index.bucket(7).empty());
}

TEST_CASE("candidate lists are ranked, capped at top j, and label-scoped") {
  MiniScene scene;
  const LabelIndex index = build_label_index(scene.map_graph);

  const CandidateSet all = candidate_set(scene.frame_graph, index, 5);
  REQUIRE(static_cast<int>(all.size()) == scene.frame_graph.node_count());
  for (const CandidateList& list : all) {
    CHECK(list.map_nodes.size() == list.distances.size());
    CHECK(std::is_sorted(list.distances.begin(), list.distances.end()));
    const int frame_label = mode_label(scene.frame_graph.node(list.frame_node).distribution);
    for (int m : list.map_nodes) {
      CHECK(mode_label(scene.map_graph.node(m).distribution) == frame_label);
    }
  }
}

TEST_CASE("a bucket smaller than top j is returned whole") {
  MiniScene scene;  // labels are unique, every bucket has one entry
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateList list = candidate_set(scene.frame_graph, 0, index, 5);
  CHECK(list.map_nodes.size() == 1);
}

TEST_CASE("identical descriptors tie toward lower node ids") {
  // Three map nodes with the same label and byte-identical descriptors; top-2
  // must keep nodes 0 and 1.
  Eigen::VectorXd d(2);
  d << 1, 0;
  std::vector<std::vector<LabelIndex::Entry>> buckets(1);
  buckets[0] = {{0, d}, {1, d}, {2, d}};
  const LabelIndex index{std::move(buckets)};

  std::vector<GraphNode> frame_nodes = {graph_node(0, {0, 0, 0}, 1, 0, 0.9),
                                        graph_node(1, {10, 0, 0}, 1, 0, 0.9)};
  const SceneGraph frame =
      make_graph(GraphKind::Frame, std::move(frame_nodes), {{0, 1, 10.0}});

  const CandidateList list = candidate_set(frame, 0, index, 2);
  REQUIRE(list.map_nodes.size() == 2);
  CHECK(list.map_nodes[0] == 0);
  CHECK(list.map_nodes[1] == 1);
}

TEST_CASE("a label absent from the map yields no candidates") {
  MiniScene scene(4);  // only labels 0..3 present in the map
  const LabelIndex index = build_label_index(scene.map_graph);
  std::vector<GraphNode> frame_nodes = {graph_node(0, {100, 100, 0}, 6, 5, 0.9)};
  const SceneGraph frame = make_graph(GraphKind::Frame, std::move(frame_nodes), {});
  CHECK(candidate_set(frame, 0, index, 5).map_nodes.empty());
}

TEST_CASE("growing j grows candidate lists monotonically up to the label pool") {
  MiniScene scene;
  // Make the labels collide so buckets have depth: everything is label 0.
  for (ObjectLandmark& obj : scene.objects) {
    obj.distribution.p.setZero();
    obj.distribution.p[0] = 1.0;
  }
  for (Detection& det : scene.detections) det.label = 0;
  const SceneGraph map_graph = build_map_graph(scene.objects, 3);
  const SceneGraph frame_graph = build_frame_graph(scene.detections, scene.cats, 3);
  const LabelIndex index = build_label_index(map_graph);

  const CandidateSet none = none_graph_candidates(frame_graph, map_graph);
  CandidateSet prev;
  for (int j = 1; j <= 6; ++j) {
    const CandidateSet cur = candidate_set(frame_graph, index, j);
    for (size_t n = 0; n < cur.size(); ++n) {
      const std::set<int> cur_set(cur[n].map_nodes.begin(), cur[n].map_nodes.end());
      if (!prev.empty()) {
        for (int m : prev[n].map_nodes) CHECK(cur_set.count(m) == 1);
      }
      const std::set<int> pool(none[n].map_nodes.begin(), none[n].map_nodes.end());
      for (int m : cur[n].map_nodes) CHECK(pool.count(m) == 1);
    }
    prev = cur;
  }
}

TEST_CASE("structure-free baseline returns the whole label bucket in id order") {
  std::vector<GraphNode> map_nodes;
  for (int i = 0; i < 7; ++i) map_nodes.push_back(graph_node(i, {double(i), 0, 0}, 2, 0, 1.0));
  SceneGraph map_graph = make_graph(GraphKind::Map, std::move(map_nodes), {});

  std::vector<GraphNode> frame_nodes = {graph_node(0, {50, 50, 0}, 2, 0, 0.9),
                                        graph_node(1, {80, 50, 0}, 2, 1, 0.9)};
  SceneGraph frame_graph = make_graph(GraphKind::Frame, std::move(frame_nodes), {});

  const CandidateList same = none_graph_candidates(frame_graph, 0, map_graph);
  REQUIRE(same.map_nodes.size() == 7);
  CHECK(std::is_sorted(same.map_nodes.begin(), same.map_nodes.end()));
  CHECK(same.distances.empty());

  const CandidateList other = none_graph_candidates(frame_graph, 1, map_graph);
  CHECK(other.map_nodes.empty());
}

TEST_CASE("random walk descriptor of an isolated node is zero") {
  std::vector<GraphNode> nodes = {graph_node(0, {0, 0, 0}, 3, 2, 1.0)};
  const SceneGraph g = make_graph(GraphKind::Frame, std::move(nodes), {});
  CHECK(random_walk_descriptor(g, 0).norm() == doctest::Approx(0.0));
}

TEST_CASE("random walk descriptor on a uniform star is one-hot") {
  // Every walk from the hub bounces between chair-labeled leaves and the hub,
  // so only chair mass ever accumulates from the leaves; the hub's own label
  // contributes on the return steps, so give the hub the same label too.
  std::vector<GraphNode> nodes;
  for (int i = 0; i < 5; ++i) nodes.push_back(graph_node(i, {double(i), 0, 0}, 3, 0, 1.0));
  const SceneGraph g = make_graph(GraphKind::Frame, std::move(nodes),
                                  {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
  const Eigen::VectorXd d = random_walk_descriptor(g, 0);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[1] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(0.0));
}

TEST_CASE("random walk descriptor is deterministic in the seed") {
  MiniScene scene;
  const Eigen::VectorXd a = random_walk_descriptor(scene.map_graph, 2, 5, 100, 42);
  const Eigen::VectorXd b = random_walk_descriptor(scene.map_graph, 2, 5, 100, 42);
  CHECK(a == b);
  const Eigen::VectorXd c = random_walk_descriptor(scene.map_graph, 2, 5, 100, 43);
  CHECK(a.size() == c.size());
}

TEST_CASE("random walk descriptor rejects a bad root") {
  MiniScene scene;
  CHECK_THROWS_AS(random_walk_descriptor(scene.map_graph, 99), UnknownNode);
  CHECK_THROWS_AS(random_walk_descriptor(scene.map_graph, -1), UnknownNode);
}

TEST_CASE("uniform_below stays in range and is reproducible") {
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t x = uniform_below(a, 13);
    CHECK(x < 13);
    CHECK(x == uniform_below(b, 13));
  }
  CHECK_THROWS(uniform_below(a, 0));
}

TEST_CASE("ransac recovers the pose of a clean scene") {
  MiniScene scene;
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateSet candidates = candidate_set(scene.frame_graph, index, 5);
  const RelocalizationResult result = ransac_relocalize(
      scene.frame_graph, scene.map_graph, candidates, test_camera());

  CHECK(result.associations.inlier_count() >= 4);
  CHECK(rotation_angle_between(result.pose.rotation, scene.true_pose.rotation) < 1e-3);
  CHECK((result.pose.translation - scene.true_pose.translation).norm() < 1e-2);
  for (const Association& a : result.associations.matches) {
    if (a.inlier) {
      // every detection was rendered from the identically indexed object
      CHECK(scene.frame_graph.node(a.frame_node).payload ==
            scene.map_graph.node(a.map_node).payload);
    }
  }
}

TEST_CASE("ransac needs at least the minimal sample size") {
  MiniScene scene(2);
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateSet candidates = candidate_set(scene.frame_graph, index, 5);
  CHECK_THROWS_AS(ransac_relocalize(scene.frame_graph, scene.map_graph, candidates,
                                    test_camera()),
                  InsufficientDetections);
}

TEST_CASE("ransac is deterministic for a fixed seed") {
  MiniScene scene;
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateSet candidates = candidate_set(scene.frame_graph, index, 5);

  RansacParams params;
  params.rng_seed = 5;
  const RelocalizationResult r1 =
      ransac_relocalize(scene.frame_graph, scene.map_graph, candidates, test_camera(), params);
  const RelocalizationResult r2 =
      ransac_relocalize(scene.frame_graph, scene.map_graph, candidates, test_camera(), params);

  CHECK(r1.pose.rotation == r2.pose.rotation);
  CHECK(r1.pose.translation == r2.pose.translation);
  REQUIRE(r1.associations.matches.size() == r2.associations.matches.size());
  for (size_t i = 0; i < r1.associations.matches.size(); ++i) {
    CHECK(r1.associations.matches[i].frame_node == r2.associations.matches[i].frame_node);
    CHECK(r1.associations.matches[i].map_node == r2.associations.matches[i].map_node);
    CHECK(r1.associations.matches[i].inlier == r2.associations.matches[i].inlier);
    CHECK(r1.associations.matches[i].reprojection_error_px ==
          r2.associations.matches[i].reprojection_error_px);
  }
}

TEST_CASE("ransac inlier matches are injective both ways") {
  MiniScene scene(8);
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateSet candidates = candidate_set(scene.frame_graph, index, 5);
  const RelocalizationResult result = ransac_relocalize(
      scene.frame_graph, scene.map_graph, candidates, test_camera());

  std::set<int> frames, maps;
  for (const Association& a : result.associations.matches) {
    if (!a.inlier) continue;
    CHECK(frames.insert(a.frame_node).second);
    CHECK(maps.insert(a.map_node).second);
  }
}

TEST_CASE("more iterations never lose inliers") {
  MiniScene scene;
  const LabelIndex index = build_label_index(scene.map_graph);
  const CandidateSet candidates = candidate_set(scene.frame_graph, index, 5);

  RansacParams few, many;
  few.max_iter = 10;
  many.max_iter = 50;
  const int few_inliers =
      ransac_relocalize(scene.frame_graph, scene.map_graph, candidates, test_camera(), few)
          .associations.inlier_count();
  const int many_inliers =
      ransac_relocalize(scene.frame_graph, scene.map_graph, candidates, test_camera(), many)
          .associations.inlier_count();
  CHECK(many_inliers >= few_inliers);
}

TEST_CASE("ransac reports failure when no sample solves") {
  // Three frame nodes all funneled to the same single map node: no injective
  // combination exists, so no pose is ever solved.
  std::vector<GraphNode> frame_nodes = {graph_node(0, {100, 100, 0}, 2, 0, 0.9),
                                        graph_node(1, {300, 120, 0}, 2, 0, 0.9),
                                        graph_node(2, {200, 320, 0}, 2, 0, 0.9)};
  const SceneGraph frame = make_graph(GraphKind::Frame, std::move(frame_nodes),
                                      {{0, 1, 1.0}, {1, 2, 1.0}});
  std::vector<GraphNode> map_nodes = {graph_node(0, {0, 0, 5}, 2, 0, 1.0)};
  const SceneGraph map_graph = make_graph(GraphKind::Map, std::move(map_nodes), {});

  CandidateSet candidates(3);
  for (int i = 0; i < 3; ++i) candidates[i] = {i, {0}, {0.0}};

  CHECK_THROWS_AS(
      ransac_relocalize(frame, map_graph, candidates, test_camera()), NoValidPose);
}

}  // TEST_SUITE
