#include "goreloc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace goreloc {

namespace {

/// KNN edges over node anchors, symmetric closure, no self-loops.
std::vector<std::vector<GraphEdge>> knn_edges(const std::vector<GraphNode>& nodes, int k) {
  const int n = static_cast<int>(nodes.size());
  std::set<std::pair<int, int>> picked;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> by_distance;
    by_distance.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      by_distance.emplace_back((nodes[i].anchor - nodes[j].anchor).norm(), j);
    }
    std::sort(by_distance.begin(), by_distance.end());  // ties toward lower id
    const int take = std::min<int>(k, static_cast<int>(by_distance.size()));
    for (int m = 0; m < take; ++m) {
      const int j = by_distance[m].second;
      picked.emplace(std::min(i, j), std::max(i, j));
    }
  }
  std::vector<std::vector<GraphEdge>> adjacency(n);
  for (const auto& [a, b] : picked) {
    const double w = (nodes[a].anchor - nodes[b].anchor).norm();
    adjacency[a].push_back({b, w});
    adjacency[b].push_back({a, w});
  }
  for (auto& edges : adjacency) {
    std::sort(edges.begin(), edges.end(),
              [](const GraphEdge& x, const GraphEdge& y) { return x.neighbor < y.neighbor; });
  }
  return adjacency;
}

}  // namespace

const GraphNode& SceneGraph::node(int id) const {
  if (id < 0 || id >= node_count()) throw UnknownNode();
  return nodes_[id];
}

const std::vector<GraphEdge>& SceneGraph::neighbors(int id) const {
  if (id < 0 || id >= node_count()) throw UnknownNode();
  return adjacency_[id];
}

bool SceneGraph::has_edge(int a, int b) const {
  if (a < 0 || a >= node_count() || b < 0 || b >= node_count()) return false;
  const auto& edges = adjacency_[a];
  return std::any_of(edges.begin(), edges.end(),
                     [b](const GraphEdge& e) { return e.neighbor == b; });
}

SceneGraph SceneGraph::with_scaled_weights(double lambda) const {
  std::vector<std::vector<GraphEdge>> scaled = adjacency_;
  for (auto& edges : scaled)
    for (auto& e : edges) e.weight *= lambda;
  return SceneGraph(kind_, nodes_, std::move(scaled));
}

std::vector<Detection> filter_detections(std::span<const Detection> raw, double min_score,
                                         double max_iou) {
  std::vector<int> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return raw[a].score > raw[b].score;
  });

  std::vector<Detection> kept;
  for (int idx : order) {
    const Detection& d = raw[idx];
    if (d.score <= min_score) continue;
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (box_iou(d.bbox, k.bbox) > max_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

SceneGraph build_frame_graph(std::span<const Detection> detections, const CategorySet& cats,
                             int k) {
  std::vector<GraphNode> nodes;
  nodes.reserve(detections.size());
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
    GraphNode node;
    node.id = i;
    node.anchor.head<2>() = detections[i].bbox.center();
    node.anchor.z() = 0.0;
    node.distribution = detection_distribution(detections[i], cats);
    node.payload = i;
    nodes.push_back(std::move(node));
  }
  auto adjacency = knn_edges(nodes, k);
  return SceneGraph(GraphKind::Frame, std::move(nodes), std::move(adjacency));
}

SceneGraph build_map_graph(std::span<const ObjectLandmark> objects, int k) {
  std::vector<GraphNode> nodes;
  nodes.reserve(objects.size());
  for (int i = 0; i < static_cast<int>(objects.size()); ++i) {
    GraphNode node;
    node.id = i;
    node.anchor = objects[i].quadric.position;
    node.distribution = objects[i].distribution;
    node.payload = i;
    nodes.push_back(std::move(node));
  }
  auto adjacency = knn_edges(nodes, k);
  return SceneGraph(GraphKind::Map, std::move(nodes), std::move(adjacency));
}

Eigen::VectorXd kernel_vector(const SceneGraph& graph, int root) {
  const GraphNode& root_node = graph.node(root);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(root_node.distribution.size());
  for (const GraphEdge& edge : graph.neighbors(root)) {
    v += edge.weight * graph.node(edge.neighbor).distribution.p;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

std::vector<Eigen::VectorXd> all_kernel_vectors(const SceneGraph& graph) {
  std::vector<Eigen::VectorXd> vectors;
  vectors.reserve(graph.node_count());
  for (int i = 0; i < graph.node_count(); ++i) vectors.push_back(kernel_vector(graph, i));
  return vectors;
}

double node_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cosine = a.dot(b) / (na * nb);
  return std::clamp(1.0 - cosine, 0.0, 1.0);
}

}  // namespace goreloc
