#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "goreloc/semantics.hpp"

namespace goreloc {

enum class GraphKind { Frame, Map };

struct GraphEdge {
  int neighbor = -1;
  double weight = 0.0;  // pixels for frame graphs, meters for map graphs
};

/// Node ids are positions in the node list. The anchor is the bbox center for frame
/// nodes (z = 0) and the quadric centroid for map nodes.
struct GraphNode {
  int id = -1;
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  CategoryDistribution distribution;
  int payload = -1;  // index into the source detection or object list
};

class SceneGraph {
 public:
  SceneGraph() = default;
  SceneGraph(GraphKind kind, std::vector<GraphNode> nodes,
             std::vector<std::vector<GraphEdge>> adjacency)
      : kind_(kind), nodes_(std::move(nodes)), adjacency_(std::move(adjacency)) {}

  GraphKind kind() const { return kind_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const GraphNode& node(int id) const;
  const std::vector<GraphEdge>& neighbors(int id) const;
  bool has_edge(int a, int b) const;

  /// Copy with every edge weight multiplied by lambda.
  SceneGraph with_scaled_weights(double lambda) const;

 private:
  GraphKind kind_ = GraphKind::Frame;
  std::vector<GraphNode> nodes_;
  std::vector<std::vector<GraphEdge>> adjacency_;
};

/// Drops low-confidence detections and suppresses overlapping boxes, keeping the
/// higher score. Overlap is measured as box IoU.
std::vector<Detection> filter_detections(std::span<const Detection> raw,
                                         double min_score = 0.1, double max_iou = 0.6);

/// KNN graph over bbox centers with pixel-distance weights. Directed picks are
/// symmetrized; equal distances break toward the lower node id.
SceneGraph build_frame_graph(std::span<const Detection> detections, const CategorySet& cats,
                             int k);

/// KNN graph over quadric centroids with meter-distance weights.
SceneGraph build_map_graph(std::span<const ObjectLandmark> objects, int k);

/// Accumulates neighbor distributions weighted by edge weight, L2-normalized.
/// Isolated nodes get the zero vector.
Eigen::VectorXd kernel_vector(const SceneGraph& graph, int root);

std::vector<Eigen::VectorXd> all_kernel_vectors(const SceneGraph& graph);

/// Cosine distance in [0, 1] between non-negative descriptors; 1 if either is zero.
double node_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace goreloc
