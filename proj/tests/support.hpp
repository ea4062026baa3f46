#pragma once

// Builders shared across test suites: random rotations, SPD matrices, small
// hand-assembled graphs, and scratch directories for file round-trips.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "goreloc/geometry.hpp"
#include "goreloc/graph.hpp"
#include "goreloc/semantics.hpp"

namespace testsupport {

inline goreloc::CameraIntrinsics test_camera() {
  return {500.0, 500.0, 320.0, 240.0, 640, 480};
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  if (q.norm() < 1e-9) return Eigen::Matrix3d::Identity();
  return q.normalized().toRotationMatrix();
}

inline Eigen::Matrix2d random_spd(std::mt19937_64& rng, double min_eig = 0.1,
                                  double max_eig = 25.0) {
  std::uniform_real_distribution<double> eig(min_eig, max_eig);
  std::uniform_real_distribution<double> angle(0.0, 3.141592653589793);
  const double a = angle(rng);
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r * Eigen::Vector2d(eig(rng), eig(rng)).asDiagonal() * r.transpose();
}

/// Node whose distribution lives over `categories` entries with `mass` at
/// index `label` (detection-style, unnormalized).
inline goreloc::GraphNode graph_node(int id, const Eigen::Vector3d& anchor, int categories,
                                     int label, double mass) {
  goreloc::GraphNode node;
  node.id = id;
  node.anchor = anchor;
  node.distribution.p = Eigen::VectorXd::Zero(categories);
  node.distribution.p[label] = mass;
  return node;
}

/// Undirected graph from an explicit edge list; adjacency mirrored both ways.
inline goreloc::SceneGraph make_graph(goreloc::GraphKind kind,
                                      std::vector<goreloc::GraphNode> nodes,
                                      const std::vector<std::tuple<int, int, double>>& edges) {
  std::vector<std::vector<goreloc::GraphEdge>> adjacency(nodes.size());
  for (const auto& [a, b, w] : edges) {
    adjacency[a].push_back({b, w});
    adjacency[b].push_back({a, w});
  }
  return goreloc::SceneGraph(kind, std::move(nodes), std::move(adjacency));
}

/// Fresh empty directory under the system temp root, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("goreloc_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
