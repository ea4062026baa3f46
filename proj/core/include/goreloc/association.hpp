#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "goreloc/geometry.hpp"
#include "goreloc/graph.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

/// Kernel vectors of every map node, grouped by the node's most likely label so
/// a frame node only scans map nodes that could plausibly share its category.
class LabelIndex {
 public:
  struct Entry {
    int node = 0;
    Eigen::VectorXd descriptor;
  };

  LabelIndex() = default;
  explicit LabelIndex(std::vector<std::vector<Entry>> buckets) : buckets_(std::move(buckets)) {}

  /// Entries under a label, sorted by node id; empty for labels with no nodes.
  const std::vector<Entry>& bucket(int label) const;
  int label_count() const { return static_cast<int>(buckets_.size()); }

 private:
  std::vector<std::vector<Entry>> buckets_;
};

/// One frame node's ranked map candidates, closest descriptor first.
struct CandidateList {
  int frame_node = 0;
  std::vector<int> map_nodes;
  std::vector<double> distances;  // parallel to map_nodes; empty when unranked
};

/// Candidate lists for every frame node, indexed by frame node id.
using CandidateSet = std::vector<CandidateList>;

struct Association {
  int frame_node = 0;
  int map_node = 0;
  double reprojection_error_px = 0.0;
  bool inlier = false;
};

struct AssociationSet {
  std::vector<Association> matches;
  int inlier_count() const;
};

struct RansacParams {
  int num = 3;                        // frame nodes per sample
  int max_iter = 50;                  // outer sampling iterations
  double inlier_threshold_px = 40.0;  // center reprojection error bound
  std::uint64_t rng_seed = 0;
};

struct RelocalizationResult {
  PoseSE3 pose;  // map-to-camera, from the winning minimal sample
  AssociationSet associations;
};

/// Draws a value in [0, n) from the generator by rejection, so the result
/// depends only on the raw engine outputs and not on a library's distribution
/// implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

/// Groups map kernel vectors by each node's most likely label. Pass
/// alternative per-node descriptors to reuse the index for baselines.
LabelIndex build_label_index(const SceneGraph& map_graph);
LabelIndex build_label_index(const SceneGraph& map_graph,
                             const std::vector<Eigen::VectorXd>& descriptors);

/// Top-J map candidates for one frame node by descriptor distance within the
/// node's label bucket. Distance ties keep the lower node id first; a bucket
/// with fewer than J entries is returned whole.
CandidateList candidate_set(const SceneGraph& frame_graph, int frame_node,
                            const LabelIndex& index, int top_j = 5);
CandidateList candidate_set(const SceneGraph& frame_graph, int frame_node,
                            const LabelIndex& index, const Eigen::VectorXd& frame_descriptor,
                            int top_j = 5);

/// candidate_set for every frame node.
CandidateSet candidate_set(const SceneGraph& frame_graph, const LabelIndex& index, int top_j = 5);

/// Structure-free baseline: every map node sharing the frame node's label is a
/// candidate, in id order, with no ranking.
CandidateList none_graph_candidates(const SceneGraph& frame_graph, int frame_node,
                                    const SceneGraph& map_graph);
CandidateSet none_graph_candidates(const SceneGraph& frame_graph, const SceneGraph& map_graph);

/// Label histogram of fixed-length random walks from a root, L2-normalized.
/// Each of `walks` walks restarts at the root; a node without neighbors ends
/// its walk early. Deterministic in (seed, root). Isolated roots give the zero
/// vector.
Eigen::VectorXd random_walk_descriptor(const SceneGraph& graph, int root, int steps = 5,
                                       int walks = 100, std::uint64_t seed = 0);

/// Baseline candidate retrieval that ranks same-label map nodes by distance
/// between random-walk descriptors instead of kernel vectors.
CandidateSet random_walk_candidates(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                                    int top_j = 5, int steps = 5, int walks = 100,
                                    std::uint64_t seed = 0);

/// Sample-consensus search over the candidate lists. Each outer iteration
/// draws `num` frame nodes without replacement, enumerates their injective
/// candidate combinations whose map nodes stay within graph distance 2
/// whenever the frame nodes are adjacent, solves the minimal pose from the
/// node anchors, grows a match set greedily by ascending center reprojection
/// error, and keeps the hypothesis with the most inliers (ties keep the first
/// seen). Frame anchors are bbox centers in pixels, map anchors centroids in
/// meters.
RelocalizationResult ransac_relocalize(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                                       const CandidateSet& candidates,
                                       const CameraIntrinsics& intrinsics,
                                       const RansacParams& params = {});

}  // namespace goreloc
