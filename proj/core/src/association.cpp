#include "goreloc/association.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>

#include "goreloc/errors.hpp"
#include "goreloc/pose.hpp"

namespace goreloc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t per_root_seed(std::uint64_t seed, int root) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(root) + 1));
}

}  // namespace

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw InvariantViolation("uniform_below needs a positive bound");
  // Rejection below the smallest residue class keeps the draw exactly uniform
  // and independent of any library distribution implementation.
  const std::uint64_t min = (0 - n) % n;
  std::uint64_t x = rng();
  while (x < min) x = rng();
  return x % n;
}

const std::vector<LabelIndex::Entry>& LabelIndex::bucket(int label) const {
  static const std::vector<Entry> empty;
  if (label < 0 || label >= static_cast<int>(buckets_.size())) return empty;
  return buckets_[label];
}

int AssociationSet::inlier_count() const {
  return static_cast<int>(std::count_if(matches.begin(), matches.end(),
                                        [](const Association& a) { return a.inlier; }));
}

LabelIndex build_label_index(const SceneGraph& map_graph) {
  return build_label_index(map_graph, all_kernel_vectors(map_graph));
}

LabelIndex build_label_index(const SceneGraph& map_graph,
                             const std::vector<Eigen::VectorXd>& descriptors) {
  if (static_cast<int>(descriptors.size()) != map_graph.node_count())
    throw InvariantViolation("one descriptor per map node required");
  std::vector<std::vector<LabelIndex::Entry>> buckets;
  if (map_graph.node_count() > 0)
    buckets.resize(static_cast<std::size_t>(map_graph.node(0).distribution.p.size()));
  for (int id = 0; id < map_graph.node_count(); ++id) {
    const int label = mode_label(map_graph.node(id).distribution);
    if (label >= static_cast<int>(buckets.size()))
      buckets.resize(static_cast<std::size_t>(label) + 1);
    buckets[label].push_back({id, descriptors[id]});
  }
  return LabelIndex(std::move(buckets));
}

CandidateList candidate_set(const SceneGraph& frame_graph, int frame_node,
                            const LabelIndex& index, int top_j) {
  return candidate_set(frame_graph, frame_node, index, kernel_vector(frame_graph, frame_node),
                       top_j);
}

CandidateList candidate_set(const SceneGraph& frame_graph, int frame_node,
                            const LabelIndex& index, const Eigen::VectorXd& frame_descriptor,
                            int top_j) {
  const GraphNode& node = frame_graph.node(frame_node);
  const auto& bucket = index.bucket(mode_label(node.distribution));

  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(bucket.size());
  for (const auto& entry : bucket)
    ranked.emplace_back(node_distance(frame_descriptor, entry.descriptor), entry.node);
  std::sort(ranked.begin(), ranked.end());

  CandidateList list;
  list.frame_node = frame_node;
  const std::size_t keep = std::min<std::size_t>(ranked.size(), std::max(top_j, 0));
  list.map_nodes.reserve(keep);
  list.distances.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    list.distances.push_back(ranked[i].first);
    list.map_nodes.push_back(ranked[i].second);
  }
  return list;
}

CandidateSet candidate_set(const SceneGraph& frame_graph, const LabelIndex& index, int top_j) {
  CandidateSet set;
  set.reserve(frame_graph.node_count());
  for (int id = 0; id < frame_graph.node_count(); ++id)
    set.push_back(candidate_set(frame_graph, id, index, top_j));
  return set;
}

CandidateList none_graph_candidates(const SceneGraph& frame_graph, int frame_node,
                                    const SceneGraph& map_graph) {
  const int label = mode_label(frame_graph.node(frame_node).distribution);
  CandidateList list;
  list.frame_node = frame_node;
  for (int id = 0; id < map_graph.node_count(); ++id)
    if (mode_label(map_graph.node(id).distribution) == label) list.map_nodes.push_back(id);
  return list;
}

CandidateSet none_graph_candidates(const SceneGraph& frame_graph, const SceneGraph& map_graph) {
  CandidateSet set;
  set.reserve(frame_graph.node_count());
  for (int id = 0; id < frame_graph.node_count(); ++id)
    set.push_back(none_graph_candidates(frame_graph, id, map_graph));
  return set;
}

Eigen::VectorXd random_walk_descriptor(const SceneGraph& graph, int root, int steps, int walks,
                                       std::uint64_t seed) {
  const GraphNode& origin = graph.node(root);
  Eigen::VectorXd histogram = Eigen::VectorXd::Zero(origin.distribution.p.size());
  std::mt19937_64 rng(per_root_seed(seed, root));
  for (int w = 0; w < walks; ++w) {
    int current = root;
    for (int s = 0; s < steps; ++s) {
      const auto& nbrs = graph.neighbors(current);
      if (nbrs.empty()) break;
      current = nbrs[uniform_below(rng, nbrs.size())].neighbor;
      histogram[mode_label(graph.node(current).distribution)] += 1.0;
    }
  }
  const double norm = histogram.norm();
  if (norm > 0.0) histogram /= norm;
  return histogram;
}

CandidateSet random_walk_candidates(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                                    int top_j, int steps, int walks, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> map_descriptors;
  map_descriptors.reserve(map_graph.node_count());
  for (int id = 0; id < map_graph.node_count(); ++id)
    map_descriptors.push_back(random_walk_descriptor(map_graph, id, steps, walks, seed));
  const LabelIndex index = build_label_index(map_graph, map_descriptors);

  CandidateSet set;
  set.reserve(frame_graph.node_count());
  for (int id = 0; id < frame_graph.node_count(); ++id)
    set.push_back(candidate_set(frame_graph, id, index,
                                random_walk_descriptor(frame_graph, id, steps, walks, seed),
                                top_j));
  return set;
}

namespace {

/// Boolean map-graph reachability within two hops, excluding the trivial
/// self pair only implicitly (combinations are injective anyway).
std::vector<std::vector<char>> two_hop_reachability(const SceneGraph& map_graph) {
  const int n = map_graph.node_count();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int a = 0; a < n; ++a) {
    reach[a][a] = 1;
    for (const auto& e1 : map_graph.neighbors(a)) {
      reach[a][e1.neighbor] = 1;
      for (const auto& e2 : map_graph.neighbors(e1.neighbor)) reach[a][e2.neighbor] = 1;
    }
  }
  return reach;
}

struct Hypothesis {
  PoseSE3 pose;
  AssociationSet matches;
  int inliers = -1;
};

/// Lazily projects map anchors under one pose, remembering failures.
class ProjectionCache {
 public:
  ProjectionCache(const SceneGraph& map_graph, const CameraIntrinsics& intrinsics,
                  const PoseSE3& pose)
      : map_graph_(map_graph),
        intrinsics_(intrinsics),
        pose_(pose),
        projected_(map_graph.node_count(),
                   Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN())),
        attempted_(map_graph.node_count(), 0) {}

  const Eigen::Vector2d& at(int map_node) {
    if (!attempted_[map_node]) {
      attempted_[map_node] = 1;
      try {
        projected_[map_node] =
            project_center(pose_, intrinsics_, map_graph_.node(map_node).anchor);
      } catch (const PointBehindCamera&) {
      }
    }
    return projected_[map_node];
  }

 private:
  const SceneGraph& map_graph_;
  const CameraIntrinsics& intrinsics_;
  const PoseSE3& pose_;
  std::vector<Eigen::Vector2d> projected_;
  std::vector<char> attempted_;
};

struct Pair {
  double error;
  int frame_node;
  int map_node;
  bool operator<(const Pair& o) const {
    return std::tie(error, frame_node, map_node) < std::tie(o.error, o.frame_node, o.map_node);
  }
};

/// Exact inlier count of the greedy assignment under the pose, or nothing if
/// the count provably cannot exceed `floor`. Greedy processing by ascending
/// error means assignments among sub-threshold pairs never depend on the
/// pairs above the threshold, so those pairs alone decide the count; frame
/// nodes lacking any sub-threshold candidate bound what is still reachable.
std::optional<int> count_inliers(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                                 const CandidateSet& candidates, ProjectionCache& cache,
                                 double inlier_threshold_px, int floor, int usable_nodes) {
  std::vector<Pair> close;
  int nodes_with_close = 0;
  int nodes_left = usable_nodes;
  for (const CandidateList& list : candidates) {
    if (list.map_nodes.empty()) continue;
    const Eigen::Vector2d center = frame_graph.node(list.frame_node).anchor.head<2>();
    bool has_close = false;
    for (int map_node : list.map_nodes) {
      const Eigen::Vector2d& p = cache.at(map_node);
      if (!p.allFinite()) continue;
      const double error = (p - center).norm();
      if (error < inlier_threshold_px) {
        close.push_back({error, list.frame_node, map_node});
        has_close = true;
      }
    }
    if (has_close) ++nodes_with_close;
    --nodes_left;
    if (nodes_with_close + nodes_left <= floor) return std::nullopt;
  }

  std::sort(close.begin(), close.end());
  std::vector<char> frame_taken(frame_graph.node_count(), 0);
  std::vector<char> map_taken(map_graph.node_count(), 0);
  int inliers = 0;
  for (const Pair& p : close) {
    if (frame_taken[p.frame_node] || map_taken[p.map_node]) continue;
    frame_taken[p.frame_node] = 1;
    map_taken[p.map_node] = 1;
    ++inliers;
  }
  return inliers;
}

/// Assigns every frame node a candidate greedily by ascending reprojection
/// error under the pose, never reusing a map node. Candidates behind the
/// camera are skipped.
AssociationSet grow_matches(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                            const CandidateSet& candidates, ProjectionCache& cache,
                            double inlier_threshold_px) {
  std::vector<Pair> pairs;
  for (const CandidateList& list : candidates) {
    const Eigen::Vector2d center = frame_graph.node(list.frame_node).anchor.head<2>();
    for (int map_node : list.map_nodes) {
      const Eigen::Vector2d& p = cache.at(map_node);
      if (!p.allFinite()) continue;
      pairs.push_back({(p - center).norm(), list.frame_node, map_node});
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<char> frame_taken(frame_graph.node_count(), 0);
  std::vector<char> map_taken(map_graph.node_count(), 0);
  AssociationSet result;
  for (const Pair& p : pairs) {
    if (frame_taken[p.frame_node] || map_taken[p.map_node]) continue;
    frame_taken[p.frame_node] = 1;
    map_taken[p.map_node] = 1;
    result.matches.push_back(
        {p.frame_node, p.map_node, p.error, p.error < inlier_threshold_px});
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const Association& a, const Association& b) { return a.frame_node < b.frame_node; });
  return result;
}

}  // namespace

RelocalizationResult ransac_relocalize(const SceneGraph& frame_graph, const SceneGraph& map_graph,
                                       const CandidateSet& candidates,
                                       const CameraIntrinsics& intrinsics,
                                       const RansacParams& params) {
  if (params.num < 3 || params.max_iter < 1 || params.inlier_threshold_px <= 0.0)
    throw InvariantViolation("relocalization parameters out of range");
  if (static_cast<int>(candidates.size()) != frame_graph.node_count())
    throw InvariantViolation("one candidate list per frame node required");

  std::vector<int> usable;
  for (const CandidateList& list : candidates)
    if (!list.map_nodes.empty()) usable.push_back(list.frame_node);
  if (static_cast<int>(usable.size()) < params.num)
    throw InsufficientDetections("fewer usable frame nodes than the sample size");

  const auto reach = two_hop_reachability(map_graph);
  std::mt19937_64 rng(params.rng_seed);
  Hypothesis best;
  bool solved_any = false;

  for (int iter = 0; iter < params.max_iter; ++iter) {
    // Partial Fisher-Yates draw of `num` distinct frame nodes. One shared
    // stream keeps iteration t's sample independent of max_iter, so a longer
    // run replays a shorter run's prefix.
    std::vector<int> pool = usable;
    for (int i = 0; i < params.num; ++i) {
      const std::size_t j = i + uniform_below(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    const std::vector<int> sample(pool.begin(), pool.begin() + params.num);

    // A hypothesis matching every usable frame node cannot be beaten, so
    // later iterations only have to keep the sampling stream advancing.
    if (solved_any && best.inliers >= static_cast<int>(usable.size())) continue;

    // Odometer over each sampled node's candidate list.
    std::vector<std::size_t> pick(sample.size(), 0);
    while (true) {
      std::vector<int> map_pick(sample.size());
      for (std::size_t i = 0; i < sample.size(); ++i)
        map_pick[i] = candidates[sample[i]].map_nodes[pick[i]];

      bool feasible = true;
      for (std::size_t i = 0; i < sample.size() && feasible; ++i)
        for (std::size_t j = i + 1; j < sample.size() && feasible; ++j) {
          if (map_pick[i] == map_pick[j]) feasible = false;
          else if (frame_graph.has_edge(sample[i], sample[j]) &&
                   !reach[map_pick[i]][map_pick[j]])
            feasible = false;
        }

      if (feasible) {
        std::vector<Correspondence> corrs(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i) {
          corrs[i].image_point = frame_graph.node(sample[i]).anchor.head<2>();
          corrs[i].world_point = map_graph.node(map_pick[i]).anchor;
        }
        std::vector<PoseSE3> poses;
        try {
          poses = pnp_from_centers(corrs, intrinsics);
        } catch (const DegenerateConfiguration&) {
        } catch (const NoSolution&) {
        }
        for (const PoseSE3& pose : poses) {
          solved_any = true;
          ProjectionCache cache(map_graph, intrinsics, pose);
          const std::optional<int> inliers =
              count_inliers(frame_graph, map_graph, candidates, cache,
                            params.inlier_threshold_px, best.inliers,
                            static_cast<int>(usable.size()));
          if (inliers && *inliers > best.inliers) {
            AssociationSet matches = grow_matches(frame_graph, map_graph, candidates, cache,
                                                  params.inlier_threshold_px);
            best = {pose, std::move(matches), *inliers};
          }
        }
      }

      std::size_t digit = 0;
      while (digit < pick.size()) {
        if (++pick[digit] < candidates[sample[digit]].map_nodes.size()) break;
        pick[digit] = 0;
        ++digit;
      }
      if (digit == pick.size()) break;
    }
  }

  if (!solved_any) throw NoValidPose("no candidate combination produced a pose");
  return {best.pose, std::move(best.matches)};
}

}  // namespace goreloc
