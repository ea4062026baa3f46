#pragma once

#include <map>
#include <span>
#include <vector>

#include "goreloc/association.hpp"
#include "goreloc/geometry.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

struct AssociationMetrics {
  double accuracy_percent = 0.0;     // correct predicted pairs / predicted pairs
  double center_distance_px = 0.0;   // mean over predicted pairs visible under the true pose
  double mean_iou = 0.0;             // same averaging set as center_distance_px
  int matched_count = 0;             // predicted pairs that agree with ground truth
  int predicted_count = 0;
  bool empty_prediction = false;     // no predicted pairs; accuracy reported as 0
};

struct PoseMetrics {
  std::map<double, double> success_rate_percent;  // TE threshold (m) -> percent of all frames
  std::map<double, double> te_percentile_m;       // fraction -> mean TE of the best frames
  int frame_count = 0;
  int success_count = 0;
};

/// One relocalization attempt. The pose maps map coordinates into the camera
/// frame; evaluation compares camera centers, so the convention matches saved
/// camera-in-map trajectories after inversion.
struct PoseEstimate {
  int frame_id = 0;
  double timestamp = 0.0;
  bool success = false;
  PoseSE3 pose;
};

struct TrajectoryEntry {
  double timestamp = 0.0;
  PoseSE3 camera_in_map;
};

using Trajectory = std::vector<TrajectoryEntry>;

/// Matches detections to map objects by projecting every object visible under
/// the true pose and greedily pairing by descending box overlap; pairs at or
/// below 0.1 IoU stay unmatched. All returned matches are flagged inliers.
AssociationSet ground_truth_associations(std::span<const Detection> detections,
                                         std::span<const ObjectLandmark> objects,
                                         const PoseSE3& true_pose,
                                         const CameraIntrinsics& intrinsics);

/// Accuracy over predicted inlier pairs, plus mean center distance and mean
/// box IoU of those pairs against the objects projected under the true pose.
AssociationMetrics association_metrics(const AssociationSet& predicted,
                                       const AssociationSet& ground_truth,
                                       std::span<const Detection> detections,
                                       std::span<const ObjectLandmark> objects,
                                       const PoseSE3& true_pose,
                                       const CameraIntrinsics& intrinsics);

/// Translation error per frame against the nearest ground-truth timestamp
/// (gap at most 50 ms, otherwise NoGroundTruth). Failed frames count against
/// every success rate and are excluded from the percentiles; each percentile
/// averages the best ceil(fraction * successes) errors and is omitted when no
/// frame succeeded.
PoseMetrics pose_metrics(std::span<const PoseEstimate> estimates, const Trajectory& ground_truth,
                         std::span<const double> thresholds_m,
                         std::span<const double> fractions);

}  // namespace goreloc
