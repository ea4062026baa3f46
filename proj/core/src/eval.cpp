#include "goreloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "goreloc/errors.hpp"

namespace goreloc {

namespace {

/// Projected outline boxes of all objects under the pose; empty optional-style
/// sentinel (NaN box) for objects out of view.
struct ProjectedObject {
  bool visible = false;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  BoundingBox bbox;
};

std::vector<ProjectedObject> project_objects(std::span<const ObjectLandmark> objects,
                                             const PoseSE3& pose,
                                             const CameraIntrinsics& intrinsics) {
  std::vector<ProjectedObject> projected(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    try {
      const Ellipse2D ellipse = project_quadric(objects[i].quadric, pose, intrinsics);
      projected[i] = {true, ellipse.center, ellipse.bounding_box()};
    } catch (const Error&) {
    }
  }
  return projected;
}

}  // namespace

AssociationSet ground_truth_associations(std::span<const Detection> detections,
                                         std::span<const ObjectLandmark> objects,
                                         const PoseSE3& true_pose,
                                         const CameraIntrinsics& intrinsics) {
  const auto projected = project_objects(objects, true_pose, intrinsics);

  struct Overlap {
    double iou;
    int detection;
    int object;
  };
  std::vector<Overlap> overlaps;
  for (std::size_t d = 0; d < detections.size(); ++d)
    for (std::size_t o = 0; o < objects.size(); ++o) {
      if (!projected[o].visible) continue;
      const double iou = box_iou(detections[d].bbox, projected[o].bbox);
      if (iou > 0.1)
        overlaps.push_back({iou, static_cast<int>(d), static_cast<int>(o)});
    }
  std::sort(overlaps.begin(), overlaps.end(), [](const Overlap& a, const Overlap& b) {
    return std::tie(b.iou, a.detection, a.object) < std::tie(a.iou, b.detection, b.object);
  });

  std::vector<char> det_taken(detections.size(), 0);
  std::vector<char> obj_taken(objects.size(), 0);
  AssociationSet result;
  for (const Overlap& ov : overlaps) {
    if (det_taken[ov.detection] || obj_taken[ov.object]) continue;
    det_taken[ov.detection] = 1;
    obj_taken[ov.object] = 1;
    const double center_err =
        (detections[ov.detection].bbox.center() - projected[ov.object].center).norm();
    result.matches.push_back({ov.detection, ov.object, center_err, true});
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const Association& a, const Association& b) { return a.frame_node < b.frame_node; });
  return result;
}

AssociationMetrics association_metrics(const AssociationSet& predicted,
                                       const AssociationSet& ground_truth,
                                       std::span<const Detection> detections,
                                       std::span<const ObjectLandmark> objects,
                                       const PoseSE3& true_pose,
                                       const CameraIntrinsics& intrinsics) {
  const auto projected = project_objects(objects, true_pose, intrinsics);

  AssociationMetrics metrics;
  double distance_sum = 0.0;
  double iou_sum = 0.0;
  int visible_pairs = 0;
  for (const Association& pred : predicted.matches) {
    if (!pred.inlier) continue;
    ++metrics.predicted_count;
    const bool correct = std::any_of(
        ground_truth.matches.begin(), ground_truth.matches.end(), [&](const Association& gt) {
          return gt.frame_node == pred.frame_node && gt.map_node == pred.map_node;
        });
    if (correct) ++metrics.matched_count;
    if (pred.map_node >= 0 && pred.map_node < static_cast<int>(objects.size()) &&
        projected[pred.map_node].visible && pred.frame_node >= 0 &&
        pred.frame_node < static_cast<int>(detections.size())) {
      const Detection& det = detections[pred.frame_node];
      distance_sum += (det.bbox.center() - projected[pred.map_node].center).norm();
      iou_sum += box_iou(det.bbox, projected[pred.map_node].bbox);
      ++visible_pairs;
    }
  }

  if (metrics.predicted_count == 0) {
    metrics.empty_prediction = true;
  } else {
    metrics.accuracy_percent = 100.0 * metrics.matched_count / metrics.predicted_count;
  }
  if (visible_pairs > 0) {
    metrics.center_distance_px = distance_sum / visible_pairs;
    metrics.mean_iou = iou_sum / visible_pairs;
  }
  return metrics;
}

PoseMetrics pose_metrics(std::span<const PoseEstimate> estimates, const Trajectory& ground_truth,
                         std::span<const double> thresholds_m,
                         std::span<const double> fractions) {
  constexpr double kMaxGapSeconds = 0.05;

  PoseMetrics metrics;
  metrics.frame_count = static_cast<int>(estimates.size());

  std::vector<double> errors;
  for (const PoseEstimate& estimate : estimates) {
    double best_gap = std::numeric_limits<double>::infinity();
    const TrajectoryEntry* nearest = nullptr;
    for (const TrajectoryEntry& entry : ground_truth) {
      const double gap = std::abs(entry.timestamp - estimate.timestamp);
      if (gap < best_gap) {
        best_gap = gap;
        nearest = &entry;
      }
    }
    if (nearest == nullptr || best_gap > kMaxGapSeconds)
      throw NoGroundTruth("no ground-truth pose within 50 ms of an estimate");
    if (!estimate.success) continue;
    const Eigen::Vector3d estimated_center =
        -estimate.pose.rotation.transpose() * estimate.pose.translation;
    errors.push_back((estimated_center - nearest->camera_in_map.translation).norm());
  }
  metrics.success_count = static_cast<int>(errors.size());

  for (double threshold : thresholds_m) {
    const int below = static_cast<int>(
        std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; }));
    metrics.success_rate_percent[threshold] =
        metrics.frame_count > 0 ? 100.0 * below / metrics.frame_count : 0.0;
  }

  std::sort(errors.begin(), errors.end());
  for (double fraction : fractions) {
    if (errors.empty()) continue;
    const int take = std::clamp<int>(
        static_cast<int>(std::ceil(fraction * static_cast<double>(errors.size()))), 1,
        static_cast<int>(errors.size()));
    double sum = 0.0;
    for (int i = 0; i < take; ++i) sum += errors[i];
    metrics.te_percentile_m[fraction] = sum / take;
  }
  return metrics;
}

}  // namespace goreloc
