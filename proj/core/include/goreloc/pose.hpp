#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "goreloc/association.hpp"
#include "goreloc/geometry.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct Correspondence {
  Eigen::Vector2d image_point;  // pixels
  Eigen::Vector3d world_point;  // meters
};

struct RefinementConfig {
  int max_iterations = 20;
  double initial_damping = 1e-3;
  double cost_tolerance = 1e-8;   // stop when an accepted step decreases cost by less
  double jacobian_step = 1e-6;    // central-difference step on the tangent coordinates
  double robust_loss_scale = 0.0; // pixels; <= 0 disables the robust loss
};

struct RefinementResult {
  PoseSE3 pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  int dropped_matches = 0;  // matches whose quadric left the frustum
};

/// Left-multiplicative 6-DoF update: delta = [axis-angle; translation].
PoseSE3 apply_increment(const PoseSE3& pose, const Vector6d& delta);

/// Minimal-solver pose estimation from center correspondences. Exactly three
/// points give the up-to-four minimal solutions; four or more give one solution
/// polished over all points. Every returned pose maps the world points in front
/// of the camera and reproduces the image points on noiseless input.
std::vector<PoseSE3> pnp_from_centers(std::span<const Correspondence> correspondences,
                                      const CameraIntrinsics& intrinsics);

/// Weighted squared Wasserstein alignment cost of the inlier matches at pose T.
/// Each residual is the distance between the detection ellipse and the projected
/// quadric; the weight is the object's probability mass at the detection label.
double refinement_cost(const AssociationSet& matches, std::span<const ObjectLandmark> objects,
                       std::span<const Detection> detections, const PoseSE3& pose,
                       const CameraIntrinsics& intrinsics);

/// Gradient of refinement_cost in the apply_increment tangent convention,
/// assembled from central differences of the residual vector.
Vector6d refinement_gradient(const AssociationSet& matches,
                             std::span<const ObjectLandmark> objects,
                             std::span<const Detection> detections, const PoseSE3& pose,
                             const CameraIntrinsics& intrinsics, double step = 1e-6);

/// Damped least-squares descent on the alignment cost over the 6-DoF pose.
RefinementResult refine_pose(const AssociationSet& matches,
                             std::span<const ObjectLandmark> objects,
                             std::span<const Detection> detections, const PoseSE3& initial_pose,
                             const CameraIntrinsics& intrinsics,
                             const RefinementConfig& config = {});

}  // namespace goreloc
