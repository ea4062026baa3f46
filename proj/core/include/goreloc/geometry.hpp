#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "goreloc/errors.hpp"

namespace goreloc {

/// Rigid transform from the map frame to the camera frame: x_cam = R * x_map + t.
struct PoseSE3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static PoseSE3 Identity() { return {}; }

  PoseSE3 inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

/// compose(a, b): apply b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);

Eigen::Vector3d transform_point(const PoseSE3& pose, const Eigen::Vector3d& p);

/// Rotation matrix for an axis-angle vector (angle = norm, axis = direction).
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle);

/// Rotation angle in radians of R (or of the relative rotation a * b^T).
double rotation_angle(const Eigen::Matrix3d& rotation);
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cx < width && cy > 0.0 && cy < height;
  }
};

/// Axis-aligned pixel box, (x_min, y_min) top-left.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  Eigen::Vector2d center() const {
    return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
  }
  BoundingBox clamped(double w, double h) const {
    return {std::clamp(x_min, 0.0, w), std::clamp(y_min, 0.0, h),
            std::clamp(x_max, 0.0, w), std::clamp(y_max, 0.0, h)};
  }
};

double box_iou(const BoundingBox& a, const BoundingBox& b);

/// Ellipse as a 2D Gaussian: the 1-sigma contour of N(center, covariance).
/// Semi-axes are the square roots of the covariance eigenvalues.
struct Ellipse2D {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();

  /// Axis-aligned box tangent to the 1-sigma contour.
  BoundingBox bounding_box() const;
};

/// Bounded quadric in dual form, parameterized by centroid, orientation and semi-axes.
struct DualQuadric {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();

  /// 4x4 symmetric dual-form matrix.
  Eigen::Matrix4d dual_matrix() const;
};

Eigen::Vector2d project_center(const PoseSE3& pose, const CameraIntrinsics& intrinsics,
                               const Eigen::Vector3d& p);

/// Projects the quadric outline through the camera: dual conic C* = P Q* P^T with
/// P = K [R|t], normalized by -C*(2,2) before the center/covariance extraction.
Ellipse2D project_quadric(const DualQuadric& quadric, const PoseSE3& pose,
                          const CameraIntrinsics& intrinsics);

/// Largest ellipse inscribed in the box: semi-axes equal the half-extents.
Ellipse2D inscribed_ellipse(const BoundingBox& bbox);

/// 2-Wasserstein distance between the Gaussians of two ellipses.
double wasserstein2(const Ellipse2D& a, const Ellipse2D& b);

/// Symmetric PSD square root with eigenvalues clamped at 1e-12.
Eigen::Matrix2d symmetric_sqrt(const Eigen::Matrix2d& m);

}  // namespace goreloc
