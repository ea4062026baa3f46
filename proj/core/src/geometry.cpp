#include "goreloc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace goreloc {

namespace {

constexpr double kMinDepth = 1e-6;
constexpr double kEigClamp = 1e-12;

bool symmetric_within(const Eigen::Matrix2d& m, double tol) {
  return std::abs(m(0, 1) - m(1, 0)) <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

void require_spd(const Eigen::Matrix2d& m, const char* who) {
  if (!symmetric_within(m, 1e-9)) throw DegenerateConic(std::string(who) + ": covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw DegenerateConic(std::string(who) + ": covariance not positive-definite");
}

}  // namespace

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Eigen::Vector3d transform_point(const PoseSE3& pose, const Eigen::Vector3d& p) {
  return pose.rotation * p + pose.translation;
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-14) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

double rotation_angle(const Eigen::Matrix3d& rotation) {
  const double c = std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return rotation_angle(a * b.transpose());
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox Ellipse2D::bounding_box() const {
  // AABB half-extents of the 1-sigma contour are sqrt of the diagonal entries.
  const double hx = std::sqrt(std::max(covariance(0, 0), 0.0));
  const double hy = std::sqrt(std::max(covariance(1, 1), 0.0));
  return {center.x() - hx, center.y() - hy, center.x() + hx, center.y() + hy};
}

Eigen::Matrix4d DualQuadric::dual_matrix() const {
  const Eigen::Matrix3d r = orientation.normalized().toRotationMatrix();
  const Eigen::Matrix3d shape =
      r * semi_axes.cwiseProduct(semi_axes).asDiagonal() * r.transpose();
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  q.topLeftCorner<3, 3>() = shape - position * position.transpose();
  q.topRightCorner<3, 1>() = -position;
  q.bottomLeftCorner<1, 3>() = -position.transpose();
  q(3, 3) = -1.0;
  return q;
}

Eigen::Vector2d project_center(const PoseSE3& pose, const CameraIntrinsics& intrinsics,
                               const Eigen::Vector3d& p) {
  const Eigen::Vector3d c = transform_point(pose, p);
  if (c.z() <= kMinDepth) throw PointBehindCamera();
  return {intrinsics.fx * c.x() / c.z() + intrinsics.cx,
          intrinsics.fy * c.y() / c.z() + intrinsics.cy};
}

Ellipse2D project_quadric(const DualQuadric& quadric, const PoseSE3& pose,
                          const CameraIntrinsics& intrinsics) {
  const Eigen::Vector3d centroid_cam = transform_point(pose, quadric.position);
  if (centroid_cam.z() <= kMinDepth) throw PointBehindCamera();

  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = intrinsics.fx;
  k(1, 1) = intrinsics.fy;
  k(0, 2) = intrinsics.cx;
  k(1, 2) = intrinsics.cy;

  Eigen::Matrix<double, 3, 4> projection;
  projection.leftCols<3>() = pose.rotation;
  projection.rightCols<1>() = pose.translation;
  projection = k * projection;

  const Eigen::Matrix3d conic = projection * quadric.dual_matrix() * projection.transpose();
  const double scale = -conic(2, 2);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DegenerateConic("projected conic not bounded");
  const Eigen::Matrix3d c = conic / scale;

  // c == [[Sigma - mu mu^T, -mu], [-mu^T, -1]] up to numerical symmetry.
  Ellipse2D ellipse;
  ellipse.center = -0.5 * (c.topRightCorner<2, 1>() + c.bottomLeftCorner<1, 2>().transpose());
  Eigen::Matrix2d sigma =
      c.topLeftCorner<2, 2>() + ellipse.center * ellipse.center.transpose();
  sigma = 0.5 * (sigma + sigma.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sigma);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw DegenerateConic("extracted covariance not positive-definite");
  ellipse.covariance = sigma;
  return ellipse;
}

Ellipse2D inscribed_ellipse(const BoundingBox& bbox) {
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) throw EmptyBox();
  Ellipse2D ellipse;
  ellipse.center = bbox.center();
  ellipse.covariance = Eigen::Vector2d(0.25 * bbox.width() * bbox.width(),
                                       0.25 * bbox.height() * bbox.height())
                           .asDiagonal();
  return ellipse;
}

Eigen::Matrix2d symmetric_sqrt(const Eigen::Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
  const Eigen::Vector2d clamped = eig.eigenvalues().cwiseMax(kEigClamp);
  return eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

double wasserstein2(const Ellipse2D& a, const Ellipse2D& b) {
  require_spd(a.covariance, "wasserstein2");
  require_spd(b.covariance, "wasserstein2");

  const Eigen::Matrix2d root_a = symmetric_sqrt(a.covariance);
  const Eigen::Matrix2d cross = symmetric_sqrt(root_a * b.covariance * root_a);
  const double trace_term =
      (a.covariance + b.covariance - 2.0 * cross).trace();
  const double squared = (a.center - b.center).squaredNorm() + std::max(trace_term, 0.0);
  return std::sqrt(squared);
}

}  // namespace goreloc
