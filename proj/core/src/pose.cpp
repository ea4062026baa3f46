#include "goreloc/pose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "goreloc/errors.hpp"

namespace goreloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense quartic coefficients, ascending powers. The minimal solver builds its
// polynomial by multiplying the low-degree factors instead of hand-expanded
// closed forms, which keeps the coefficient algebra checkable.
using Poly4 = std::array<double, 5>;
using Poly2 = std::array<double, 3>;

Poly4 poly_mul(const Poly2& x, const Poly2& y) {
  Poly4 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i + j] += x[i] * y[j];
  return r;
}

Poly4 poly_mul(const Poly4& x, const Poly2& y) {
  Poly4 r{};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j)
      if (i + j < 5) r[i + j] += x[i] * y[j];
  return r;
}

double poly_eval(const Poly4& c, double v) {
  double y = 0.0;
  for (int i = 4; i >= 0; --i) y = y * v + c[i];
  return y;
}

double poly_deriv_eval(const Poly4& c, double v) {
  double y = 0.0;
  for (int i = 4; i >= 1; --i) y = y * v + i * c[i];
  return y;
}

std::vector<double> real_roots(const Poly4& coeffs) {
  double max_abs = 0.0;
  for (double c : coeffs) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) return {};

  int degree = 4;
  while (degree > 0 && std::abs(coeffs[degree]) < 1e-12 * max_abs) --degree;
  if (degree == 0) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -coeffs[i] / coeffs[degree];

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<double> roots;
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> z = solver.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real()))) continue;
    double v = z.real();
    for (int it = 0; it < 30; ++it) {
      const double f = poly_eval(coeffs, v);
      const double df = poly_deriv_eval(coeffs, v);
      if (std::abs(df) < 1e-300) break;
      const double step = f / df;
      v -= step;
      if (std::abs(step) < 1e-14 * (1.0 + std::abs(v))) break;
    }
    const bool duplicate = std::any_of(roots.begin(), roots.end(), [v](double r) {
      return std::abs(r - v) < 1e-9 * (1.0 + std::abs(v));
    });
    if (!duplicate) roots.push_back(v);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

Eigen::Vector3d bearing(const CameraIntrinsics& k, const Eigen::Vector2d& pixel) {
  return Eigen::Vector3d((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0).normalized();
}

double reprojection_cost(const PoseSE3& pose, std::span<const Correspondence> corrs,
                         const CameraIntrinsics& k) {
  double cost = 0.0;
  for (const Correspondence& c : corrs) {
    try {
      cost += (project_center(pose, k, c.world_point) - c.image_point).squaredNorm();
    } catch (const PointBehindCamera&) {
      return kInf;
    }
  }
  return cost;
}

double max_reprojection_error(const PoseSE3& pose, std::span<const Correspondence> corrs,
                              const CameraIntrinsics& k) {
  double worst = 0.0;
  for (const Correspondence& c : corrs) {
    try {
      worst = std::max(worst, (project_center(pose, k, c.world_point) - c.image_point).norm());
    } catch (const PointBehindCamera&) {
      return kInf;
    }
  }
  return worst;
}

/// Residuals and their analytic Jacobian in the apply_increment convention.
/// Returns false when a point falls behind the camera.
bool reprojection_jacobian(const PoseSE3& pose, std::span<const Correspondence> corrs,
                           const CameraIntrinsics& k, Eigen::VectorXd& residuals,
                           Eigen::MatrixXd& jacobian) {
  const int n = static_cast<int>(corrs.size());
  residuals.resize(2 * n);
  jacobian.resize(2 * n, 6);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d pc = transform_point(pose, corrs[i].world_point);
    if (pc.z() <= 1e-9) return false;
    const double inv_z = 1.0 / pc.z();
    residuals[2 * i] = k.fx * pc.x() * inv_z + k.cx - corrs[i].image_point.x();
    residuals[2 * i + 1] = k.fy * pc.y() * inv_z + k.cy - corrs[i].image_point.y();

    Eigen::Matrix<double, 2, 3> d_pixel;
    d_pixel << k.fx * inv_z, 0.0, -k.fx * pc.x() * inv_z * inv_z,
        0.0, k.fy * inv_z, -k.fy * pc.y() * inv_z * inv_z;
    Eigen::Matrix<double, 3, 6> d_point;
    d_point.leftCols<3>() << 0.0, pc.z(), -pc.y(),
        -pc.z(), 0.0, pc.x(),
        pc.y(), -pc.x(), 0.0;  // -[pc]x, the left-increment rotation part
    d_point.rightCols<3>() = Eigen::Matrix3d::Identity();
    jacobian.block<2, 6>(2 * i, 0) = d_pixel * d_point;
  }
  return true;
}

/// Damped Gauss-Newton on the center reprojection error. Drives exact-data
/// solutions to machine precision and polishes minimal-solver output.
PoseSE3 polish_reprojection(PoseSE3 pose, std::span<const Correspondence> corrs,
                            const CameraIntrinsics& k, int max_iterations) {
  double cost = reprojection_cost(pose, corrs, k);
  double damping = 1e-12;
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  for (int it = 0; it < max_iterations; ++it) {
    if (!reprojection_jacobian(pose, corrs, k, r, j)) break;
    const Eigen::Matrix<double, 6, 6> h = j.transpose() * j;
    const Vector6d g = j.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<double, 6, 6> a = h;
      a.diagonal().array() += damping * (h.diagonal().array().abs() + 1e-12);
      const Vector6d delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const PoseSE3 trial = apply_increment(pose, delta);
      const double trial_cost = reprojection_cost(trial, corrs, k);
      if (trial_cost < cost) {
        pose = trial;
        cost = trial_cost;
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted || cost < 1e-28) break;
  }
  return pose;
}

bool poses_equal(const PoseSE3& a, const PoseSE3& b) {
  return rotation_angle_between(a.rotation, b.rotation) < 1e-8 &&
         (a.translation - b.translation).norm() < 1e-8 * (1.0 + a.translation.norm());
}

/// Up-to-four pose solutions interpolating three correspondences exactly.
/// Classic three-point resection: with depths s2 = u s1, s3 = v s1, the two
/// law-of-cosines ratios reduce to u = N(v)/D(v) and a quartic in v.
std::vector<PoseSE3> solve_three_point(std::span<const Correspondence> corrs,
                                       const CameraIntrinsics& k) {
  const Eigen::Vector3d f1 = bearing(k, corrs[0].image_point);
  const Eigen::Vector3d f2 = bearing(k, corrs[1].image_point);
  const Eigen::Vector3d f3 = bearing(k, corrs[2].image_point);
  const double a = (corrs[1].world_point - corrs[2].world_point).norm();
  const double b = (corrs[0].world_point - corrs[2].world_point).norm();
  const double c = (corrs[0].world_point - corrs[1].world_point).norm();
  const double cos_a = f2.dot(f3);
  const double cos_b = f1.dot(f3);
  const double cos_c = f1.dot(f2);
  const double p = (a * a) / (b * b);
  const double q = (c * c) / (b * b);

  const Poly2 n_poly{(p - q) + 1.0, -2.0 * (p - q) * cos_b, (p - q) - 1.0};
  const Poly2 d_poly{2.0 * cos_c, -2.0 * cos_a, 0.0};
  const Poly2 g_poly{1.0 - q, 2.0 * q * cos_b, -q};

  const Poly4 d_sq = poly_mul(d_poly, d_poly);
  const Poly4 d_sq_g = poly_mul(d_sq, g_poly);
  const Poly4 n_sq = poly_mul(n_poly, n_poly);
  const Poly4 n_d = poly_mul(n_poly, d_poly);
  Poly4 quartic{};
  for (int i = 0; i < 5; ++i) quartic[i] = d_sq_g[i] + n_sq[i] - 2.0 * cos_c * n_d[i];

  auto eval2 = [](const Poly2& poly, double v) { return poly[0] + v * (poly[1] + v * poly[2]); };

  std::vector<PoseSE3> solutions;
  for (double v : real_roots(quartic)) {
    if (v <= 0.0) continue;
    const double denom = 1.0 + v * v - 2.0 * v * cos_b;
    if (denom <= 1e-12) continue;
    const double s1 = b / std::sqrt(denom);

    std::vector<double> u_values;
    const double d_value = eval2(d_poly, v);
    if (std::abs(d_value) > 1e-8 * (std::abs(2.0 * cos_c) + std::abs(2.0 * cos_a * v) + 1.0)) {
      u_values.push_back(eval2(n_poly, v) / d_value);
    } else {
      // D(v) vanishes; fall back to the quadratic constraint in u directly.
      const double disc = cos_c * cos_c - eval2(g_poly, v);
      if (disc >= 0.0) {
        u_values.push_back(cos_c + std::sqrt(disc));
        u_values.push_back(cos_c - std::sqrt(disc));
      }
    }

    for (double u : u_values) {
      if (u <= 0.0) continue;
      const double s2 = u * s1;
      const double s3 = v * s1;
      // Squaring introduced spurious roots; keep only depth triples that
      // satisfy the original side-length equations.
      const double res_a = s2 * s2 + s3 * s3 - 2.0 * s2 * s3 * cos_a - a * a;
      const double res_c = s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * cos_c - c * c;
      if (std::abs(res_a) > 1e-4 * b * b || std::abs(res_c) > 1e-4 * b * b) continue;

      Eigen::Matrix3d world;
      world << corrs[0].world_point, corrs[1].world_point, corrs[2].world_point;
      Eigen::Matrix3d camera;
      camera << s1 * f1, s2 * f2, s3 * f3;
      const Eigen::Matrix4d t = Eigen::umeyama(world, camera, false);

      PoseSE3 pose{t.topLeftCorner<3, 3>(), t.topRightCorner<3, 1>()};
      pose = polish_reprojection(pose, corrs, k, 15);
      if (max_reprojection_error(pose, corrs, k) > 1e-6) continue;
      const bool duplicate = std::any_of(solutions.begin(), solutions.end(),
                                         [&](const PoseSE3& s) { return poses_equal(s, pose); });
      if (!duplicate) solutions.push_back(pose);
    }
  }
  return solutions;
}

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

PoseSE3 apply_increment(const PoseSE3& pose, const Vector6d& delta) {
  const Eigen::Matrix3d rotation = rotation_from_axis_angle(delta.head<3>());
  return {rotation * pose.rotation, rotation * pose.translation + delta.tail<3>()};
}

std::vector<PoseSE3> pnp_from_centers(std::span<const Correspondence> correspondences,
                                      const CameraIntrinsics& intrinsics) {
  if (!intrinsics.valid()) throw InvariantViolation("invalid camera intrinsics");
  const int n = static_cast<int>(correspondences.size());
  if (n < 3) throw DegenerateConfiguration("need at least three correspondences");

  double scale = 0.0;
  for (const Correspondence& c : correspondences) {
    if (!c.image_point.allFinite() || !c.world_point.allFinite())
      throw InvariantViolation("non-finite correspondence");
    scale = std::max(scale, c.world_point.norm());
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((correspondences[i].world_point - correspondences[j].world_point).norm() <
          1e-9 * (1.0 + scale))
        throw DegenerateConfiguration("coincident world points");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Correspondence& c : correspondences) centroid += c.world_point;
  centroid /= n;
  Eigen::MatrixXd centered(3, n);
  for (int i = 0; i < n; ++i) centered.col(i) = correspondences[i].world_point - centroid;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  if (svd.singularValues()[1] < 1e-9 * (svd.singularValues()[0] + 1e-300))
    throw DegenerateConfiguration("collinear world points");

  if (n == 3) {
    std::vector<PoseSE3> solutions = solve_three_point(correspondences, intrinsics);
    if (solutions.empty()) throw NoSolution("three-point resection found no pose");
    return solutions;
  }

  // Support triple with the widest triangle seeds the solution.
  std::array<int, 3> support{0, 1, 2};
  double best_area = -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int l = j + 1; l < n; ++l) {
        const double area =
            triangle_area(correspondences[i].world_point, correspondences[j].world_point,
                          correspondences[l].world_point);
        if (area > best_area) {
          best_area = area;
          support = {i, j, l};
        }
      }
  const std::array<Correspondence, 3> triple{correspondences[support[0]],
                                             correspondences[support[1]],
                                             correspondences[support[2]]};

  PoseSE3 best;
  double best_cost = kInf;
  for (const PoseSE3& pose : solve_three_point(triple, intrinsics)) {
    const double cost = reprojection_cost(pose, correspondences, intrinsics);
    if (cost < best_cost) {
      best_cost = cost;
      best = pose;
    }
  }
  if (!std::isfinite(best_cost)) throw NoSolution("no support-set pose sees all points");
  return {polish_reprojection(best, correspondences, intrinsics, 50)};
}

namespace {

struct ActiveMatch {
  int detection = 0;
  int object = 0;
  double weight = 0.0;
};

std::vector<ActiveMatch> collect_inlier_matches(const AssociationSet& matches,
                                                std::span<const ObjectLandmark> objects,
                                                std::span<const Detection> detections) {
  std::vector<ActiveMatch> active;
  for (const Association& m : matches.matches) {
    if (!m.inlier) continue;
    if (m.frame_node < 0 || m.frame_node >= static_cast<int>(detections.size()) ||
        m.map_node < 0 || m.map_node >= static_cast<int>(objects.size()))
      throw InvariantViolation("match indexes outside the detection or object lists");
    const Detection& det = detections[m.frame_node];
    const ObjectLandmark& obj = objects[m.map_node];
    if (det.label < 0 || det.label >= obj.distribution.p.size())
      throw InvariantViolation("detection label outside the object distribution");
    active.push_back({m.frame_node, m.map_node, obj.distribution.p[det.label]});
  }
  return active;
}

double match_residual(const ActiveMatch& match, std::span<const ObjectLandmark> objects,
                      std::span<const Detection> detections, const PoseSE3& pose,
                      const CameraIntrinsics& k) {
  return wasserstein2(detections[match.detection].ellipse,
                      project_quadric(objects[match.object].quadric, pose, k));
}

// The transport distance split into center offset and shape mismatch, so that
// its squared norm equals the squared distance itself. The solver linearizes
// these parts separately; folding them into one scalar hides the near-linear
// center terms behind the shape floor and starves the quadratic model.
Eigen::Vector3d match_block(const ActiveMatch& match, std::span<const ObjectLandmark> objects,
                            std::span<const Detection> detections, const PoseSE3& pose,
                            const CameraIntrinsics& k) {
  const Ellipse2D& det = detections[match.detection].ellipse;
  const Ellipse2D proj = project_quadric(objects[match.object].quadric, pose, k);
  const Eigen::Matrix2d root = symmetric_sqrt(det.covariance);
  const Eigen::Matrix2d cross = symmetric_sqrt(root * proj.covariance * root);
  const double trace_term = (det.covariance + proj.covariance - 2.0 * cross).trace();
  const Eigen::Vector2d offset = det.center - proj.center;
  return {offset.x(), offset.y(), std::sqrt(std::max(trace_term, 0.0))};
}

double huber(double r, double scale) {
  if (scale <= 0.0 || r <= scale) return r * r;
  return scale * (2.0 * r - scale);
}

double huber_weight(double r, double scale) {
  if (scale <= 0.0 || r <= scale) return 1.0;
  return scale / r;
}

}  // namespace

double refinement_cost(const AssociationSet& matches, std::span<const ObjectLandmark> objects,
                       std::span<const Detection> detections, const PoseSE3& pose,
                       const CameraIntrinsics& intrinsics) {
  double cost = 0.0;
  for (const ActiveMatch& m : collect_inlier_matches(matches, objects, detections)) {
    const double r = match_residual(m, objects, detections, pose, intrinsics);
    cost += m.weight * r * r;
  }
  return cost;
}

Vector6d refinement_gradient(const AssociationSet& matches,
                             std::span<const ObjectLandmark> objects,
                             std::span<const Detection> detections, const PoseSE3& pose,
                             const CameraIntrinsics& intrinsics, double step) {
  const std::vector<ActiveMatch> active = collect_inlier_matches(matches, objects, detections);
  std::vector<double> base(active.size());
  for (std::size_t i = 0; i < active.size(); ++i)
    base[i] = match_residual(active[i], objects, detections, pose, intrinsics);

  Vector6d gradient = Vector6d::Zero();
  for (int axis = 0; axis < 6; ++axis) {
    Vector6d delta = Vector6d::Zero();
    delta[axis] = step;
    const PoseSE3 forward = apply_increment(pose, delta);
    delta[axis] = -step;
    const PoseSE3 backward = apply_increment(pose, delta);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double rf = match_residual(active[i], objects, detections, forward, intrinsics);
      const double rb = match_residual(active[i], objects, detections, backward, intrinsics);
      gradient[axis] += 2.0 * active[i].weight * base[i] * (rf - rb) / (2.0 * step);
    }
  }
  return gradient;
}

RefinementResult refine_pose(const AssociationSet& matches,
                             std::span<const ObjectLandmark> objects,
                             std::span<const Detection> detections, const PoseSE3& initial_pose,
                             const CameraIntrinsics& intrinsics, const RefinementConfig& config) {
  if (config.max_iterations < 1 || config.initial_damping <= 0.0 ||
      config.cost_tolerance <= 0.0 || config.jacobian_step <= 0.0)
    throw InvariantViolation("refinement configuration out of range");

  std::vector<ActiveMatch> active = collect_inlier_matches(matches, objects, detections);
  if (active.empty()) throw NoInliers("no inlier matches to refine against");

  RefinementResult result;
  result.pose = initial_pose;

  // Matches invisible from the starting pose cannot constrain it.
  std::vector<Eigen::Vector3d> base;
  for (auto it = active.begin(); it != active.end();) {
    try {
      base.push_back(match_block(*it, objects, detections, initial_pose, intrinsics));
      ++it;
    } catch (const Error&) {
      it = active.erase(it);
      ++result.dropped_matches;
    }
  }
  if (active.empty())
    throw DivergedBehindCamera("every matched object is invisible from the starting pose");

  auto cost_of = [&](const std::vector<Eigen::Vector3d>& residuals) {
    double cost = 0.0;
    for (std::size_t i = 0; i < residuals.size(); ++i)
      cost += active[i].weight * huber(residuals[i].norm(), config.robust_loss_scale);
    return cost;
  };
  auto evaluate = [&](const PoseSE3& pose, std::vector<Eigen::Vector3d>& residuals) {
    residuals.resize(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      try {
        residuals[i] = match_block(active[i], objects, detections, pose, intrinsics);
      } catch (const Error&) {
        return false;
      }
    }
    return true;
  };

  double cost = cost_of(base);
  result.initial_cost = cost;
  double damping = config.initial_damping;

  while (result.iterations < config.max_iterations) {
    ++result.iterations;

    // Central-difference Jacobian on the tangent coordinates. A perturbation
    // that hides a match falls back to the other side; a match invisible on
    // both sides is dropped for good.
    Eigen::MatrixXd jacobian(3 * active.size(), 6);
    std::vector<char> drop(active.size(), 0);
    for (int axis = 0; axis < 6; ++axis) {
      Vector6d delta = Vector6d::Zero();
      delta[axis] = config.jacobian_step;
      const PoseSE3 forward = apply_increment(result.pose, delta);
      delta[axis] = -config.jacobian_step;
      const PoseSE3 backward = apply_increment(result.pose, delta);
      for (std::size_t i = 0; i < active.size(); ++i) {
        Eigen::Vector3d rf = Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
        Eigen::Vector3d rb = rf;
        try {
          rf = match_block(active[i], objects, detections, forward, intrinsics);
        } catch (const Error&) {
        }
        try {
          rb = match_block(active[i], objects, detections, backward, intrinsics);
        } catch (const Error&) {
        }
        if (rf.allFinite() && rb.allFinite())
          jacobian.block<3, 1>(3 * i, axis) = (rf - rb) / (2.0 * config.jacobian_step);
        else if (rf.allFinite())
          jacobian.block<3, 1>(3 * i, axis) = (rf - base[i]) / config.jacobian_step;
        else if (rb.allFinite())
          jacobian.block<3, 1>(3 * i, axis) = (base[i] - rb) / config.jacobian_step;
        else
          drop[i] = 1;
      }
    }
    if (std::any_of(drop.begin(), drop.end(), [](char d) { return d != 0; })) {
      std::vector<ActiveMatch> kept;
      std::vector<Eigen::Vector3d> kept_base;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (drop[i]) {
          ++result.dropped_matches;
        } else {
          kept.push_back(active[i]);
          kept_base.push_back(base[i]);
        }
      }
      active = std::move(kept);
      base = std::move(kept_base);
      if (active.empty())
        throw DivergedBehindCamera("every matched object left the view during refinement");
      cost = cost_of(base);
      continue;
    }

    Eigen::VectorXd weighted_residuals(3 * active.size());
    Eigen::MatrixXd weighted_jacobian(3 * active.size(), 6);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double w = active[i].weight * huber_weight(base[i].norm(), config.robust_loss_scale);
      weighted_residuals.segment<3>(3 * i) = w * base[i];
      weighted_jacobian.middleRows<3>(3 * i) = w * jacobian.middleRows<3>(3 * i);
    }
    const Eigen::Matrix<double, 6, 6> h = jacobian.transpose() * weighted_jacobian;
    const Vector6d g = jacobian.transpose() * weighted_residuals;
    const double diag_floor = 1e-12 * std::max(h.diagonal().maxCoeff(), 0.0);

    bool accepted = false;
    double improvement = 0.0;
    for (int attempt = 0; attempt < 15 && damping < 1e15; ++attempt) {
      // Diagonal scaling keeps the step unchanged under a uniform rescaling
      // of the weights, so the minimizer only depends on their ratios.
      Eigen::Matrix<double, 6, 6> a = h;
      a.diagonal() += damping * (h.diagonal().array() + diag_floor).matrix();
      const Vector6d delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const PoseSE3 trial = apply_increment(result.pose, delta);
      std::vector<Eigen::Vector3d> trial_residuals;
      const double trial_cost =
          evaluate(trial, trial_residuals) ? cost_of(trial_residuals) : kInf;
      if (trial_cost < cost) {
        result.pose = trial;
        base = std::move(trial_residuals);
        improvement = cost - trial_cost;
        cost = trial_cost;
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) break;
    if (improvement <= config.cost_tolerance * (cost + improvement)) break;
  }

  result.final_cost = cost;
  return result;
}

}  // namespace goreloc
