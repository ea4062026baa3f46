#include "goreloc/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "goreloc/association.hpp"
#include "goreloc/errors.hpp"

namespace goreloc {

namespace {

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

/// One Gaussian draw per call, always consuming two engine outputs, so the
/// draw sequence is independent of any library distribution state.
double gaussian(std::mt19937_64& rng) {
  const double u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
  return r * std::cos(2.0 * M_PI * u2);
}

/// Camera at `center` aimed at the origin, +z forward, image y pointing down
/// in world z. Returns the camera-in-map pose.
PoseSE3 look_at_origin(const Eigen::Vector3d& center) {
  const Eigen::Vector3d forward = (-center).normalized();
  Eigen::Vector3d world_up(0.0, 0.0, 1.0);
  if (std::abs(forward.dot(world_up)) > 0.999) world_up = Eigen::Vector3d(0.0, 1.0, 0.0);
  const Eigen::Vector3d right = forward.cross(world_up).normalized();
  const Eigen::Vector3d down = forward.cross(right).normalized();
  Eigen::Matrix3d rotation;
  rotation.col(0) = right;
  rotation.col(1) = down;
  rotation.col(2) = forward;
  return {rotation, center};
}

void validate(const SynthConfig& cfg) {
  if (cfg.object_count < 1 || cfg.category_count < 1 || cfg.frame_count < 1)
    throw InvariantViolation("synthetic counts must be at least 1");
  if (cfg.scene_extent_m <= 0.0) throw InvariantViolation("scene extent must be positive");
  if (cfg.noise_center_px < 0.0 || cfg.noise_size_fraction < 0.0)
    throw InvariantViolation("noise sigmas must be non-negative");
  if (cfg.label_flip_probability < 0.0 || cfg.label_flip_probability > 1.0)
    throw InvariantViolation("label flip probability must be in [0, 1]");
  if (!cfg.intrinsics.valid()) throw InvariantViolation("invalid synthetic intrinsics");
}

}  // namespace

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ParseError("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(stream);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "goreloc-synth")
    throw ParseError(path + ": expected a \"goreloc-synth\" file");

  SynthConfig cfg;
  cfg.object_count = doc.value("object_count", cfg.object_count);
  cfg.category_count = doc.value("category_count", cfg.category_count);
  cfg.scene_extent_m = doc.value("scene_extent_m", cfg.scene_extent_m);
  cfg.frame_count = doc.value("frame_count", cfg.frame_count);
  const std::string path_name = doc.value("camera_path", std::string("orbit"));
  if (path_name == "orbit")
    cfg.camera_path = SynthConfig::CameraPath::Orbit;
  else if (path_name == "random")
    cfg.camera_path = SynthConfig::CameraPath::Random;
  else
    throw ParseError(path + ": camera_path must be \"orbit\" or \"random\"");
  if (doc.contains("noise")) {
    const auto& noise = doc["noise"];
    cfg.noise_center_px = noise.value("center_px", cfg.noise_center_px);
    cfg.noise_size_fraction = noise.value("size_fraction", cfg.noise_size_fraction);
    cfg.label_flip_probability =
        noise.value("label_flip_probability", cfg.label_flip_probability);
  }
  cfg.seed = doc.value("seed", cfg.seed);
  if (doc.contains("intrinsics")) {
    const auto& k = doc["intrinsics"];
    cfg.intrinsics.fx = k.value("fx", cfg.intrinsics.fx);
    cfg.intrinsics.fy = k.value("fy", cfg.intrinsics.fy);
    cfg.intrinsics.cx = k.value("cx", cfg.intrinsics.cx);
    cfg.intrinsics.cy = k.value("cy", cfg.intrinsics.cy);
    cfg.intrinsics.width = k.value("width", cfg.intrinsics.width);
    cfg.intrinsics.height = k.value("height", cfg.intrinsics.height);
  }
  try {
    validate(cfg);
  } catch (const InvariantViolation& e) {
    throw ParseError(path + ": " + e.what());
  }
  return cfg;
}

SyntheticScene generate_synthetic(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);

  SyntheticScene scene;
  std::vector<std::string> names;
  names.reserve(config.category_count);
  for (int i = 0; i < config.category_count; ++i) names.push_back("cat_" + std::to_string(i));
  scene.cats = CategorySet(std::move(names));

  const double half = 0.5 * config.scene_extent_m;
  const double min_separation = 0.12 * config.scene_extent_m;
  for (int i = 0; i < config.object_count; ++i) {
    ObjectLandmark object;
    object.id = i;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      object.quadric.position = {uniform_range(rng, -half, half), uniform_range(rng, -half, half),
                                 uniform_range(rng, -half, half)};
      const bool crowded = std::any_of(
          scene.objects.begin(), scene.objects.end(), [&](const ObjectLandmark& other) {
            return (other.quadric.position - object.quadric.position).norm() < min_separation;
          });
      if (!crowded) break;
    }
    // Spheres keep the rendered box-center at the projected centroid to first
    // order, so noiseless scenes stay consistent with center-based solvers.
    const double radius = uniform_range(rng, 0.04, 0.08) * config.scene_extent_m;
    object.quadric.semi_axes = {radius, radius, radius};
    Eigen::Vector4d q(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
    q.normalize();
    object.quadric.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);

    const int label = i % config.category_count;
    object.observations.push_back({0, label, uniform_range(rng, 0.5, 1.0)});
    object.observations.push_back({1, label, uniform_range(rng, 0.5, 1.0)});
    object.distribution = object_distribution(object.observations, scene.cats);
    scene.objects.push_back(std::move(object));
  }

  const double orbit_radius = 2.0 * config.scene_extent_m;
  for (int f = 0; f < config.frame_count; ++f) {
    Eigen::Vector3d center;
    if (config.camera_path == SynthConfig::CameraPath::Orbit) {
      const double angle = 2.0 * M_PI * f / config.frame_count;
      center = {orbit_radius * std::cos(angle), orbit_radius * std::sin(angle),
                0.25 * config.scene_extent_m * std::sin(3.0 * angle)};
    } else {
      Eigen::Vector3d direction(gaussian(rng), gaussian(rng), gaussian(rng));
      while (direction.norm() < 1e-6)
        direction = {gaussian(rng), gaussian(rng), gaussian(rng)};
      center = direction.normalized() * uniform_range(rng, 0.9, 1.1) * orbit_radius;
    }
    const PoseSE3 camera_in_map = look_at_origin(center);
    const PoseSE3 map_to_camera = camera_in_map.inverse();

    FrameDetections frame;
    frame.frame_id = f;
    frame.timestamp = 0.1 * f;
    for (const ObjectLandmark& object : scene.objects) {
      BoundingBox bbox;
      try {
        bbox = project_quadric(object.quadric, map_to_camera, config.intrinsics).bounding_box();
      } catch (const Error&) {
        continue;
      }
      // Boxes that would be cut by the image border shift their center when
      // clamped, so only fully visible outlines become detections.
      if (bbox.x_min < 0.0 || bbox.y_min < 0.0 || bbox.x_max > config.intrinsics.width ||
          bbox.y_max > config.intrinsics.height)
        continue;

      const Eigen::Vector2d center_noise(config.noise_center_px * gaussian(rng),
                                         config.noise_center_px * gaussian(rng));
      const double width_scale =
          std::max(1.0 + config.noise_size_fraction * gaussian(rng), 0.1);
      const double height_scale =
          std::max(1.0 + config.noise_size_fraction * gaussian(rng), 0.1);
      const Eigen::Vector2d box_center = bbox.center() + center_noise;
      const double half_width = 0.5 * bbox.width() * width_scale;
      const double half_height = 0.5 * bbox.height() * height_scale;
      bbox = {box_center.x() - half_width, box_center.y() - half_height,
              box_center.x() + half_width, box_center.y() + half_height};

      int label = mode_label(object.distribution);
      if (config.category_count > 1 && uniform_unit(rng) < config.label_flip_probability) {
        const int offset =
            1 + static_cast<int>(uniform_below(rng, config.category_count - 1));
        label = (label + offset) % config.category_count;
      }
      const double score = uniform_range(rng, 0.5, 1.0);
      frame.detections.push_back(Detection::from_bbox(bbox, label, score));
    }
    scene.frames.push_back(std::move(frame));
    scene.ground_truth.push_back({0.1 * f, camera_in_map});
  }
  return scene;
}

void write_synthetic(const std::string& out_dir, const SynthConfig& config,
                     const SyntheticScene& scene) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  save_map((dir / "map.json").string(), scene.cats, scene.objects);
  save_detections((dir / "detections.json").string(), scene.cats, config.intrinsics.width,
                  config.intrinsics.height, scene.frames);
  save_trajectory((dir / "groundtruth.txt").string(), scene.ground_truth);

  std::ostringstream intrinsics;
  intrinsics << "# fx fy cx cy width height\n";
  intrinsics << config.intrinsics.fx << ' ' << config.intrinsics.fy << ' ' << config.intrinsics.cx
             << ' ' << config.intrinsics.cy << ' ' << config.intrinsics.width << ' '
             << config.intrinsics.height << '\n';
  std::ofstream stream(dir / "intrinsics.txt", std::ios::binary);
  if (!stream) throw ParseError("cannot write " + (dir / "intrinsics.txt").string());
  stream << intrinsics.str();
}

}  // namespace goreloc
