#pragma once

#include <string>
#include <utility>
#include <vector>

#include "goreloc/eval.hpp"
#include "goreloc/geometry.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

/// All detections of one camera frame.
struct FrameDetections {
  int frame_id = 0;
  double timestamp = 0.0;  // seconds
  std::vector<Detection> detections;
};

/// Reads a map file: categories plus quadric objects carrying either recorded
/// observations (aggregated into a distribution on load) or an explicit
/// distribution. Malformed content raises ParseError with field context;
/// content violating model invariants raises InvariantViolation.
std::pair<CategorySet, std::vector<ObjectLandmark>> load_map(const std::string& path);

/// Writes a map file that load_map reads back field-identical. Objects with
/// observations are stored as observations, others as distributions.
void save_map(const std::string& path, const CategorySet& cats,
              const std::vector<ObjectLandmark>& objects);

/// Reads per-frame detections. Labels must name categories in `cats`,
/// timestamps must increase strictly, and boxes are clamped to the image
/// bounds declared in the file header.
std::vector<FrameDetections> load_detections(const std::string& path, const CategorySet& cats);

void save_detections(const std::string& path, const CategorySet& cats, int image_width,
                     int image_height, const std::vector<FrameDetections>& frames);

/// Plain-text trajectory, one "timestamp tx ty tz qx qy qz qw" line per pose
/// (camera-in-map), '#' comments allowed. Quaternions must be unit within 1e-6.
Trajectory load_trajectory(const std::string& path);

void save_trajectory(const std::string& path, const Trajectory& trajectory);

}  // namespace goreloc
