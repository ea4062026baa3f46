#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "goreloc/eval.hpp"
#include "goreloc/geometry.hpp"
#include "goreloc/io.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

/// Parameters of the synthetic scene generator.
struct SynthConfig {
  int object_count = 30;
  int category_count = 10;
  double scene_extent_m = 6.0;  // side of the cube the objects occupy
  int frame_count = 50;
  enum class CameraPath { Orbit, Random } camera_path = CameraPath::Orbit;
  double noise_center_px = 0.0;       // Gaussian sigma on box centers
  double noise_size_fraction = 0.0;   // Gaussian sigma on relative box size
  double label_flip_probability = 0.0;
  std::uint64_t seed = 0;
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
};

struct SyntheticScene {
  CategorySet cats;
  std::vector<ObjectLandmark> objects;
  std::vector<FrameDetections> frames;
  Trajectory ground_truth;  // camera-in-map, one entry per frame
};

SynthConfig load_synth_config(const std::string& path);

/// Randomly placed ellipsoids observed from a deterministic camera path. Each
/// frame emits one detection per object whose noiseless outline box lies fully
/// inside the image, then applies the configured perturbations; a fixed seed
/// reproduces the scene exactly.
SyntheticScene generate_synthetic(const SynthConfig& config);

/// Writes map.json, detections.json, groundtruth.txt, and intrinsics.txt.
void write_synthetic(const std::string& out_dir, const SynthConfig& config,
                     const SyntheticScene& scene);

}  // namespace goreloc
