#pragma once

#include <string>
#include <vector>

#include "goreloc/association.hpp"
#include "goreloc/eval.hpp"
#include "goreloc/geometry.hpp"
#include "goreloc/io.hpp"
#include "goreloc/pose.hpp"
#include "goreloc/semantics.hpp"

namespace goreloc {

/// How map candidates are retrieved for each frame node.
enum class RetrievalMethod { KernelGraph, NoneGraph, RandomWalk };

struct RelocConfig {
  int knn_k = 5;   // neighbors per node in both graphs
  int top_j = 5;   // candidates kept per frame node
  RansacParams ransac;
  RefinementConfig refinement;
  RetrievalMethod retrieval = RetrievalMethod::KernelGraph;
  CameraIntrinsics intrinsics;
  double min_detection_score = 0.1;
  double max_detection_iou = 0.6;
  int random_walk_steps = 5;
  int random_walk_count = 100;
};

/// Outcome of one frame. Association indices address the frame's filtered
/// detection list (kept_detections entries) and the map object list.
struct FrameResult {
  int frame_id = 0;
  double timestamp = 0.0;
  bool success = false;
  std::string failure_reason;  // empty on success
  PoseSE3 pose;                // map-to-camera, valid on success
  AssociationSet associations;
  int kept_detections = 0;
  double refinement_initial_cost = 0.0;
  double refinement_final_cost = 0.0;
  int refinement_iterations = 0;
};

/// Accumulated wall-clock cost per pipeline stage, in milliseconds. Kept out
/// of report files so identical inputs produce identical bytes.
struct StageTiming {
  double frame_processing_ms = 0.0;    // detection filtering and ellipse prep
  double graph_generation_ms = 0.0;    // frame graph and kernel vectors
  double subgraph_extraction_ms = 0.0; // candidate retrieval and consensus search
  double refinement_ms = 0.0;
};

struct RunResult {
  std::vector<FrameResult> frames;
  StageTiming timing;
  int failed_frames = 0;
};

/// Relocalizes every frame against the map: filter detections, build the
/// frame graph, retrieve candidates, run the consensus search, refine the
/// winning pose. Per-frame failures are recorded, not thrown.
RunResult run_reloc(const CategorySet& cats, const std::vector<ObjectLandmark>& objects,
                    const std::vector<FrameDetections>& frames, const RelocConfig& config);

/// Report file round-trip. Reports echo the configuration and per-frame
/// results; they contain no timing, so reruns on equal inputs are
/// byte-identical.
void save_report(const std::string& path, const RelocConfig& config, const RunResult& result);

struct LoadedReport {
  RelocConfig config;
  std::vector<FrameResult> frames;
};

LoadedReport load_report(const std::string& path);

/// Pose estimates for metric evaluation, one per frame in the report.
std::vector<PoseEstimate> report_estimates(const LoadedReport& report);

/// Aligned per-stage timing table with per-frame means.
std::string format_timing(const StageTiming& timing, int frame_count);

std::string retrieval_method_name(RetrievalMethod method);
RetrievalMethod retrieval_method_from_name(const std::string& name);

}  // namespace goreloc
