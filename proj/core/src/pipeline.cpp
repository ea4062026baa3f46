#include "goreloc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "goreloc/errors.hpp"
#include "goreloc/graph.hpp"

namespace goreloc {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt + 0x9E3779B97F4A7C15ull);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Json pose_to_json(const PoseSE3& pose) {
  const Eigen::Quaterniond q(pose.rotation);
  return Json{{"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}},
              {"translation", {pose.translation.x(), pose.translation.y(),
                               pose.translation.z()}}};
}

PoseSE3 pose_from_json(const Json& node, const std::string& context) {
  if (!node.contains("rotation_wxyz") || node["rotation_wxyz"].size() != 4 ||
      !node.contains("translation") || node["translation"].size() != 3)
    throw ParseError(context + ": malformed pose");
  const auto& r = node["rotation_wxyz"];
  const auto& t = node["translation"];
  const Eigen::Quaterniond q(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                             r[3].get<double>());
  if (std::abs(q.norm() - 1.0) > 1e-6)
    throw ParseError(context + ": pose quaternion is not unit length");
  return {q.normalized().toRotationMatrix(),
          {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()}};
}

}  // namespace

std::string retrieval_method_name(RetrievalMethod method) {
  switch (method) {
    case RetrievalMethod::KernelGraph: return "kernel-graph";
    case RetrievalMethod::NoneGraph: return "none-graph";
    case RetrievalMethod::RandomWalk: return "random-walk";
  }
  throw InvariantViolation("unhandled retrieval method");
}

RetrievalMethod retrieval_method_from_name(const std::string& name) {
  if (name == "kernel-graph") return RetrievalMethod::KernelGraph;
  if (name == "none-graph") return RetrievalMethod::NoneGraph;
  if (name == "random-walk") return RetrievalMethod::RandomWalk;
  throw ParseError("unknown retrieval method \"" + name + "\"");
}

RunResult run_reloc(const CategorySet& cats, const std::vector<ObjectLandmark>& objects,
                    const std::vector<FrameDetections>& frames, const RelocConfig& config) {
  if (!config.intrinsics.valid()) throw InvariantViolation("invalid camera intrinsics");

  const SceneGraph map_graph = build_map_graph(objects, config.knn_k);
  const LabelIndex label_index = build_label_index(map_graph);

  RunResult run;
  for (const FrameDetections& frame : frames) {
    FrameResult result;
    result.frame_id = frame.frame_id;
    result.timestamp = frame.timestamp;

    try {
      const auto t_filter = Clock::now();
      const std::vector<Detection> kept = filter_detections(
          frame.detections, config.min_detection_score, config.max_detection_iou);
      result.kept_detections = static_cast<int>(kept.size());
      run.timing.frame_processing_ms += ms_since(t_filter);

      const auto t_graph = Clock::now();
      const SceneGraph frame_graph = build_frame_graph(kept, cats, config.knn_k);
      std::vector<Eigen::VectorXd> kernels;
      if (config.retrieval == RetrievalMethod::KernelGraph)
        kernels = all_kernel_vectors(frame_graph);
      run.timing.graph_generation_ms += ms_since(t_graph);

      const auto t_candidates = Clock::now();
      CandidateSet candidates;
      switch (config.retrieval) {
        case RetrievalMethod::KernelGraph:
          candidates.reserve(frame_graph.node_count());
          for (int id = 0; id < frame_graph.node_count(); ++id)
            candidates.push_back(
                candidate_set(frame_graph, id, label_index, kernels[id], config.top_j));
          break;
        case RetrievalMethod::NoneGraph:
          candidates = none_graph_candidates(frame_graph, map_graph);
          break;
        case RetrievalMethod::RandomWalk:
          candidates = random_walk_candidates(frame_graph, map_graph, config.top_j,
                                              config.random_walk_steps, config.random_walk_count,
                                              config.ransac.rng_seed);
          break;
      }

      RansacParams params = config.ransac;
      params.rng_seed = mix_seed(config.ransac.rng_seed,
                                 static_cast<std::uint64_t>(frame.frame_id));
      RelocalizationResult initial =
          ransac_relocalize(frame_graph, map_graph, candidates, config.intrinsics, params);
      run.timing.subgraph_extraction_ms += ms_since(t_candidates);
      if (initial.associations.inlier_count() == 0) throw NoInliers();

      const auto t_refine = Clock::now();
      const RefinementResult refined =
          refine_pose(initial.associations, objects, kept, initial.pose, config.intrinsics,
                      config.refinement);
      run.timing.refinement_ms += ms_since(t_refine);

      result.success = true;
      result.pose = refined.pose;
      result.associations = std::move(initial.associations);
      result.refinement_initial_cost = refined.initial_cost;
      result.refinement_final_cost = refined.final_cost;
      result.refinement_iterations = refined.iterations;
    } catch (const Error& e) {
      result.success = false;
      result.failure_reason = e.what();
      result.associations = AssociationSet{};
      ++run.failed_frames;
    }
    run.frames.push_back(std::move(result));
  }
  return run;
}

void save_report(const std::string& path, const RelocConfig& config, const RunResult& result) {
  Json doc;
  doc["format"] = "goreloc-report";
  doc["version"] = 1;
  doc["config"] = Json{
      {"knn_k", config.knn_k},
      {"top_j", config.top_j},
      {"ransac", Json{{"num", config.ransac.num},
                      {"max_iter", config.ransac.max_iter},
                      {"inlier_threshold_px", config.ransac.inlier_threshold_px},
                      {"rng_seed", config.ransac.rng_seed}}},
      {"retrieval", retrieval_method_name(config.retrieval)},
      {"intrinsics", Json{{"fx", config.intrinsics.fx},
                          {"fy", config.intrinsics.fy},
                          {"cx", config.intrinsics.cx},
                          {"cy", config.intrinsics.cy},
                          {"width", config.intrinsics.width},
                          {"height", config.intrinsics.height}}},
      {"min_detection_score", config.min_detection_score},
      {"max_detection_iou", config.max_detection_iou},
  };
  doc["frames"] = Json::array();
  for (const FrameResult& frame : result.frames) {
    Json entry;
    entry["frame_id"] = frame.frame_id;
    entry["timestamp"] = frame.timestamp;
    entry["kept_detections"] = frame.kept_detections;
    entry["success"] = frame.success;
    if (frame.success) {
      entry["pose_map_to_camera"] = pose_to_json(frame.pose);
      entry["refinement"] = Json{{"initial_cost", frame.refinement_initial_cost},
                                 {"final_cost", frame.refinement_final_cost},
                                 {"iterations", frame.refinement_iterations}};
    } else {
      entry["failure_reason"] = frame.failure_reason;
    }
    entry["associations"] = Json::array();
    for (const Association& match : frame.associations.matches)
      entry["associations"].push_back(Json{{"detection", match.frame_node},
                                           {"object", match.map_node},
                                           {"error_px", match.reprojection_error_px},
                                           {"inlier", match.inlier}});
    doc["frames"].push_back(std::move(entry));
  }
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw ParseError("cannot open " + path + " for writing");
  stream << doc.dump(2) << '\n';
  if (!stream) throw ParseError("failed writing " + path);
}

LoadedReport load_report(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ParseError("cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(stream);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "goreloc-report")
    throw ParseError(path + ": expected a \"goreloc-report\" file");

  LoadedReport report;
  const Json& config = doc.at("config");
  report.config.knn_k = config.value("knn_k", 5);
  report.config.top_j = config.value("top_j", 5);
  if (config.contains("ransac")) {
    const Json& ransac = config["ransac"];
    report.config.ransac.num = ransac.value("num", 3);
    report.config.ransac.max_iter = ransac.value("max_iter", 50);
    report.config.ransac.inlier_threshold_px = ransac.value("inlier_threshold_px", 40.0);
    report.config.ransac.rng_seed = ransac.value("rng_seed", std::uint64_t{0});
  }
  report.config.retrieval =
      retrieval_method_from_name(config.value("retrieval", std::string("kernel-graph")));
  if (config.contains("intrinsics")) {
    const Json& k = config["intrinsics"];
    report.config.intrinsics = {k.value("fx", 0.0),    k.value("fy", 0.0),
                                k.value("cx", 0.0),    k.value("cy", 0.0),
                                k.value("width", 0),   k.value("height", 0)};
  }
  report.config.min_detection_score = config.value("min_detection_score", 0.1);
  report.config.max_detection_iou = config.value("max_detection_iou", 0.6);

  for (const Json& entry : doc.at("frames")) {
    const std::string context = path + ": frame record " + std::to_string(report.frames.size());
    FrameResult frame;
    frame.frame_id = entry.value("frame_id", 0);
    frame.timestamp = entry.value("timestamp", 0.0);
    frame.kept_detections = entry.value("kept_detections", 0);
    frame.success = entry.value("success", false);
    if (frame.success) {
      frame.pose = pose_from_json(entry.at("pose_map_to_camera"), context);
      if (entry.contains("refinement")) {
        frame.refinement_initial_cost = entry["refinement"].value("initial_cost", 0.0);
        frame.refinement_final_cost = entry["refinement"].value("final_cost", 0.0);
        frame.refinement_iterations = entry["refinement"].value("iterations", 0);
      }
    } else {
      frame.failure_reason = entry.value("failure_reason", std::string());
    }
    if (entry.contains("associations"))
      for (const Json& match : entry["associations"])
        frame.associations.matches.push_back({match.value("detection", -1),
                                              match.value("object", -1),
                                              match.value("error_px", 0.0),
                                              match.value("inlier", false)});
    report.frames.push_back(std::move(frame));
  }
  return report;
}

std::vector<PoseEstimate> report_estimates(const LoadedReport& report) {
  std::vector<PoseEstimate> estimates;
  estimates.reserve(report.frames.size());
  for (const FrameResult& frame : report.frames)
    estimates.push_back({frame.frame_id, frame.timestamp, frame.success, frame.pose});
  return estimates;
}

std::string format_timing(const StageTiming& timing, int frame_count) {
  const int frames = std::max(frame_count, 1);
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "stage                 total_ms   per_frame_ms\n";
  const auto row = [&](const char* name, double total) {
    out << std::left << std::setw(20) << name << ' ' << std::right << std::setw(10) << total
        << ' ' << std::setw(14) << total / frames << '\n';
  };
  row("frame processing", timing.frame_processing_ms);
  row("graph generation", timing.graph_generation_ms);
  row("subgraph extraction", timing.subgraph_extraction_ms);
  row("refinement", timing.refinement_ms);
  row("total", timing.frame_processing_ms + timing.graph_generation_ms +
                   timing.subgraph_extraction_ms + timing.refinement_ms);
  return out.str();
}

}  // namespace goreloc
