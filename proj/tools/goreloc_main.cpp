// Command-line front end: relocalize frames against a map, evaluate reports,
// generate synthetic scenes, and inspect graph descriptors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "goreloc/association.hpp"
#include "goreloc/errors.hpp"
#include "goreloc/eval.hpp"
#include "goreloc/graph.hpp"
#include "goreloc/io.hpp"
#include "goreloc/pipeline.hpp"
#include "goreloc/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;      // parse or configuration error
constexpr int kExitMostFramesFailed = 3;

using Json = nlohmann::ordered_json;

goreloc::CameraIntrinsics intrinsics_from_values(const std::vector<double>& values) {
  if (values.size() != 6)
    throw goreloc::ParseError("--intrinsics expects fx,fy,cx,cy,width,height");
  goreloc::CameraIntrinsics k{values[0], values[1], values[2], values[3],
                              static_cast<int>(values[4]), static_cast<int>(values[5])};
  if (!k.valid()) throw goreloc::ParseError("--intrinsics values are not a valid camera");
  return k;
}

/// Ground-truth map-to-camera pose at the frame timestamp, or nullopt when no
/// trajectory entry lies within 50 ms.
std::optional<goreloc::PoseSE3> true_pose_near(const goreloc::Trajectory& trajectory,
                                               double timestamp) {
  double best_gap = std::numeric_limits<double>::infinity();
  const goreloc::TrajectoryEntry* nearest = nullptr;
  for (const goreloc::TrajectoryEntry& entry : trajectory) {
    const double gap = std::abs(entry.timestamp - timestamp);
    if (gap < best_gap) {
      best_gap = gap;
      nearest = &entry;
    }
  }
  if (nearest == nullptr || best_gap > 0.05) return std::nullopt;
  return nearest->camera_in_map.inverse();
}

int run_reloc_command(const std::string& map_path, const std::string& detections_path,
                      const std::vector<double>& intrinsics_values, int k, int j, int num,
                      int max_iter, double inlier_px, std::uint64_t seed,
                      const std::string& baseline, const std::string& report_path) {
  goreloc::RelocConfig config;
  config.intrinsics = intrinsics_from_values(intrinsics_values);
  config.knn_k = k;
  config.top_j = j;
  config.ransac.num = num;
  config.ransac.max_iter = max_iter;
  config.ransac.inlier_threshold_px = inlier_px;
  config.ransac.rng_seed = seed;
  if (!baseline.empty())
    config.retrieval = goreloc::retrieval_method_from_name(baseline);

  const auto [cats, objects] = goreloc::load_map(map_path);
  const auto frames = goreloc::load_detections(detections_path, cats);

  const goreloc::RunResult result = goreloc::run_reloc(cats, objects, frames, config);
  goreloc::save_report(report_path, config, result);

  const int total = static_cast<int>(result.frames.size());
  std::cout << "relocalized " << (total - result.failed_frames) << "/" << total
            << " frames (" << goreloc::retrieval_method_name(config.retrieval)
            << " retrieval), report written to " << report_path << "\n\n"
            << goreloc::format_timing(result.timing, total);

  if (total > 0 && 2 * result.failed_frames > total) {
    std::cerr << "error: relocalization failed on more than half of the frames\n";
    return kExitMostFramesFailed;
  }
  return kExitOk;
}

int run_eval_command(const std::string& report_path, const std::string& gt_traj_path,
                     const std::string& gt_assoc, const std::string& map_path,
                     const std::string& detections_path, const std::string& out_path) {
  const goreloc::LoadedReport report = goreloc::load_report(report_path);
  const goreloc::Trajectory trajectory = goreloc::load_trajectory(gt_traj_path);

  const std::vector<double> thresholds{0.5, 2.0, 5.0};
  const std::vector<double> fractions{0.1, 0.2};
  const goreloc::PoseMetrics pose =
      goreloc::pose_metrics(goreloc::report_estimates(report), trajectory, thresholds, fractions);

  Json doc;
  doc["format"] = "goreloc-metrics";
  doc["version"] = 1;
  doc["pose"] = Json{{"frames", pose.frame_count}, {"successes", pose.success_count}};
  doc["pose"]["success_rate"] = Json::array();
  for (const auto& [threshold, percent] : pose.success_rate_percent)
    doc["pose"]["success_rate"].push_back(
        Json{{"threshold_m", threshold}, {"percent", percent}});
  doc["pose"]["te_percentile"] = Json::array();
  for (const auto& [fraction, te] : pose.te_percentile_m)
    doc["pose"]["te_percentile"].push_back(Json{{"fraction", fraction}, {"mean_te_m", te}});

  if (!gt_assoc.empty()) {
    if (gt_assoc != "from-projection")
      throw goreloc::ParseError("--gt-assoc only supports \"from-projection\"");
    if (map_path.empty() || detections_path.empty())
      throw goreloc::ParseError("--gt-assoc from-projection needs --map and --detections");

    const auto [cats, objects] = goreloc::load_map(map_path);
    const auto frames = goreloc::load_detections(detections_path, cats);

    int matched = 0;
    int predicted = 0;
    double distance_sum = 0.0;
    double iou_sum = 0.0;
    int scored_pairs = 0;
    Json per_frame = Json::array();
    for (const goreloc::FrameResult& frame : report.frames) {
      const auto source =
          std::find_if(frames.begin(), frames.end(), [&](const goreloc::FrameDetections& f) {
            return f.frame_id == frame.frame_id;
          });
      if (source == frames.end())
        throw goreloc::ParseError("report frame " + std::to_string(frame.frame_id) +
                                  " is missing from the detections file");
      const auto true_pose = true_pose_near(trajectory, frame.timestamp);
      if (!true_pose) throw goreloc::NoGroundTruth();

      const std::vector<goreloc::Detection> kept =
          goreloc::filter_detections(source->detections, report.config.min_detection_score,
                                     report.config.max_detection_iou);
      const goreloc::AssociationSet gt = goreloc::ground_truth_associations(
          kept, objects, *true_pose, report.config.intrinsics);
      const goreloc::AssociationMetrics metrics = goreloc::association_metrics(
          frame.associations, gt, kept, objects, *true_pose, report.config.intrinsics);

      matched += metrics.matched_count;
      predicted += metrics.predicted_count;
      distance_sum += metrics.center_distance_px * metrics.predicted_count;
      iou_sum += metrics.mean_iou * metrics.predicted_count;
      scored_pairs += metrics.predicted_count;
      per_frame.push_back(Json{{"frame_id", frame.frame_id},
                               {"accuracy_percent", metrics.accuracy_percent},
                               {"matched", metrics.matched_count},
                               {"predicted", metrics.predicted_count}});
    }
    doc["association"] = Json{
        {"accuracy_percent", predicted > 0 ? 100.0 * matched / predicted : 0.0},
        {"center_distance_px", scored_pairs > 0 ? distance_sum / scored_pairs : 0.0},
        {"mean_iou", scored_pairs > 0 ? iou_sum / scored_pairs : 0.0},
        {"matched", matched},
        {"predicted", predicted},
        {"per_frame", std::move(per_frame)},
    };
  }

  std::ofstream stream(out_path, std::ios::binary);
  if (!stream) throw goreloc::ParseError("cannot open " + out_path + " for writing");
  stream << doc.dump(2) << '\n';
  std::cout << "metrics written to " << out_path << '\n';
  return kExitOk;
}

int run_synth_command(const std::string& config_path, const std::string& out_dir) {
  const goreloc::SynthConfig config = goreloc::load_synth_config(config_path);
  const goreloc::SyntheticScene scene = goreloc::generate_synthetic(config);
  goreloc::write_synthetic(out_dir, config, scene);
  std::cout << "wrote " << scene.objects.size() << " objects and " << scene.frames.size()
            << " frames to " << out_dir << '\n';
  return kExitOk;
}

int run_graph_command(const std::string& map_path, const std::string& kernels_path, int k) {
  const auto [cats, objects] = goreloc::load_map(map_path);
  const goreloc::SceneGraph graph = goreloc::build_map_graph(objects, k);
  const std::vector<Eigen::VectorXd> kernels = goreloc::all_kernel_vectors(graph);

  Json doc;
  doc["format"] = "goreloc-kernels";
  doc["version"] = 1;
  doc["categories"] = cats.names();
  doc["nodes"] = Json::array();
  for (int id = 0; id < graph.node_count(); ++id) {
    const goreloc::GraphNode& node = graph.node(id);
    Json entry;
    entry["id"] = id;
    entry["label"] = cats.name(goreloc::mode_label(node.distribution));
    entry["anchor_m"] = {node.anchor.x(), node.anchor.y(), node.anchor.z()};
    entry["kernel"] = Json::array();
    for (int i = 0; i < kernels[id].size(); ++i) entry["kernel"].push_back(kernels[id][i]);
    entry["neighbors"] = Json::array();
    for (const goreloc::GraphEdge& edge : graph.neighbors(id))
      entry["neighbors"].push_back(Json{{"node", edge.neighbor}, {"weight_m", edge.weight}});
    doc["nodes"].push_back(std::move(entry));
  }
  std::ofstream stream(kernels_path, std::ios::binary);
  if (!stream) throw goreloc::ParseError("cannot open " + kernels_path + " for writing");
  stream << doc.dump(2) << '\n';
  std::cout << "kernel vectors for " << graph.node_count() << " nodes written to "
            << kernels_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-graph camera relocalization"};
  app.require_subcommand(1);

  std::string map_path, detections_path, report_path, baseline;
  std::vector<double> intrinsics_values;
  int k = 5, j = 5, num = 3, max_iter = 50;
  double inlier_px = 40.0;
  std::uint64_t seed = 0;

  CLI::App* reloc = app.add_subcommand("reloc", "Relocalize every frame against a map");
  reloc->add_option("--map", map_path, "map file")->required();
  reloc->add_option("--detections", detections_path, "per-frame detections file")->required();
  reloc->add_option("--intrinsics", intrinsics_values, "fx,fy,cx,cy,width,height")
      ->required()
      ->delimiter(',')
      ->expected(6);
  reloc->add_option("--k", k, "neighbors per graph node");
  reloc->add_option("--j", j, "candidates per frame node");
  reloc->add_option("--num", num, "frame nodes per consensus sample");
  reloc->add_option("--max-iter", max_iter, "consensus sampling iterations");
  reloc->add_option("--inlier-px", inlier_px, "inlier reprojection threshold in pixels");
  reloc->add_option("--seed", seed, "random seed");
  reloc->add_option("--baseline", baseline, "candidate retrieval baseline")
      ->check(CLI::IsMember({"none-graph", "random-walk"}));
  reloc->add_option("--report", report_path, "output report file")->required();

  std::string gt_traj_path, gt_assoc, metrics_path, eval_map_path, eval_detections_path;
  CLI::App* eval = app.add_subcommand("eval", "Compute metrics from a report");
  eval->add_option("--report", report_path, "report file from reloc")->required();
  eval->add_option("--gt-traj", gt_traj_path, "ground-truth trajectory")->required();
  eval->add_option("--gt-assoc", gt_assoc, "association ground truth source")
      ->check(CLI::IsMember({"from-projection"}));
  eval->add_option("--map", eval_map_path, "map file (needed with --gt-assoc)");
  eval->add_option("--detections", eval_detections_path,
                   "detections file (needed with --gt-assoc)");
  eval->add_option("--out", metrics_path, "output metrics file")->required();

  std::string synth_config_path, out_dir;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  synth->add_option("--config", synth_config_path, "generator configuration")->required();
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  std::string kernels_path;
  CLI::App* graph = app.add_subcommand("graph", "Dump map graph kernel vectors");
  graph->add_option("--map", map_path, "map file")->required();
  graph->add_option("--dump-kernels", kernels_path, "output kernel file")->required();
  graph->add_option("--k", k, "neighbors per graph node");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (reloc->parsed())
      return run_reloc_command(map_path, detections_path, intrinsics_values, k, j, num, max_iter,
                               inlier_px, seed, baseline, report_path);
    if (eval->parsed())
      return run_eval_command(report_path, gt_traj_path, gt_assoc, eval_map_path,
                              eval_detections_path, metrics_path);
    if (synth->parsed()) return run_synth_command(synth_config_path, out_dir);
    if (graph->parsed()) return run_graph_command(map_path, kernels_path, k);
  } catch (const goreloc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}
