#include "goreloc/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "goreloc/errors.hpp"

namespace goreloc {

namespace {

using Json = nlohmann::ordered_json;

Json read_json(const std::string& path, const char* expected_format) {
  std::ifstream stream(path);
  if (!stream) throw ParseError("cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(stream);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != expected_format)
    throw ParseError(path + ": expected a \"" + expected_format + "\" file");
  return doc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw ParseError("cannot open " + path + " for writing");
  stream << text;
  if (!stream) throw ParseError("failed writing " + path);
}

Eigen::Vector3d vector3_field(const Json& node, const char* key, const std::string& context) {
  if (!node.contains(key) || !node[key].is_array() || node[key].size() != 3)
    throw ParseError(context + ": \"" + key + "\" must be an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!node[key][i].is_number()) throw ParseError(context + ": non-numeric \"" + key + "\"");
    v[i] = node[key][i].get<double>();
  }
  return v;
}

}  // namespace

std::pair<CategorySet, std::vector<ObjectLandmark>> load_map(const std::string& path) {
  const Json doc = read_json(path, "goreloc-map");
  if (!doc.contains("categories") || !doc["categories"].is_array())
    throw ParseError(path + ": missing \"categories\" array");
  std::vector<std::string> names;
  for (const Json& name : doc["categories"]) {
    if (!name.is_string()) throw ParseError(path + ": category names must be strings");
    names.push_back(name.get<std::string>());
  }
  const CategorySet cats(names);

  if (!doc.contains("objects") || !doc["objects"].is_array())
    throw ParseError(path + ": missing \"objects\" array");

  std::vector<ObjectLandmark> objects;
  std::vector<char> seen_ids;
  for (const Json& entry : doc["objects"]) {
    const std::string context = path + ": object " + std::to_string(objects.size());
    ObjectLandmark object;
    if (!entry.contains("id") || !entry["id"].is_number_integer())
      throw ParseError(context + ": missing integer \"id\"");
    object.id = entry["id"].get<int>();
    if (object.id < 0) throw ParseError(context + ": negative id");
    if (object.id >= static_cast<int>(seen_ids.size())) seen_ids.resize(object.id + 1, 0);
    if (seen_ids[object.id]) throw InvariantViolation(context + ": duplicate id");
    seen_ids[object.id] = 1;

    object.quadric.position = vector3_field(entry, "position", context);
    object.quadric.semi_axes = vector3_field(entry, "semi_axes", context);
    if ((object.quadric.semi_axes.array() <= 0.0).any())
      throw InvariantViolation(context + ": semi_axes must be positive");

    if (!entry.contains("orientation_wxyz") || !entry["orientation_wxyz"].is_array() ||
        entry["orientation_wxyz"].size() != 4)
      throw ParseError(context + ": \"orientation_wxyz\" must be an array of 4 numbers");
    const Json& q = entry["orientation_wxyz"];
    object.quadric.orientation =
        Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                           q[3].get<double>());
    if (std::abs(object.quadric.orientation.norm() - 1.0) > 1e-6)
      throw InvariantViolation(context + ": orientation quaternion is not unit length");

    const bool has_observations = entry.contains("observations");
    const bool has_distribution = entry.contains("distribution");
    if (has_observations == has_distribution)
      throw ParseError(context + ": exactly one of \"observations\" or \"distribution\" required");

    if (has_observations) {
      if (!entry["observations"].is_array() || entry["observations"].empty())
        throw ParseError(context + ": \"observations\" must be a non-empty array");
      for (const Json& obs : entry["observations"]) {
        Observation observation;
        if (!obs.contains("keyframe") || !obs["keyframe"].is_number_integer())
          throw ParseError(context + ": observation needs an integer \"keyframe\"");
        observation.keyframe = obs["keyframe"].get<int>();
        if (!obs.contains("label") || !obs["label"].is_string())
          throw ParseError(context + ": observation needs a string \"label\"");
        try {
          observation.label = cats.index_of(obs["label"].get<std::string>());
        } catch (const UnknownCategory&) {
          throw ParseError(context + ": unknown label \"" + obs["label"].get<std::string>() +
                           "\"");
        }
        if (!obs.contains("score") || !obs["score"].is_number())
          throw ParseError(context + ": observation needs a numeric \"score\"");
        observation.score = obs["score"].get<double>();
        if (!(observation.score > 0.0) || observation.score > 1.0)
          throw InvariantViolation(context + ": observation score outside (0, 1]");
        object.observations.push_back(observation);
      }
      object.distribution = object_distribution(object.observations, cats);
    } else {
      if (!entry["distribution"].is_array())
        throw ParseError(context + ": \"distribution\" must be an array");
      Eigen::VectorXd p = Eigen::VectorXd::Zero(cats.size());
      for (const Json& term : entry["distribution"]) {
        if (!term.contains("category") || !term["category"].is_string() ||
            !term.contains("p") || !term["p"].is_number())
          throw ParseError(context + ": distribution terms need \"category\" and \"p\"");
        int index = 0;
        try {
          index = cats.index_of(term["category"].get<std::string>());
        } catch (const UnknownCategory&) {
          throw ParseError(context + ": unknown category \"" +
                           term["category"].get<std::string>() + "\"");
        }
        const double mass = term["p"].get<double>();
        if (mass < 0.0) throw InvariantViolation(context + ": negative probability");
        p[index] = mass;
      }
      if (std::abs(p.sum() - 1.0) > 1e-6)
        throw InvariantViolation(context + ": distribution must sum to 1");
      object.distribution = CategoryDistribution{p};
    }
    objects.push_back(std::move(object));
  }
  return {cats, std::move(objects)};
}

void save_map(const std::string& path, const CategorySet& cats,
              const std::vector<ObjectLandmark>& objects) {
  Json doc;
  doc["format"] = "goreloc-map";
  doc["version"] = 1;
  doc["units"] = Json{{"position", "meters"}, {"semi_axes", "meters"}};
  doc["categories"] = cats.names();
  doc["objects"] = Json::array();
  for (const ObjectLandmark& object : objects) {
    Json entry;
    entry["id"] = object.id;
    entry["position"] = {object.quadric.position.x(), object.quadric.position.y(),
                         object.quadric.position.z()};
    entry["orientation_wxyz"] = {object.quadric.orientation.w(), object.quadric.orientation.x(),
                                 object.quadric.orientation.y(), object.quadric.orientation.z()};
    entry["semi_axes"] = {object.quadric.semi_axes.x(), object.quadric.semi_axes.y(),
                          object.quadric.semi_axes.z()};
    if (!object.observations.empty()) {
      entry["observations"] = Json::array();
      for (const Observation& obs : object.observations)
        entry["observations"].push_back(Json{{"keyframe", obs.keyframe},
                                             {"label", cats.name(obs.label)},
                                             {"score", obs.score}});
    } else {
      entry["distribution"] = Json::array();
      for (int i = 0; i < object.distribution.size(); ++i)
        if (object.distribution.p[i] != 0.0)
          entry["distribution"].push_back(Json{{"category", cats.name(i)},
                                               {"p", object.distribution.p[i]}});
    }
    doc["objects"].push_back(std::move(entry));
  }
  write_text(path, doc.dump(2) + "\n");
}

std::vector<FrameDetections> load_detections(const std::string& path, const CategorySet& cats) {
  const Json doc = read_json(path, "goreloc-detections");
  if (!doc.contains("image") || !doc["image"].is_object() ||
      !doc["image"].contains("width") || !doc["image"].contains("height"))
    throw ParseError(path + ": missing \"image\" header with width and height");
  const double width = doc["image"]["width"].get<double>();
  const double height = doc["image"]["height"].get<double>();
  if (width <= 0.0 || height <= 0.0) throw ParseError(path + ": non-positive image size");

  if (!doc.contains("frames") || !doc["frames"].is_array())
    throw ParseError(path + ": missing \"frames\" array");

  std::vector<FrameDetections> frames;
  double previous_timestamp = -std::numeric_limits<double>::infinity();
  for (const Json& entry : doc["frames"]) {
    const std::string context = path + ": frame " + std::to_string(frames.size());
    FrameDetections frame;
    if (!entry.contains("frame_id") || !entry["frame_id"].is_number_integer())
      throw ParseError(context + ": missing integer \"frame_id\"");
    frame.frame_id = entry["frame_id"].get<int>();
    if (!entry.contains("timestamp") || !entry["timestamp"].is_number())
      throw ParseError(context + ": missing numeric \"timestamp\"");
    frame.timestamp = entry["timestamp"].get<double>();
    if (!(frame.timestamp > previous_timestamp))
      throw ParseError(context + ": timestamps must increase strictly");
    previous_timestamp = frame.timestamp;

    if (!entry.contains("detections") || !entry["detections"].is_array())
      throw ParseError(context + ": missing \"detections\" array");
    for (const Json& det : entry["detections"]) {
      if (!det.contains("bbox") || !det["bbox"].is_array() || det["bbox"].size() != 4)
        throw ParseError(context + ": detection \"bbox\" must be [x1, y1, x2, y2]");
      BoundingBox bbox{det["bbox"][0].get<double>(), det["bbox"][1].get<double>(),
                       det["bbox"][2].get<double>(), det["bbox"][3].get<double>()};
      bbox = bbox.clamped(width, height);
      if (!det.contains("label") || !det["label"].is_string())
        throw ParseError(context + ": detection needs a string \"label\"");
      int label = 0;
      try {
        label = cats.index_of(det["label"].get<std::string>());
      } catch (const UnknownCategory&) {
        throw ParseError(context + ": unknown label \"" + det["label"].get<std::string>() + "\"");
      }
      if (!det.contains("score") || !det["score"].is_number())
        throw ParseError(context + ": detection needs a numeric \"score\"");
      const double score = det["score"].get<double>();
      if (!(score > 0.0) || score > 1.0)
        throw ParseError(context + ": detection score outside (0, 1]");
      frame.detections.push_back(Detection::from_bbox(bbox, label, score));
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void save_detections(const std::string& path, const CategorySet& cats, int image_width,
                     int image_height, const std::vector<FrameDetections>& frames) {
  Json doc;
  doc["format"] = "goreloc-detections";
  doc["version"] = 1;
  doc["units"] = Json{{"bbox", "pixels"}, {"timestamp", "seconds"}};
  doc["image"] = Json{{"width", image_width}, {"height", image_height}};
  doc["frames"] = Json::array();
  for (const FrameDetections& frame : frames) {
    Json entry;
    entry["frame_id"] = frame.frame_id;
    entry["timestamp"] = frame.timestamp;
    entry["detections"] = Json::array();
    for (const Detection& det : frame.detections)
      entry["detections"].push_back(
          Json{{"bbox", {det.bbox.x_min, det.bbox.y_min, det.bbox.x_max, det.bbox.y_max}},
               {"label", cats.name(det.label)},
               {"score", det.score}});
    doc["frames"].push_back(std::move(entry));
  }
  write_text(path, doc.dump(2) + "\n");
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ParseError("cannot open " + path);

  Trajectory trajectory;
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(fields >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw ParseError(path + ":" + std::to_string(line_number) +
                       ": expected 8 fields (timestamp tx ty tz qx qy qz qw)");
    std::string trailing;
    if (fields >> trailing)
      throw ParseError(path + ":" + std::to_string(line_number) + ": trailing fields");
    const Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6)
      throw ParseError(path + ":" + std::to_string(line_number) +
                       ": quaternion is not unit length");
    trajectory.push_back({t, PoseSE3{q.normalized().toRotationMatrix(), {tx, ty, tz}}});
  }
  return trajectory;
}

void save_trajectory(const std::string& path, const Trajectory& trajectory) {
  std::ostringstream out;
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out << std::setprecision(17);
  for (const TrajectoryEntry& entry : trajectory) {
    const Eigen::Quaterniond q(entry.camera_in_map.rotation);
    const Eigen::Vector3d& t = entry.camera_in_map.translation;
    out << entry.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' '
        << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  write_text(path, out.str());
}

}  // namespace goreloc
