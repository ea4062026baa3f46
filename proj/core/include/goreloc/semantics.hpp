#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "goreloc/errors.hpp"
#include "goreloc/geometry.hpp"

namespace goreloc {

/// Ordered, fixed set of category names. Index order is the vector layout used by
/// every distribution and kernel vector in the system.
class CategorySet {
 public:
  CategorySet() = default;
  explicit CategorySet(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  /// Throws UnknownCategory if the name is not in the set.
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

/// Non-negative mass per category. Detection distributions carry the raw confidence
/// at a single index; object distributions are normalized to sum 1.
struct CategoryDistribution {
  Eigen::VectorXd p;

  int size() const { return static_cast<int>(p.size()); }
  double sum() const { return p.sum(); }
};

struct Detection {
  BoundingBox bbox;
  int label = -1;       // index into the CategorySet
  double score = 0.0;   // confidence in (0, 1]
  Ellipse2D ellipse;    // inscribed ellipse of bbox

  static Detection from_bbox(const BoundingBox& bbox, int label, double score);
};

/// One recorded sighting of a map object in a keyframe.
struct Observation {
  int keyframe = 0;
  int label = -1;
  double score = 0.0;
};

struct ObjectLandmark {
  int id = 0;
  DualQuadric quadric;
  CategoryDistribution distribution;
  std::vector<Observation> observations;  // may be empty when distribution was given directly
};

/// Detection likelihood over categories: the confidence at the detected label,
/// zero elsewhere. Deliberately not normalized.
CategoryDistribution detection_distribution(const Detection& detection, const CategorySet& cats);

/// Aggregates per-keyframe label evidence into one normalized distribution.
CategoryDistribution object_distribution(std::span<const Observation> observations,
                                         const CategorySet& cats);

/// Argmax category; ties break toward the lower index.
int mode_label(const CategoryDistribution& dist);

}  // namespace goreloc
