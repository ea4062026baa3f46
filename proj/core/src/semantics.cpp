#include "goreloc/semantics.hpp"

namespace goreloc {

CategorySet::CategorySet(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < static_cast<int>(names_.size()); ++i) {
    auto [it, inserted] = index_.emplace(names_[i], i);
    if (!inserted) throw InvariantViolation("duplicate category name: " + names_[i]);
  }
}

int CategorySet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UnknownCategory("category not in set: " + name);
  return it->second;
}

Detection Detection::from_bbox(const BoundingBox& bbox, int label, double score) {
  Detection d;
  d.bbox = bbox;
  d.label = label;
  d.score = score;
  d.ellipse = inscribed_ellipse(bbox);
  return d;
}

CategoryDistribution detection_distribution(const Detection& detection, const CategorySet& cats) {
  if (detection.label < 0 || detection.label >= cats.size())
    throw UnknownCategory("detection label index out of range");
  CategoryDistribution dist{Eigen::VectorXd::Zero(cats.size())};
  dist.p[detection.label] = detection.score;
  return dist;
}

CategoryDistribution object_distribution(std::span<const Observation> observations,
                                         const CategorySet& cats) {
  if (observations.empty()) throw NoObservations();
  CategoryDistribution dist{Eigen::VectorXd::Zero(cats.size())};
  double total = 0.0;
  for (const Observation& obs : observations) {
    if (obs.label < 0 || obs.label >= cats.size())
      throw UnknownCategory("observation label index out of range");
    dist.p[obs.label] += obs.score;
    total += obs.score;
  }
  if (total <= 0.0) throw ZeroDistribution("observations carry no mass");
  dist.p /= total;
  return dist;
}

int mode_label(const CategoryDistribution& dist) {
  if (dist.size() == 0 || dist.p.maxCoeff() <= 0.0)
    throw ZeroDistribution();
  int best = 0;
  for (int i = 1; i < dist.size(); ++i) {
    if (dist.p[i] > dist.p[best]) best = i;
  }
  return best;
}

}  // namespace goreloc
