#pragma once

#include <stdexcept>
#include <string>

namespace goreloc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- geometry --
class PointBehindCamera : public Error {
 public:
  explicit PointBehindCamera(const std::string& what = "point behind camera") : Error(what) {}
};
class DegenerateConic : public Error {
 public:
  explicit DegenerateConic(const std::string& what = "degenerate conic") : Error(what) {}
};
class EmptyBox : public Error {
 public:
  explicit EmptyBox(const std::string& what = "box has non-positive extent") : Error(what) {}
};

// -- semantics --
class UnknownCategory : public Error {
 public:
  explicit UnknownCategory(const std::string& what = "unknown category") : Error(what) {}
};
class NoObservations : public Error {
 public:
  explicit NoObservations(const std::string& what = "no observations") : Error(what) {}
};
class ZeroDistribution : public Error {
 public:
  explicit ZeroDistribution(const std::string& what = "distribution has no mass") : Error(what) {}
};

// -- graph --
class UnknownNode : public Error {
 public:
  explicit UnknownNode(const std::string& what = "node id not in graph") : Error(what) {}
};

// -- association --
class InsufficientDetections : public Error {
 public:
  explicit InsufficientDetections(const std::string& what = "not enough usable detections")
      : Error(what) {}
};
class NoValidPose : public Error {
 public:
  explicit NoValidPose(const std::string& what = "no candidate combination yields a pose")
      : Error(what) {}
};

// -- pose --
class DegenerateConfiguration : public Error {
 public:
  explicit DegenerateConfiguration(const std::string& what = "degenerate point configuration")
      : Error(what) {}
};
class NoSolution : public Error {
 public:
  explicit NoSolution(const std::string& what = "no pose solution") : Error(what) {}
};
class NoInliers : public Error {
 public:
  explicit NoInliers(const std::string& what = "no inlier matches") : Error(what) {}
};
class DivergedBehindCamera : public Error {
 public:
  explicit DivergedBehindCamera(const std::string& what = "matched object left the frustum")
      : Error(what) {}
};

// -- io --
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};
class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& what) : Error(what) {}
};

// -- eval --
class NoGroundTruth : public Error {
 public:
  explicit NoGroundTruth(const std::string& what = "no ground-truth pose within time window")
      : Error(what) {}
};

}  // namespace goreloc
