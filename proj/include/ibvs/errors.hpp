#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibvs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JointLimitError : public Error {
 public:
  JointLimitError(std::size_t coordinate, double value, double lower, double upper);
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

/// A feature projects onto or behind the camera plane.
class BehindCameraError : public Error {
 public:
  BehindCameraError(std::string feature, std::size_t camera);
  const std::string& feature() const { return feature_; }
  std::size_t camera() const { return camera_; }

 private:
  std::string feature_;
  std::size_t camera_;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// A 3D direction projects to (almost) a point in the image.
class DegenerateProjectionError : public Error {
 public:
  using Error::Error;
};

class InsufficientViewsError : public Error {
 public:
  using Error::Error;
};

class UnknownEntityError : public Error {
 public:
  explicit UnknownEntityError(const std::string& name)
      : Error("unknown entity: " + name) {}
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Finite-difference probing failed at one of the coordinates.
class InitializationFailedError : public Error {
 public:
  InitializationFailedError(std::size_t coordinate, const std::string& cause);
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace ibvs
