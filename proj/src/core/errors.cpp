#include "ibvs/errors.hpp"

#include <fmt/format.h>

namespace ibvs {

JointLimitError::JointLimitError(std::size_t coordinate, double value, double lower,
                                 double upper)
    : Error(fmt::format("coordinate {} = {} outside joint limits [{}, {}]", coordinate,
                        value, lower, upper)),
      coordinate_(coordinate) {}

BehindCameraError::BehindCameraError(std::string feature, std::size_t camera)
    : Error(fmt::format("feature '{}' is behind camera {}", feature, camera)),
      feature_(std::move(feature)),
      camera_(camera) {}

InitializationFailedError::InitializationFailedError(std::size_t coordinate,
                                                     const std::string& cause)
    : Error(fmt::format("finite-difference initialization failed at coordinate {}: {}",
                        coordinate, cause)),
      coordinate_(coordinate) {}

}  // namespace ibvs
