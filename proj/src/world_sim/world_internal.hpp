#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ibvs/world.hpp"

namespace ibvs::detail {

/// A named 3D direction anchored at a world point.
struct DirectionSource {
  std::string name;
  Eigen::Vector3d base;
  Eigen::Vector3d direction;
  double baseline;
};

std::vector<DirectionSource> direction_sources(const Scene& scene);

/// Tool-frame anchor and direction of a tool-attached direction feature.
struct ToolDirection {
  Eigen::Vector3d base;
  Eigen::Vector3d direction;
};

std::optional<ToolDirection> tool_direction(const Scene& scene, std::string_view name);
std::optional<Eigen::Vector3d> tool_point_local(const Scene& scene, std::string_view name);

}  // namespace ibvs::detail
