#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "priormvs/geometry.hpp"

namespace priormvs {

struct Neighbor {
  std::size_t id = 0;
  double score = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Ranked neighbor list per view id, best first.
using PairList = std::vector<std::vector<Neighbor>>;

/// Calibrated views of one scene plus optional view-selection ranking.
struct Scene {
  std::vector<CameraView> cameras;
  std::optional<PairList> pairs;

  std::size_t size() const noexcept { return cameras.size(); }
};

}  // namespace priormvs
