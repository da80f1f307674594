#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "priormvs/fusion.hpp"
#include "priormvs/mvs.hpp"
#include "priormvs/synthesis.hpp"

namespace priormvs::cli {

/// Every tunable of the pipeline. Loaded from defaults, then a JSON file,
/// then command-line flags, each layer overriding the previous one.
struct PipelineConfig {
  CascadeConfig cascade;
  FusionConfig fusion;
  LossConfig loss;
  double tau = 0.5;
  std::uint64_t seed = 0;
  /// Source views per reference during inference.
  std::size_t num_sources = 4;
  /// Warped views per synthesized sample.
  std::size_t synth_views = 2;
  std::size_t neighbor_pool = 10;
  double max_dist = 20.0;
  double fscore_threshold = 1.0;
  /// Absolute depth error bound of the inference report.
  double depth_error_threshold = 0.05;

  void validate() const;
};

/// Overlays the keys of `j` on `cfg`. Unknown keys and ill-typed values are
/// errors naming the key.
void apply_json(PipelineConfig& cfg, const nlohmann::json& j);

PipelineConfig load_config_file(const std::string& path, PipelineConfig base = {});

nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace priormvs::cli
