#include "cli/config.hpp"

#include <functional>
#include <map>

#include "priormvs/io/image.hpp"

namespace priormvs::cli {

using nlohmann::json;

void PipelineConfig::validate() const {
  cascade.validate();
  fusion.validate();
  loss.validate();
  if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("tau must lie in [0, 1]");
  if (num_sources < 1) throw ArgumentError("num_sources must be >= 1");
  if (synth_views < 1) throw ArgumentError("synth_views must be >= 1");
  if (neighbor_pool < 1) throw ArgumentError("neighbor_pool must be >= 1");
  if (!(max_dist > 0.0) || !(fscore_threshold > 0.0) || !(depth_error_threshold > 0.0))
    throw ArgumentError("metric thresholds must be positive");
}

namespace {

template <typename T>
T get(const json& value, std::string_view key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config key '" + std::string(key) + "' has the wrong type");
  }
}

using Setter = std::function<void(PipelineConfig&, const json&, std::string_view)>;

template <typename T, typename F>
Setter field(F&& assign) {
  return [assign](PipelineConfig& c, const json& v, std::string_view key) { assign(c, get<T>(v, key)); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"hypotheses", field<std::vector<int>>([](auto& c, auto v) { c.cascade.hypotheses_per_scale = v; })},
      {"interval_ratios",
       field<std::vector<double>>([](auto& c, auto v) { c.cascade.interval_ratio_per_scale = v; })},
      {"correction", field<std::vector<bool>>([](auto& c, auto v) { c.cascade.correction_enabled_per_scale = v; })},
      {"window_radius", field<int>([](auto& c, auto v) { c.cascade.window_radius = v; })},
      {"best_views", field<int>([](auto& c, auto v) { c.cascade.best_views = v; })},
      {"temperature", field<double>([](auto& c, auto v) { c.cascade.temperature = v; })},
      {"min_inliers", field<std::size_t>([](auto& c, auto v) { c.cascade.fit.min_inliers = v; })},
      {"max_fit_samples", field<std::size_t>([](auto& c, auto v) { c.cascade.fit.max_samples = v; })},
      {"conf_threshold", field<double>([](auto& c, auto v) { c.fusion.conf_threshold = v; })},
      {"reproj_px_threshold", field<double>([](auto& c, auto v) { c.fusion.reproj_px_threshold = v; })},
      {"relative_depth_threshold",
       field<double>([](auto& c, auto v) { c.fusion.relative_depth_threshold = v; })},
      {"min_consistent_views", field<int>([](auto& c, auto v) { c.fusion.min_consistent_views = v; })},
      {"loss_weights", field<std::vector<double>>([](auto& c, auto v) { c.loss.scale_weights = v; })},
      {"tau", field<double>([](auto& c, auto v) { c.tau = v; })},
      {"seed", field<std::uint64_t>([](auto& c, auto v) { c.seed = v; })},
      {"num_sources", field<std::size_t>([](auto& c, auto v) { c.num_sources = v; })},
      {"synth_views", field<std::size_t>([](auto& c, auto v) { c.synth_views = v; })},
      {"neighbor_pool", field<std::size_t>([](auto& c, auto v) { c.neighbor_pool = v; })},
      {"max_dist", field<double>([](auto& c, auto v) { c.max_dist = v; })},
      {"fscore_threshold", field<double>([](auto& c, auto v) { c.fscore_threshold = v; })},
      {"depth_error_threshold", field<double>([](auto& c, auto v) { c.depth_error_threshold = v; })},
  };
  return table;
}

}  // namespace

void apply_json(PipelineConfig& cfg, const json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ArgumentError("unknown config key '" + key + "'");
    it->second(cfg, value, key);
  }
}

PipelineConfig load_config_file(const std::string& path, PipelineConfig base) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    apply_json(base, j);
  } catch (const ArgumentError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return base;
}

json to_json(const PipelineConfig& cfg) {
  return json{
      {"hypotheses", cfg.cascade.hypotheses_per_scale},
      {"interval_ratios", cfg.cascade.interval_ratio_per_scale},
      {"correction", cfg.cascade.correction_enabled_per_scale},
      {"window_radius", cfg.cascade.window_radius},
      {"best_views", cfg.cascade.best_views},
      {"temperature", cfg.cascade.temperature},
      {"min_inliers", cfg.cascade.fit.min_inliers},
      {"max_fit_samples", cfg.cascade.fit.max_samples},
      {"conf_threshold", cfg.fusion.conf_threshold},
      {"reproj_px_threshold", cfg.fusion.reproj_px_threshold},
      {"relative_depth_threshold", cfg.fusion.relative_depth_threshold},
      {"min_consistent_views", cfg.fusion.min_consistent_views},
      {"loss_weights", cfg.loss.scale_weights},
      {"tau", cfg.tau},
      {"seed", cfg.seed},
      {"num_sources", cfg.num_sources},
      {"synth_views", cfg.synth_views},
      {"neighbor_pool", cfg.neighbor_pool},
      {"max_dist", cfg.max_dist},
      {"fscore_threshold", cfg.fscore_threshold},
      {"depth_error_threshold", cfg.depth_error_threshold},
  };
}

}  // namespace priormvs::cli
