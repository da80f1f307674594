#include "cli/commands.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "priormvs/io.hpp"
#include "priormvs/priormvs.hpp"

namespace priormvs::cli {

using nlohmann::json;

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception of the
/// lowest failing index is rethrown so failures do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_depth(const fs::path& path, const DepthMap& depth) {
  io::write_file(path, io::write_pfm(depth.to_values()));
}

std::string stem_pfm(std::size_t id) { return io::view_stem(id) + ".pfm"; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::size_t run_synth(const fs::path& scene_dir, const std::optional<fs::path>& priors,
                      const fs::path& out, const PipelineConfig& cfg, unsigned jobs) {
  const io::SceneLayout layout = io::discover_scene(scene_dir, priors);
  const io::LoadedScene loaded = io::load_scene(layout);
  std::vector<char> written(layout.size(), 0);

  parallel_for(layout.size(), jobs, [&](std::size_t v) {
    if (!layout.views[v].prior) {
      spdlog::warn("view {}: no prior, skipped", v);
      return;
    }
    const PriorMap prior = io::load_prior(*layout.views[v].prior);
    RngStream rng = RngStream::derive(cfg.seed, v);
    const TrainingSample sample = build_training_sample(
        loaded.images[v], prior, v, loaded.scene, cfg.synth_views, rng, cfg.neighbor_pool);

    const fs::path dir = out / ("sample_" + io::view_stem(v));
    io::write_file(dir / "images" / (io::view_stem(0) + ".png"), io::write_png(sample.reference_image));
    io::write_file(dir / "cams" / (io::view_stem(0) + "_cam.txt"), io::write_cam(sample.reference_view));
    write_depth(dir / "depths_gt" / stem_pfm(0), sample.supervision_depth);
    PairList pairs(sample.source_ids.size() + 1);
    json sources = json::array();
    for (std::size_t s = 0; s < sample.source_ids.size(); ++s) {
      const std::size_t local = s + 1;
      const std::string stem = io::view_stem(local);
      io::write_file(dir / "images" / (stem + ".png"), io::write_png(sample.source_images[s].image));
      io::write_file(dir / "masks" / (stem + ".png"), io::write_png(sample.source_images[s].mask));
      io::write_file(dir / "cams" / (stem + "_cam.txt"), io::write_cam(sample.source_views[s]));
      pairs[0].push_back({local, 1.0});
      pairs[local].push_back({0, 1.0});
      sources.push_back(sample.source_ids[s]);
    }
    io::write_file(dir / "pair.txt", io::write_pair(pairs));
    const json meta{
        {"reference_view", v},
        {"source_views", sources},
        {"seed", cfg.seed},
        {"eta1", sample.perturbation.eta1},
        {"eta2", sample.perturbation.eta2},
        {"eta3", sample.perturbation.eta3},
        {"mask_values", {{"empty", 0}, {"splatted", 1}, {"filled", 2}}},
    };
    io::write_file(dir / "meta.json", dump(meta));
    written[v] = 1;
    spdlog::info("view {}: sample with {} sources", v, sample.source_ids.size());
  });

  const auto count = static_cast<std::size_t>(std::count(written.begin(), written.end(), 1));
  if (count == 0) throw EmptyOutput("no sample was written (no view has a prior)");
  return count;
}

void run_infer(const fs::path& scene_dir, const std::optional<fs::path>& priors, const fs::path& out,
               const PipelineConfig& cfg, unsigned jobs) {
  const io::SceneLayout layout = io::discover_scene(scene_dir, priors);
  const io::LoadedScene loaded = io::load_scene(layout);
  const bool wants_prior = std::any_of(cfg.cascade.correction_enabled_per_scale.begin(),
                                       cfg.cascade.correction_enabled_per_scale.end(),
                                       [](bool b) { return b; });
  std::vector<std::string> report(layout.size());

  parallel_for(layout.size(), jobs, [&](std::size_t v) {
    const NeighborRanking ranking = ranked_neighbors(v, loaded.scene);
    if (ranking.from_distance)
      spdlog::info("view {}: no neighbor list, ranking sources by camera distance", v);
    std::vector<ColorView> sources;
    for (std::size_t id : ranking.ids) {
      if (sources.size() == cfg.num_sources) break;
      sources.push_back({loaded.images[id], loaded.scene.cameras[id]});
    }
    if (sources.empty()) throw ArgumentError("view " + std::to_string(v) + " has no source views");

    std::optional<PriorMap> prior;
    if (wants_prior && layout.views[v].prior) prior = io::load_prior(*layout.views[v].prior);
    const auto outputs = cascade_infer({loaded.images[v], loaded.scene.cameras[v]}, sources,
                                       cfg.cascade, prior, cfg.tau);
    std::size_t corrected_scales = 0;
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      const auto& c = outputs[k].correction;
      if (!c) continue;
      if (c->degenerate_fit)
        spdlog::warn("view {} scale {}: correction skipped, {}", v, k, c->diagnostic);
      else
        ++corrected_scales;
    }
    const ScaleOutput& final_scale = outputs.back();
    const DepthMap& depth = final_scale.propagated();
    write_depth(out / "depths" / stem_pfm(v), depth);
    io::write_file(out / "confidence" / stem_pfm(v), io::write_pfm(final_scale.confidence));

    std::string line = "view=" + io::view_stem(v) + " sources=" + std::to_string(sources.size()) +
                       " valid=" + std::to_string(depth.valid_count()) +
                       " corrected_scales=" + std::to_string(corrected_scales);
    if (layout.views[v].gt_depth) {
      const DepthMap gt = io::load_depth(*layout.views[v].gt_depth);
      if (gt.size() == depth.size()) {
        try {
          line += " depth_error_ratio=" +
                  io::format_double(depth_error_ratio(depth, gt, cfg.depth_error_threshold));
        } catch (const EmptyInput&) {
          line += " depth_error_ratio=nan";
        }
      } else {
        spdlog::warn("view {}: ground-truth depth resolution differs, not scored", v);
      }
    }
    report[v] = line;
    spdlog::info("{}", line);
  });

  std::string text = "depth_error_threshold=" + io::format_double(cfg.depth_error_threshold) + "\n";
  for (const auto& line : report) text += line + "\n";
  io::write_file(out / "infer_report.txt", text);
}

bool run_correct(const fs::path& depth_path, const fs::path& conf_path, const fs::path& prior_path,
                 const fs::path& out, const PipelineConfig& cfg) {
  const Raster<float> raw = io::load_pfm(depth_path);
  const DepthMap depth = DepthMap::from_values(raw);
  const ConfidenceMap conf = io::load_pfm(conf_path);
  const PriorMap prior = io::load_prior(prior_path);
  const CorrectionResult result = correct_depth(depth, conf, prior, cfg.tau, cfg.cascade.fit);

  // Start from the input raster so untouched pixels keep their exact bytes.
  Raster<float> values = raw;
  for (int y = 0; y < values.height(); ++y)
    for (int x = 0; x < values.width(); ++x) {
      const bool changed = result.depth.is_valid(x, y) != depth.is_valid(x, y) ||
                           result.depth.values(x, y) != depth.values(x, y);
      if (changed) values(x, y) = result.depth.is_valid(x, y) ? result.depth.values(x, y) : 0.f;
    }
  io::write_file(out, io::write_pfm(values));
  if (result.degenerate_fit) {
    spdlog::warn("{}: {}; depth passed through", depth_path.string(), result.diagnostic);
    return true;
  }
  spdlog::info("a={} b={} inliers={} rms={} refined={}", result.mapping->a, result.mapping->b,
               result.mapping->num_inliers, result.mapping->residual_rms, result.refined_pixels);
  return false;
}

std::size_t run_fuse(const fs::path& scene_dir, const fs::path& depth_dir, const fs::path& out_ply,
                     const PipelineConfig& cfg, unsigned jobs) {
  const io::SceneLayout layout = io::discover_scene(scene_dir);
  const io::LoadedScene loaded = io::load_scene(layout);
  std::vector<FusionView> views(layout.size());
  parallel_for(layout.size(), jobs, [&](std::size_t v) {
    FusionView& view = views[v];
    view.image = loaded.images[v];
    view.camera = loaded.scene.cameras[v];
    view.depth = io::load_depth(depth_dir / "depths" / stem_pfm(v));
    const fs::path conf = depth_dir / "confidence" / stem_pfm(v);
    view.confidence = fs::exists(conf) ? io::load_pfm(conf) : ConfidenceMap(view.depth.size(), 1.f);
  });
  const FusionResult fused = fuse(views, cfg.fusion);
  for (const auto& d : fused.diagnostics) spdlog::warn("{}", d);
  io::write_file(out_ply, io::write_ply(fused.cloud));
  spdlog::info("fused {} points", fused.cloud.size());
  if (fused.cloud.empty()) throw EmptyOutput("fused point cloud is empty");
  return fused.cloud.size();
}

CloudMetrics run_eval(const fs::path& recon, const fs::path& gt, const PipelineConfig& cfg,
                      const std::optional<fs::path>& report) {
  const auto load = [](const fs::path& p) {
    const std::string bytes = io::read_file(p);
    return io::with_file_context(p, [&] { return io::read_ply(bytes); });
  };
  const PointCloud a = load(recon);
  const PointCloud b = load(gt);
  const CloudMetrics m = cloud_distance_metrics(a, b, cfg.max_dist, cfg.fscore_threshold);
  if (report) {
    io::write_file(fs::path(report->string() + ".txt"), to_key_value(m));
    const json j{{"accuracy", m.accuracy},   {"completeness", m.completeness},
                 {"overall", m.overall},     {"precision", m.precision},
                 {"recall", m.recall},       {"fscore", m.fscore},
                 {"threshold", m.threshold}, {"max_dist", m.max_dist}};
    io::write_file(fs::path(report->string() + ".json"), dump(j));
  }
  return m;
}

double run_diff(const fs::path& a, const fs::path& b) {
  std::vector<std::pair<fs::path, fs::path>> files;
  if (fs::is_directory(a)) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(a))
      if (e.path().extension() == ".pfm") names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) {
      if (!fs::exists(b / n)) throw Error("missing in " + b.string() + ": " + n.string());
      files.emplace_back(a / n, b / n);
    }
  } else {
    files.emplace_back(a, b);
  }
  std::size_t total = 0;
  std::size_t changed = 0;
  for (const auto& [fa, fb] : files) {
    const DepthMap da = io::load_depth(fa);
    const DepthMap db = io::load_depth(fb);
    if (da.size() != db.size()) throw ArgumentError("resolution differs: " + fa.string());
    for (int y = 0; y < da.height(); ++y)
      for (int x = 0; x < da.width(); ++x) {
        ++total;
        if (da.is_valid(x, y) != db.is_valid(x, y) ||
            (da.is_valid(x, y) && da.values(x, y) != db.values(x, y)))
          ++changed;
      }
  }
  if (total == 0) throw EmptyInput("nothing to compare");
  return static_cast<double>(changed) / static_cast<double>(total);
}

void run_pipeline(const fs::path& scene_dir, const std::optional<fs::path>& priors, const fs::path& out,
                  const PipelineConfig& cfg, unsigned jobs) {
  io::write_file(out / "config.json", dump(to_json(cfg)));
  const io::SceneLayout layout = io::discover_scene(scene_dir, priors);
  const bool any_prior =
      std::any_of(layout.views.begin(), layout.views.end(), [](const auto& v) { return v.prior.has_value(); });
  if (any_prior)
    run_synth(scene_dir, priors, out / "synth", cfg, jobs);
  else
    spdlog::info("no priors found, skipping sample synthesis");
  run_infer(scene_dir, priors, out / "infer", cfg, jobs);
  run_fuse(scene_dir, out / "infer", out / "fused.ply", cfg, jobs);
  if (layout.gt_cloud) {
    const CloudMetrics m = run_eval(out / "fused.ply", *layout.gt_cloud, cfg, out / "metrics");
    spdlog::info("overall={} fscore={}", m.overall, m.fscore);
  }
}

namespace {

/// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<double> temperature;
  std::optional<std::size_t> num_sources;
  std::optional<std::size_t> views;
  std::optional<double> conf_threshold;
  std::optional<int> min_views;
  std::optional<double> max_dist;
  std::optional<double> threshold;
  bool no_correction = false;
  unsigned jobs = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "JSON config file");
    cmd->add_option("--seed", seed, "Run seed");
    cmd->add_option("--tau", tau, "Confidence threshold of the correction mask");
    cmd->add_option("--temperature", temperature, "Softmin temperature");
    cmd->add_option("--num-sources", num_sources, "Source views per reference");
    cmd->add_option("-n,--views", views, "Warped views per synthesized sample");
    cmd->add_option("--conf-threshold", conf_threshold, "Fusion confidence threshold");
    cmd->add_option("--min-views", min_views, "Fusion consistent-view count, self included");
    cmd->add_option("--max-dist", max_dist, "Metric outlier distance");
    cmd->add_option("--threshold", threshold, "F-score distance threshold");
    cmd->add_flag("--no-correction", no_correction, "Disable prior-guided correction");
    cmd->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config ? load_config_file(*config) : PipelineConfig{};
    if (seed) cfg.seed = *seed;
    if (tau) cfg.tau = *tau;
    if (temperature) cfg.cascade.temperature = *temperature;
    if (num_sources) cfg.num_sources = *num_sources;
    if (views) cfg.synth_views = *views;
    if (conf_threshold) cfg.fusion.conf_threshold = *conf_threshold;
    if (min_views) cfg.fusion.min_consistent_views = *min_views;
    if (max_dist) cfg.max_dist = *max_dist;
    if (threshold) cfg.fscore_threshold = *threshold;
    if (no_correction) std::fill(cfg.cascade.correction_enabled_per_scale.begin(),
                                 cfg.cascade.correction_enabled_per_scale.end(), false);
    cfg.validate();
    return cfg;
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("priormvs");
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::info);
  if (const char* env = std::getenv("PRIORMVS_LOG")) logger->set_level(spdlog::level::from_str(env));
  spdlog::set_default_logger(logger);
}

}  // namespace

int run(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Prior-guided multi-view stereo toolkit"};
  app.require_subcommand(1);
  Overrides ov;
  fs::path scene, out, priors_dir, depth_dir, depth, confidence, prior, recon, gt, diff_a, diff_b, report;

  auto* synth = app.add_subcommand("synth", "Synthesize pseudo-labelled samples from priors");
  synth->add_option("--scene", scene, "Scene directory")->required();
  synth->add_option("--priors", priors_dir, "Prior PFM directory (default <scene>/priors)");
  synth->add_option("--out", out, "Sample tree directory")->required();

  auto* infer = app.add_subcommand("infer", "Coarse-to-fine depth inference for every view");
  infer->add_option("--scene", scene, "Scene directory")->required();
  infer->add_option("--priors", priors_dir, "Prior PFM directory (default <scene>/priors)");
  infer->add_option("--out", out, "Output directory")->required();

  auto* correct = app.add_subcommand("correct", "Prior-guided correction of one depth map");
  correct->add_option("--depth", depth, "Depth PFM")->required();
  correct->add_option("--confidence", confidence, "Confidence PFM")->required();
  correct->add_option("--prior", prior, "Prior PFM")->required();
  correct->add_option("--out", out, "Corrected depth PFM")->required();

  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse per-view depth maps into a PLY cloud");
  fuse_cmd->add_option("--scene", scene, "Scene directory")->required();
  fuse_cmd->add_option("--depths", depth_dir, "Directory with depths/ and optional confidence/")->required();
  fuse_cmd->add_option("--out", out, "Output PLY")->required();

  auto* eval = app.add_subcommand("eval", "Compare a reconstructed cloud with ground truth");
  eval->add_option("--recon", recon, "Reconstructed PLY")->required();
  eval->add_option("--gt", gt, "Ground-truth PLY")->required();
  eval->add_option("--report", report, "Writes <report>.txt and <report>.json");

  auto* diff = app.add_subcommand("diff", "Fraction of changed pixels between depth PFMs");
  diff->add_option("a", diff_a, "PFM file or directory")->required();
  diff->add_option("b", diff_b, "PFM file or directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "synth, infer, fuse and eval in one run");
  pipeline->add_option("--scene", scene, "Scene directory")->required();
  pipeline->add_option("--priors", priors_dir, "Prior PFM directory (default <scene>/priors)");
  pipeline->add_option("--out", out, "Output directory")->required();

  for (auto* cmd : {synth, infer, correct, fuse_cmd, eval, pipeline}) ov.add_to(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto priors = priors_dir.empty() ? std::nullopt : std::optional<fs::path>(priors_dir);
  try {
    if (*diff) {
      std::cout << "changed_fraction=" << io::format_double(run_diff(diff_a, diff_b)) << "\n";
      return kOk;
    }
    const PipelineConfig cfg = ov.resolve();
    if (*synth) {
      std::cout << "samples=" << run_synth(scene, priors, out, cfg, ov.jobs) << "\n";
    } else if (*infer) {
      run_infer(scene, priors, out, cfg, ov.jobs);
    } else if (*correct) {
      if (run_correct(depth, confidence, prior, out, cfg)) return kDegenerateFitExit;
    } else if (*fuse_cmd) {
      std::cout << "points=" << run_fuse(scene, depth_dir, out, cfg, ov.jobs) << "\n";
    } else if (*eval) {
      const auto r = report.empty() ? std::nullopt : std::optional<fs::path>(report);
      std::cout << to_key_value(run_eval(recon, gt, cfg, r));
    } else if (*pipeline) {
      run_pipeline(scene, priors, out, cfg, ov.jobs);
    }
    return kOk;
  } catch (const ParseError& e) {
    spdlog::error("parse error: {}", e.what());
    return kParseFailure;
  } catch (const DegenerateFit& e) {
    spdlog::error("{}", e.what());
    return kDegenerateFitExit;
  } catch (const EmptyOutput& e) {
    spdlog::error("{}", e.what());
    return kEmptyOutput;
  } catch (const EmptyInput& e) {
    spdlog::error("{}", e.what());
    return kEmptyOutput;
  } catch (const ArgumentError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}

}  // namespace priormvs::cli
