#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cli/config.hpp"
#include "priormvs/metrics.hpp"

namespace priormvs::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParseFailure = 3,
  kDegenerateFitExit = 4,
  kEmptyOutput = 5,
};

/// Thrown by stages that finished but produced nothing usable.
struct EmptyOutput : Error {
  using Error::Error;
};

/// Writes one sample tree per reference view with a prior. Returns the number
/// of samples written.
std::size_t run_synth(const fs::path& scene, const std::optional<fs::path>& priors,
                      const fs::path& out, const PipelineConfig& cfg, unsigned jobs);

/// Per-view depth and confidence PFMs under out/depths and out/confidence,
/// plus out/infer_report.txt.
void run_infer(const fs::path& scene, const std::optional<fs::path>& priors, const fs::path& out,
               const PipelineConfig& cfg, unsigned jobs);

/// Corrects one depth map. Returns true when the fit was degenerate and the
/// input was passed through.
bool run_correct(const fs::path& depth, const fs::path& confidence, const fs::path& prior,
                 const fs::path& out, const PipelineConfig& cfg);

/// Fuses the maps under depth_dir/depths (and depth_dir/confidence when present).
std::size_t run_fuse(const fs::path& scene, const fs::path& depth_dir, const fs::path& out_ply,
                     const PipelineConfig& cfg, unsigned jobs);

CloudMetrics run_eval(const fs::path& recon, const fs::path& gt, const PipelineConfig& cfg,
                      const std::optional<fs::path>& report);

/// Fraction of pixels whose depth differs (value or validity) between two
/// PFMs, or between same-named PFMs of two directories.
double run_diff(const fs::path& a, const fs::path& b);

void run_pipeline(const fs::path& scene, const std::optional<fs::path>& priors, const fs::path& out,
                  const PipelineConfig& cfg, unsigned jobs);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace priormvs::cli
