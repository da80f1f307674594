#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "priormvs/correction.hpp"
#include "priormvs/error.hpp"
#include "priormvs/io/cam.hpp"
#include "priormvs/io/image.hpp"
#include "priormvs/io/pair.hpp"
#include "priormvs/io/pfm.hpp"
#include "priormvs/prior.hpp"
#include "priormvs/scene.hpp"

namespace priormvs::io {

namespace fs = std::filesystem;

/// Zero-padded 8-digit file stem used for every per-view file.
inline std::string view_stem(std::size_t id) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%08zu", id);
  return buf;
}

struct ViewFiles {
  fs::path image;
  fs::path cam;
  std::optional<fs::path> prior;
  std::optional<fs::path> gt_depth;
  std::optional<fs::path> sparse;
};

/// On-disk scene:
///
///   images/00000000.png|ppm   cams/00000000_cam.txt   pair.txt (optional)
///   priors/00000000.pfm       depths_gt/00000000.pfm  sparse/00000000.txt
///   gt.ply (optional ground-truth cloud)
struct SceneLayout {
  fs::path root;
  std::vector<ViewFiles> views;
  std::optional<fs::path> pair;
  std::optional<fs::path> gt_cloud;

  std::size_t size() const noexcept { return views.size(); }
};

inline std::optional<fs::path> existing(const fs::path& p) {
  return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
}

/// Finds every view from the cam files; ids must be dense from 0. Priors are
/// looked up in `priors_dir` when given, else in root/priors.
inline SceneLayout discover_scene(const fs::path& root,
                                  const std::optional<fs::path>& priors_dir = std::nullopt) {
  const fs::path cams = root / "cams";
  if (!fs::is_directory(cams)) throw Error("scene has no cams directory: " + cams.string());
  std::map<std::size_t, fs::path> cam_files;
  for (const auto& entry : fs::directory_iterator(cams)) {
    const std::string name = entry.path().filename().string();
    constexpr std::string_view suffix = "_cam.txt";
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    const auto id = parse_int(std::string_view(name).substr(0, name.size() - suffix.size()));
    if (!id || *id < 0) continue;
    cam_files[static_cast<std::size_t>(*id)] = entry.path();
  }
  SceneLayout layout;
  layout.root = root;
  std::size_t expected = 0;
  const fs::path priors = priors_dir.value_or(root / "priors");
  for (const auto& [id, cam] : cam_files) {
    if (id != expected) throw Error("view ids must be dense; missing view " + std::to_string(expected));
    ++expected;
    ViewFiles files;
    files.cam = cam;
    const std::string stem = view_stem(id);
    for (const char* ext : {".png", ".ppm"}) {
      const fs::path p = root / "images" / (stem + ext);
      if (fs::exists(p)) {
        files.image = p;
        break;
      }
    }
    if (files.image.empty()) throw Error("no image for view " + std::to_string(id));
    files.prior = existing(priors / (stem + ".pfm"));
    files.gt_depth = existing(root / "depths_gt" / (stem + ".pfm"));
    files.sparse = existing(root / "sparse" / (stem + ".txt"));
    layout.views.push_back(std::move(files));
  }
  if (layout.views.empty()) throw Error("scene has no views: " + root.string());
  layout.pair = existing(root / "pair.txt");
  layout.gt_cloud = existing(root / "gt.ply");
  return layout;
}

template <typename F>
auto with_file_context(const fs::path& path, F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

inline CameraView load_cam(const fs::path& path, ImageSize size) {
  const std::string text = read_file(path);
  return with_file_context(path, [&] { return parse_cam(text, size); });
}

inline Raster<float> load_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  return with_file_context(path, [&] { return read_pfm(bytes); });
}

inline PriorMap load_prior(const fs::path& path) {
  try {
    return PriorMap::from_raster(load_pfm(path));
  } catch (const ArgumentError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline DepthMap load_depth(const fs::path& path) { return DepthMap::from_values(load_pfm(path)); }

/// One "u v depth" triple per line; '#' starts a comment line.
inline std::vector<SparsePoint> parse_sparse(std::string_view text) {
  std::vector<SparsePoint> points;
  for (const auto& line : tokenized_lines(text)) {
    if (line.tokens[0].starts_with('#')) continue;
    if (line.tokens.size() != 3) throw ParseError("expected 'u v depth'", line.number);
    points.push_back({{require_double(line.tokens[0], line.number),
                       require_double(line.tokens[1], line.number)},
                      require_double(line.tokens[2], line.number)});
  }
  return points;
}

/// Images and calibrated cameras of every view, plus the pair list when present.
struct LoadedScene {
  Scene scene;
  std::vector<ColorImage> images;
};

inline LoadedScene load_scene(const SceneLayout& layout) {
  LoadedScene loaded;
  for (const auto& view : layout.views) {
    loaded.images.push_back(load_image(view.image));
    loaded.scene.cameras.push_back(load_cam(view.cam, loaded.images.back().size()));
  }
  if (layout.pair) {
    const std::string text = read_file(*layout.pair);
    loaded.scene.pairs = with_file_context(*layout.pair, [&] { return parse_pair(text); });
    if (loaded.scene.pairs->size() != layout.size())
      throw ParseError(layout.pair->string() + ": view count does not match the scene");
  }
  return loaded;
}

}  // namespace priormvs::io
