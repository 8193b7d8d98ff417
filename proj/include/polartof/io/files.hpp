#pragma once

// Schedule files, scene-parameter files with their per-pixel maps, PNG and
// CSV export.

#include <png.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "polartof/ellipsometry/schedule.hpp"
#include "polartof/error.hpp"
#include "polartof/inverse/scene_params.hpp"
#include "polartof/io/tensor_file.hpp"
#include "polartof/io/yaml_util.hpp"

namespace polartof {

namespace detail {
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

inline YAML::Node load_yaml(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "file not found: " + path.string());
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::Io, "cannot read: " + path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
}
}  // namespace detail

/// Schedule file: id, angle unit and one [hwp, qwp, analyzer qwp, lp] row per entry.
inline void write_schedule(const std::filesystem::path& path, const PolarimetricSchedule& schedule) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "id" << YAML::Value << schedule.id;
  out << YAML::Key << "units" << YAML::Value << "deg";
  out << YAML::Key << "entries" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : schedule.entries) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double a : e) out << yaml::format(a * 180.0 / std::numbers::pi);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq << YAML::EndMap;
  detail::write_text(path, std::string(out.c_str()) + "\n");
}

inline PolarimetricSchedule read_schedule(const std::filesystem::path& path) {
  const YAML::Node root = detail::load_yaml(path);
  const std::string where = path.filename().string();
  yaml::check_keys(root, where, {"id", "units", "entries"});
  PolarimetricSchedule s;
  s.id = yaml::get<std::string>(root, where, "id", s.id);
  const auto units = yaml::scalar<std::string>(yaml::require(root, where, "units"), where + ".units");
  double factor = 1.0;
  if (units == "deg") factor = std::numbers::pi / 180.0;
  else if (units != "rad") yaml::fail(where + ".units", "expected deg or rad");
  const YAML::Node entries = yaml::require(root, where, "entries");
  if (!entries.IsSequence() || entries.size() == 0) yaml::fail(where + ".entries", "expected a non-empty list");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string p = where + ".entries[" + std::to_string(i) + "]";
    if (!entries[i].IsSequence() || entries[i].size() != 4) yaml::fail(p, "expected 4 angles");
    ScheduleEntry e{};
    for (std::size_t j = 0; j < 4; ++j) e[j] = yaml::scalar<double>(entries[i][j], p) * factor;
    s.entries.push_back(e);
  }
  return s;
}

/// Writes params.yaml plus depth.ptf [H, W], normals.ptf [H, W, 3] and
/// clusters.ptf [H, W] next to it. Masked pixels are NaN in every map.
inline void write_params(const std::filesystem::path& path, const SceneParams& theta) {
  const auto dir = path.parent_path();
  const std::size_t n = theta.pixels();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  TensorFile depth;
  depth.shape = {theta.height, theta.width};
  depth.units = "m";
  depth.bin_width = theta.sensor.bin_width;
  TensorFile normals = depth;
  normals.shape = {theta.height, theta.width, 3};
  normals.units = "1";
  TensorFile clusters = depth;
  clusters.units = "label";
  for (std::size_t p = 0; p < n; ++p) {
    const bool ok = theta.is_valid(p);
    depth.data.push_back(ok ? static_cast<float>(theta.depth[p]) : nan);
    normals.data.push_back(ok ? static_cast<float>(theta.normals[p].x) : nan);
    normals.data.push_back(ok ? static_cast<float>(theta.normals[p].y) : nan);
    normals.data.push_back(ok ? static_cast<float>(theta.normals[p].z) : nan);
    clusters.data.push_back(ok ? static_cast<float>(theta.cluster_id[p]) : nan);
  }
  write_tensor(dir / "depth.ptf", depth);
  write_tensor(dir / "normals.ptf", normals);
  write_tensor(dir / "clusters.ptf", clusters);

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "width" << YAML::Value << theta.width;
  out << YAML::Key << "height" << YAML::Value << theta.height;
  out << YAML::Key << "fov" << YAML::Value << yaml::format(theta.camera.fov) + " rad";
  out << YAML::Key << "sensor" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bin_width" << YAML::Value << yaml::seconds(theta.sensor.bin_width);
  out << YAML::Key << "num_bins" << YAML::Value << theta.sensor.num_bins;
  out << YAML::EndMap;
  out << YAML::Key << "maps" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "depth" << YAML::Value << "depth.ptf";
  out << YAML::Key << "normals" << YAML::Value << "normals.ptf";
  out << YAML::Key << "clusters" << YAML::Value << "clusters.ptf";
  out << YAML::EndMap;
  out << YAML::Key << "materials" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : theta.materials) yaml::emit_material(out, m);
  out << YAML::EndSeq << YAML::EndMap;
  detail::write_text(path, std::string(out.c_str()) + "\n");
}

inline SceneParams read_params(const std::filesystem::path& path) {
  const YAML::Node root = detail::load_yaml(path);
  const std::string where = path.filename().string();
  yaml::check_keys(root, where, {"width", "height", "fov", "sensor", "maps", "materials"});
  SceneParams theta;
  theta.width = yaml::scalar<int>(yaml::require(root, where, "width"), where + ".width");
  theta.height = yaml::scalar<int>(yaml::require(root, where, "height"), where + ".height");
  if (theta.width < 1 || theta.height < 1) yaml::fail(where + ".width", "image dimensions must be >= 1");
  theta.camera = Camera{theta.width, theta.height, yaml::angle(yaml::require(root, where, "fov"), where + ".fov"), {0.0, 1.0, 0.0}};
  const YAML::Node sensor = yaml::require(root, where, "sensor");
  yaml::check_keys(sensor, where + ".sensor", {"bin_width", "num_bins"});
  theta.sensor.bin_width = yaml::time(yaml::require(sensor, where + ".sensor", "bin_width"), where + ".sensor.bin_width");
  theta.sensor.num_bins = yaml::scalar<int>(yaml::require(sensor, where + ".sensor", "num_bins"), where + ".sensor.num_bins");
  const YAML::Node maps = yaml::require(root, where, "maps");
  yaml::check_keys(maps, where + ".maps", {"depth", "normals", "clusters"});
  theta.materials = yaml::materials(yaml::require(root, where, "materials"), where + ".materials");
  if (theta.materials.empty()) yaml::fail(where + ".materials", "at least one material is required");

  const auto dir = path.parent_path();
  auto load_map = [&](const char* key, std::size_t channels) {
    const auto file = yaml::scalar<std::string>(yaml::require(maps, where + ".maps", key), where + ".maps." + key);
    TensorFile t = read_tensor(dir / file);
    if (t.count() != theta.pixels() * channels) throw Error(ErrorCode::ShapeMismatch, std::string(key) + " map has the wrong size");
    return t;
  };
  const TensorFile depth = load_map("depth", 1);
  const TensorFile normals = load_map("normals", 3);
  const TensorFile clusters = load_map("clusters", 1);
  const std::size_t n = theta.pixels();
  theta.view_dirs.resize(n);
  theta.valid.assign(n, 1);
  theta.depth.resize(n);
  theta.normals.resize(n);
  theta.cluster_id.assign(n, 0);
  for (int r = 0; r < theta.height; ++r)
    for (int c = 0; c < theta.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * theta.width + c;
      theta.view_dirs[p] = theta.camera.ray(r, c);
      theta.depth[p] = depth.data[p];
      theta.normals[p] = normalized(Vec3d{normals.data[3 * p], normals.data[3 * p + 1], normals.data[3 * p + 2]});
      if (!std::isfinite(theta.depth[p]) || !std::isfinite(clusters.data[p]) || !std::isfinite(theta.normals[p].x)) {
        theta.valid[p] = 0;
        continue;
      }
      const auto label = static_cast<int>(clusters.data[p]);
      if (label < 0 || static_cast<std::size_t>(label) >= theta.materials.size())
        throw Error(ErrorCode::Config, "cluster label out of range in " + path.string());
      theta.cluster_id[p] = label;
    }
  unconstrain(theta);
  return theta;
}

/// 8-bit PNG, gray (channels 1) or RGB (channels 3), rows top to bottom.
inline void write_png(const std::filesystem::path& path, int width, int height, int channels,
                      const std::vector<unsigned char>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
    throw Error(ErrorCode::ShapeMismatch, "PNG pixel buffer has the wrong size");
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::Io, "PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, pixels.data() + static_cast<std::size_t>(r) * width * channels);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

/// Maps values to 0..255 over [lo, hi]; NaN becomes 0.
inline std::vector<unsigned char> to_gray(const std::vector<double>& values, double lo, double hi) {
  std::vector<unsigned char> out(values.size(), 0);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    out[i] = static_cast<unsigned char>(std::lround(std::clamp((values[i] - lo) / span, 0.0, 1.0) * 255.0));
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + yaml::format(row[i]);
    text += "\n";
  }
  detail::write_text(path, text);
}

}  // namespace polartof
