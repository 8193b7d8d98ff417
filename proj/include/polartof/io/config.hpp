#pragma once

// Run configuration. One YAML document drives every command; each command
// reads the sections it needs and reports missing keys by their dotted path.
// Relative paths are resolved against the directory of the config file.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polartof/ellipsometry/ellipsometry.hpp"
#include "polartof/error.hpp"
#include "polartof/inverse/reconstruct.hpp"
#include "polartof/io/yaml_util.hpp"
#include "polartof/render/scenes.hpp"

namespace polartof {

struct SceneSection {
  bool present = false;
  std::string kind = "plane";  // plane | sphere | blobs
  SyntheticSceneParams params;
};

struct LearnSection {
  int n = 20;
  int iters = 300;
  LearnOptions options;
};

struct ExportSection {
  bool present = false;
  std::string kind;  // mueller | profile | depth | normals | clusters
  std::filesystem::path input;
  int bin = 0;
  int row = 0;
  int col = 0;
  int entry = 0;
};

struct RunConfig {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  SceneSection scene;
  SensorConfig sensor;
  std::optional<std::filesystem::path> schedule_file;
  LearnSection learn;
  ReconstructConfig reconstruct;
  MaterialEdit edit;
  bool edit_present = false;
  std::optional<std::filesystem::path> cube_input;
  std::optional<std::filesystem::path> capture_input;
  std::optional<std::filesystem::path> params_input;
  ExportSection export_plots;

  Camera camera() const {
    return Camera{scene.params.width, scene.params.height, scene.params.fov, {0.0, 1.0, 0.0}};
  }

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }

  static const std::filesystem::path& need(const std::optional<std::filesystem::path>& p, const char* key) {
    if (!p) throw Error(ErrorCode::Config, std::string("'") + key + "': missing required key");
    return *p;
  }
};

namespace detail {

inline SceneKind scene_kind(const std::string& kind, const std::string& path) {
  if (kind == "plane") return SceneKind::Plane;
  if (kind == "sphere") return SceneKind::Sphere;
  if (kind == "blobs") return SceneKind::TwoMaterialBlobs;
  yaml::fail(path, "unknown scene kind '" + kind + "' (plane|sphere|blobs)");
}

inline void parse_scene(const YAML::Node& node, SceneSection& s) {
  const std::string path = "scene";
  yaml::check_keys(node, path, {"kind", "width", "height", "fov", "distance", "tilt", "radius", "blob_radius", "materials"});
  s.present = true;
  s.kind = yaml::get<std::string>(node, path, "kind", s.kind);
  scene_kind(s.kind, "scene.kind");
  auto& p = s.params;
  p.width = yaml::get<int>(node, path, "width", p.width);
  p.height = yaml::get<int>(node, path, "height", p.height);
  if (p.width < 1 || p.height < 1) yaml::fail("scene.width", "image dimensions must be >= 1");
  if (node["fov"]) p.fov = yaml::angle(node["fov"], "scene.fov");
  p.distance = yaml::get<double>(node, path, "distance", p.distance);
  if (node["tilt"]) p.tilt = yaml::angle(node["tilt"], "scene.tilt");
  p.radius = yaml::get<double>(node, path, "radius", p.radius);
  p.blob_radius = yaml::get<double>(node, path, "blob_radius", p.blob_radius);
  if (node["materials"]) p.materials = yaml::materials(node["materials"], "scene.materials");
}

inline void parse_sensor(const YAML::Node& node, SensorConfig& s) {
  yaml::check_keys(node, "sensor", {"bin_width", "num_bins", "noise_sigma", "irf_sigma"});
  if (node["bin_width"]) s.bin_width = yaml::time(node["bin_width"], "sensor.bin_width");
  s.num_bins = yaml::get<int>(node, "sensor", "num_bins", s.num_bins);
  s.noise_sigma = yaml::get<double>(node, "sensor", "noise_sigma", s.noise_sigma);
  if (node["irf_sigma"]) s.irf_sigma = yaml::time(node["irf_sigma"], "sensor.irf_sigma");
  try {
    s.validate();
  } catch (const Error& e) {
    yaml::fail("sensor", e.what());
  }
}

inline void parse_learn(const YAML::Node& node, LearnSection& l) {
  const std::string path = "learn";
  yaml::check_keys(node, path, {"n", "iters", "lr", "init", "training_size", "noise_sigma"});
  l.n = yaml::get<int>(node, path, "n", l.n);
  l.iters = yaml::get<int>(node, path, "iters", l.iters);
  l.options.lr = yaml::get<double>(node, path, "lr", l.options.lr);
  l.options.training_size = yaml::get<std::size_t>(node, path, "training_size", l.options.training_size);
  l.options.noise_sigma = yaml::get<double>(node, path, "noise_sigma", l.options.noise_sigma);
  const std::string init = yaml::get<std::string>(node, path, "init", "uniform");
  if (init == "uniform") l.options.init = ScheduleInit::Uniform;
  else if (init == "zeros") l.options.init = ScheduleInit::Zeros;
  else if (init == "random") l.options.init = ScheduleInit::Random;
  else yaml::fail("learn.init", "expected uniform|zeros|random");
  if (l.n < 1) yaml::fail("learn.n", "must be >= 1");
  if (l.iters < 0) yaml::fail("learn.iters", "must be >= 0");
  if (!(l.options.lr > 0.0)) yaml::fail("learn.lr", "must be positive");
}

inline void parse_weights(const YAML::Node& node, WeightConfig& w) {
  const std::string path = "weights";
  yaml::check_keys(node, path, {"w_diag", "w_offdiag", "edge_threshold", "lambda_reg"});
  w.w_diag = yaml::get<double>(node, path, "w_diag", w.w_diag);
  w.w_offdiag = yaml::get<double>(node, path, "w_offdiag", w.w_offdiag);
  w.edge_threshold = yaml::get<double>(node, path, "edge_threshold", w.edge_threshold);
  w.lambda_reg = yaml::get<double>(node, path, "lambda_reg", w.lambda_reg);
  try {
    w.validate();
  } catch (const Error& e) {
    yaml::fail(path, e.what());
  }
}

inline void parse_reconstruct(const YAML::Node& node, ReconstructConfig& r) {
  const std::string path = "reconstruct";
  yaml::check_keys(node, path,
                   {"k", "iters", "lr", "depth_lr_scale", "relative_amplitude_lr", "final_lr_fraction", "freeze_depth",
                    "init_eta", "init_m"});
  r.k = yaml::get<int>(node, path, "k", r.k);
  r.iters = yaml::get<int>(node, path, "iters", r.iters);
  r.lr = yaml::get<double>(node, path, "lr", r.lr);
  r.depth_lr_scale = yaml::get<double>(node, path, "depth_lr_scale", r.depth_lr_scale);
  r.relative_amplitude_lr = yaml::get<bool>(node, path, "relative_amplitude_lr", r.relative_amplitude_lr);
  r.final_lr_fraction = yaml::get<double>(node, path, "final_lr_fraction", r.final_lr_fraction);
  r.freeze_depth = yaml::get<bool>(node, path, "freeze_depth", r.freeze_depth);
  r.init_eta = yaml::get<double>(node, path, "init_eta", r.init_eta);
  r.init_m = yaml::get<double>(node, path, "init_m", r.init_m);
  if (r.k < 1) yaml::fail("reconstruct.k", "must be >= 1");
  if (r.iters < 0) yaml::fail("reconstruct.iters", "must be >= 0");
  if (!(r.lr > 0.0)) yaml::fail("reconstruct.lr", "must be positive");
  if (!(r.final_lr_fraction > 0.0 && r.final_lr_fraction <= 1.0)) yaml::fail("reconstruct.final_lr_fraction", "must lie in (0, 1]");
  if (!(r.init_eta > 1.0 && r.init_eta < 3.0)) yaml::fail("reconstruct.init_eta", "must lie in (1, 3)");
  if (!(r.init_m > kMinRoughness && r.init_m < 1.0)) yaml::fail("reconstruct.init_m", "must lie in (1e-3, 1)");
}

inline BankEdit parse_bank_edit(const YAML::Node& node, const std::string& path) {
  yaml::check_keys(node, path, {"scale_a", "shift_mu"});
  BankEdit e;
  e.scale_a = yaml::get<double>(node, path, "scale_a", e.scale_a);
  if (node["shift_mu"])
    e.shift_mu = yaml::four(node["shift_mu"], yaml::join(path, "shift_mu"),
                            [](const YAML::Node& n, const std::string& p) { return yaml::scalar<double>(n, p); });
  return e;
}

inline void parse_edit(const YAML::Node& node, MaterialEdit& e) {
  yaml::check_keys(node, "edit", {"cluster", "surface", "subsurface", "set_m"});
  if (node["cluster"]) e.cluster = yaml::scalar<int>(node["cluster"], "edit.cluster");
  if (node["surface"]) e.surface = parse_bank_edit(node["surface"], "edit.surface");
  if (node["subsurface"]) e.subsurface = parse_bank_edit(node["subsurface"], "edit.subsurface");
  if (node["set_m"]) e.set_m = yaml::scalar<double>(node["set_m"], "edit.set_m");
}

inline void parse_export(const YAML::Node& node, ExportSection& x) {
  const std::string path = "export";
  yaml::check_keys(node, path, {"kind", "input", "bin", "pixel", "entry"});
  x.present = true;
  x.kind = yaml::scalar<std::string>(yaml::require(node, path, "kind"), "export.kind");
  if (x.kind != "mueller" && x.kind != "profile" && x.kind != "depth" && x.kind != "normals" && x.kind != "clusters")
    yaml::fail("export.kind", "expected mueller|profile|depth|normals|clusters");
  x.input = yaml::scalar<std::string>(yaml::require(node, path, "input"), "export.input");
  x.bin = yaml::get<int>(node, path, "bin", 0);
  x.entry = yaml::get<int>(node, path, "entry", 0);
  if (node["pixel"]) {
    const YAML::Node px = node["pixel"];
    if (!px.IsSequence() || px.size() != 2) yaml::fail("export.pixel", "expected [row, col]");
    x.row = yaml::scalar<int>(px[0], "export.pixel[0]");
    x.col = yaml::scalar<int>(px[1], "export.pixel[1]");
  }
  if (x.entry < 0 || x.entry > 15) yaml::fail("export.entry", "Mueller entry index must lie in [0, 15]");
}

inline std::filesystem::path parse_path(const YAML::Node& node, const std::string& path) {
  const auto s = yaml::scalar<std::string>(node, path);
  if (s.empty()) yaml::fail(path, "empty path");
  return s;
}

}  // namespace detail

inline RunConfig parse_run_config(const YAML::Node& root, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  yaml::check_keys(root, "",
                   {"seed", "output_dir", "scene", "sensor", "schedule", "learn", "reconstruct", "weights", "edit",
                    "inputs", "export"});
  cfg.seed = yaml::get<std::uint64_t>(root, "", "seed", cfg.seed);
  if (root["output_dir"]) cfg.output_dir = detail::parse_path(root["output_dir"], "output_dir");
  if (root["scene"]) detail::parse_scene(root["scene"], cfg.scene);
  if (root["sensor"]) detail::parse_sensor(root["sensor"], cfg.sensor);
  if (const auto s = root["schedule"]) {
    yaml::check_keys(s, "schedule", {"file"});
    if (s["file"]) cfg.schedule_file = detail::parse_path(s["file"], "schedule.file");
  }
  if (root["learn"]) detail::parse_learn(root["learn"], cfg.learn);
  if (root["reconstruct"]) detail::parse_reconstruct(root["reconstruct"], cfg.reconstruct);
  if (root["weights"]) detail::parse_weights(root["weights"], cfg.reconstruct.weights);
  if (root["edit"]) {
    detail::parse_edit(root["edit"], cfg.edit);
    cfg.edit_present = true;
  }
  if (const auto in = root["inputs"]) {
    yaml::check_keys(in, "inputs", {"cube", "capture", "params"});
    if (in["cube"]) cfg.cube_input = detail::parse_path(in["cube"], "inputs.cube");
    if (in["capture"]) cfg.capture_input = detail::parse_path(in["capture"], "inputs.capture");
    if (in["params"]) cfg.params_input = detail::parse_path(in["params"], "inputs.params");
  }
  if (root["export"]) detail::parse_export(root["export"], cfg.export_plots);
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "config file not found: " + path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::Io, "cannot read config file: " + path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  return parse_run_config(root, path.parent_path());
}

inline Scene build_scene(const RunConfig& cfg) {
  if (!cfg.scene.present) throw Error(ErrorCode::Config, "'scene': missing required section");
  try {
    return make_synthetic_scene(detail::scene_kind(cfg.scene.kind, "scene.kind"), cfg.scene.params);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidParam) throw Error(ErrorCode::Config, std::string("'scene': ") + e.what());
    throw;
  }
}

}  // namespace polartof
