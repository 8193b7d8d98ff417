#pragma once

// The `polartof` command-line driver. Exit codes: 0 success, 1 internal or
// numerical failure, 2 configuration or usage error, 3 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "polartof/ellipsometry/ellipsometry.hpp"
#include "polartof/error.hpp"
#include "polartof/inverse/reconstruct.hpp"
#include "polartof/io/config.hpp"
#include "polartof/io/files.hpp"
#include "polartof/io/tensor_file.hpp"
#include "polartof/log.hpp"
#include "polartof/numerics/parallel.hpp"
#include "polartof/render/renderer.hpp"

namespace polartof {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

struct CliOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

namespace cli {

struct Context {
  RunConfig cfg;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

inline Context make_context(const CliOptions& opts) {
  Context ctx;
  ctx.cfg = load_run_config(opts.config);
  ctx.seed = opts.seed.value_or(ctx.cfg.seed);
  ctx.out = opts.out.empty() ? ctx.cfg.resolve(ctx.cfg.output_dir) : std::filesystem::path(opts.out);
  std::error_code ec;
  std::filesystem::create_directories(ctx.out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + ctx.out.string() + ": " + ec.message());
  return ctx;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

inline nlohmann::ordered_json cube_stats(const TransientMuellerCube& cube) {
  double lo = 0.0;
  double hi = 0.0;
  double energy = 0.0;
  if (!cube.data.empty()) lo = hi = cube.data[0];
  for (double v : cube.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    energy += v * v;
  }
  return {{"min", lo}, {"max", hi}, {"energy", energy}};
}

inline TransientMuellerCube render_absolute(const Scene& scene, const SensorConfig& sensor, RenderPart part) {
  return shift_cube(render_transient(scene, sensor, part), scene.depth);
}

inline int cmd_render(const Context& ctx) {
  const Scene scene = build_scene(ctx.cfg);
  const SensorConfig& sensor = ctx.cfg.sensor;
  const auto total = render_absolute(scene, sensor, RenderPart::All);
  const auto surface = render_absolute(scene, sensor, RenderPart::Surface);
  const auto subsurface = render_absolute(scene, sensor, RenderPart::Subsurface);
  write_cube(ctx.out / "cube.ptf", total);
  std::filesystem::create_directories(ctx.out / "scene");
  write_params(ctx.out / "scene" / "params.yaml", params_from_scene(scene, sensor));
  nlohmann::ordered_json summary;
  summary["shape"] = {total.height, total.width, total.num_bins, 4, 4};
  summary["bin_width"] = total.bin_width;
  summary["total"] = cube_stats(total);
  summary["surface"] = cube_stats(surface);
  summary["subsurface"] = cube_stats(subsurface);
  write_json(ctx.out / "render_summary.json", summary);
  log().info("render: wrote {}", (ctx.out / "cube.ptf").string());
  return kExitOk;
}

inline int cmd_capture(const Context& ctx) {
  const auto& schedule_path = RunConfig::need(ctx.cfg.schedule_file, "schedule.file");
  const PolarimetricSchedule schedule = read_schedule(ctx.cfg.resolve(schedule_path));
  const Scene scene = build_scene(ctx.cfg);
  const auto cube = render_transient(scene, ctx.cfg.sensor);
  const CaptureStack stack = simulate_capture(cube, scene, schedule, ctx.cfg.sensor, ctx.seed);
  write_captures(ctx.out / "captures.ptf", stack);
  log().info("capture: {} entries, wrote {}", stack.n, (ctx.out / "captures.ptf").string());
  return kExitOk;
}

inline int cmd_learn_angles(const Context& ctx) {
  const auto& l = ctx.cfg.learn;
  const LearnResult result = learn_schedule(static_cast<std::size_t>(l.n), l.iters, ctx.seed, l.options);
  write_schedule(ctx.out / "schedule.yaml", result.schedule);
  std::vector<std::vector<double>> rows;
  for (const auto& r : result.curve) rows.push_back({static_cast<double>(r.iter), r.loss, r.best});
  write_csv(ctx.out / "loss.csv", {"iter", "loss", "best"}, rows);
  log().info("learn-angles: loss {:.6e} -> {:.6e}, condition number {:.4f}", result.initial_loss, result.best_loss,
             condition_number(result.schedule));
  return kExitOk;
}

inline int cmd_reconstruct_mueller(const Context& ctx) {
  const auto& schedule_path = RunConfig::need(ctx.cfg.schedule_file, "schedule.file");
  const auto& capture_path = RunConfig::need(ctx.cfg.capture_input, "inputs.capture");
  const PolarimetricSchedule schedule = read_schedule(ctx.cfg.resolve(schedule_path));
  const CaptureStack stack = read_captures(ctx.cfg.resolve(capture_path));
  if (!stack.schedule_ref.empty() && stack.schedule_ref != schedule.id)
    log().warn("reconstruct-mueller: captures were taken with schedule '{}', reconstructing with '{}'", stack.schedule_ref,
               schedule.id);
  write_cube(ctx.out / "cube.ptf", reconstruct_mueller(stack, schedule));
  return kExitOk;
}

inline int cmd_reconstruct_scene(const Context& ctx) {
  const auto& cube_path = RunConfig::need(ctx.cfg.cube_input, "inputs.cube");
  if (!ctx.cfg.scene.present) throw Error(ErrorCode::Config, "'scene': missing required section (camera width, height, fov)");
  const TransientMuellerCube cube = read_cube(ctx.cfg.resolve(cube_path));
  SensorConfig sensor = ctx.cfg.sensor;
  sensor.bin_width = cube.bin_width;
  sensor.num_bins = cube.num_bins;
  ReconstructConfig rc = ctx.cfg.reconstruct;
  rc.seed = ctx.seed;
  const ReconstructResult result = reconstruct_scene(cube, ctx.cfg.camera(), sensor, rc, [](const ReconstructRecord& r) {
    if (r.iter % 100 == 0) log().info("reconstruct-scene: iter {} loss {:.6e} best {:.6e}", r.iter, r.loss, r.best);
  });
  write_params(ctx.out / "params.yaml", result.params);
  std::vector<std::vector<double>> rows;
  for (const auto& r : result.curve) rows.push_back({static_cast<double>(r.iter), r.loss, r.best});
  write_csv(ctx.out / "loss.csv", {"iter", "loss", "best"}, rows);
  if (result.masked_pixels > 0) log().warn("reconstruct-scene: {} pixel(s) without a peak were masked", result.masked_pixels);
  return kExitOk;
}

// Sums of [H]00 over all pixels per time bin.
inline std::vector<double> h00_profile(const TransientMuellerCube& cube) {
  std::vector<double> out(static_cast<std::size_t>(cube.num_bins), 0.0);
  for (std::size_t p = 0; p < cube.pixels(); ++p)
    for (int t = 0; t < cube.num_bins; ++t) out[t] += cube.at(p, t, 0, 0);
  return out;
}

inline int cmd_edit_material(const Context& ctx) {
  const auto& params_path = RunConfig::need(ctx.cfg.params_input, "inputs.params");
  if (!ctx.cfg.edit_present) throw Error(ErrorCode::Config, "'edit': missing required section");
  const SceneParams before = read_params(ctx.cfg.resolve(params_path));
  SceneParams after;
  try {
    after = edit_material(before, ctx.cfg.edit);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidParam) throw Error(ErrorCode::Config, std::string("'edit': ") + e.what());
    throw;
  }
  write_params(ctx.out / "params.yaml", after);
  const auto cube_before = render_absolute(scene_from_params(before), before.sensor, RenderPart::All);
  const auto cube_after = render_absolute(scene_from_params(after), after.sensor, RenderPart::All);
  write_cube(ctx.out / "render_before.ptf", cube_before);
  write_cube(ctx.out / "render_after.ptf", cube_after);
  const auto pb = h00_profile(cube_before);
  const auto pa = h00_profile(cube_after);
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < pb.size(); ++t)
    rows.push_back({static_cast<double>(t), before.sensor.bin_center(static_cast<int>(t)), pb[t], pa[t]});
  write_csv(ctx.out / "profile_h00.csv", {"bin", "time_s", "before", "after"}, rows);
  return kExitOk;
}

inline int cmd_export_plots(const Context& ctx) {
  const ExportSection& x = ctx.cfg.export_plots;
  if (!x.present) throw Error(ErrorCode::Config, "'export': missing required section");
  const auto input = ctx.cfg.resolve(x.input);
  if (x.kind == "mueller" || x.kind == "profile") {
    const TransientMuellerCube cube = read_cube(input);
    if (x.kind == "mueller") {
      if (x.bin < 0 || x.bin >= cube.num_bins) throw Error(ErrorCode::Config, "'export.bin': out of range");
      std::vector<double> values(cube.pixels());
      double peak = 0.0;
      for (std::size_t p = 0; p < cube.pixels(); ++p) {
        values[p] = cube.at(p, x.bin, x.entry / 4, x.entry % 4);
        peak = std::max(peak, std::fabs(values[p]));
      }
      // Signed values: mid-gray is zero.
      const auto name = "mueller_e" + std::to_string(x.entry) + "_t" + std::to_string(x.bin) + ".png";
      write_png(ctx.out / name, cube.width, cube.height, 1, to_gray(values, -peak, peak));
    } else {
      if (x.row < 0 || x.row >= cube.height || x.col < 0 || x.col >= cube.width)
        throw Error(ErrorCode::Config, "'export.pixel': out of range");
      const std::size_t p = static_cast<std::size_t>(x.row) * cube.width + x.col;
      std::vector<std::string> header{"bin", "time_s"};
      for (int e = 0; e < 16; ++e) header.push_back("m" + std::to_string(e / 4) + std::to_string(e % 4));
      std::vector<std::vector<double>> rows;
      for (int t = 0; t < cube.num_bins; ++t) {
        std::vector<double> row{static_cast<double>(t), (t + 0.5) * cube.bin_width};
        for (int e = 0; e < 16; ++e) row.push_back(cube.at(p, t, e / 4, e % 4));
        rows.push_back(std::move(row));
      }
      write_csv(ctx.out / "profile.csv", header, rows);
    }
    return kExitOk;
  }
  const SceneParams theta = read_params(input);
  const std::size_t n = theta.pixels();
  if (x.kind == "normals") {
    std::vector<unsigned char> rgb(n * 3, 0);
    for (std::size_t p = 0; p < n; ++p) {
      if (!theta.is_valid(p)) continue;
      const Vec3d& v = theta.normals[p];
      const double c[3] = {v.x, v.y, v.z};
      for (int i = 0; i < 3; ++i)
        rgb[3 * p + i] = static_cast<unsigned char>(std::lround(std::clamp(0.5 * (c[i] + 1.0), 0.0, 1.0) * 255.0));
    }
    write_png(ctx.out / "normals.png", theta.width, theta.height, 3, rgb);
    return kExitOk;
  }
  std::vector<double> values(n, std::numeric_limits<double>::quiet_NaN());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t p = 0; p < n; ++p) {
    if (!theta.is_valid(p)) continue;
    values[p] = x.kind == "depth" ? theta.depth[p] : static_cast<double>(theta.cluster_id[p]);
    lo = std::min(lo, values[p]);
    hi = std::max(hi, values[p]);
  }
  if (x.kind == "clusters") {
    lo = 0.0;
    hi = std::max(1.0, static_cast<double>(theta.clusters() - 1));
  }
  write_png(ctx.out / (x.kind + ".png"), theta.width, theta.height, 1, to_gray(values, lo, hi));
  return kExitOk;
}

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::InvalidParam: return kExitConfig;
    case ErrorCode::Io: return kExitIo;
    default: return kExitFailure;
  }
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Polarimetric time-of-flight rendering, ellipsometry and inverse rendering", "polartof"};
  app.require_subcommand(1);
  app.footer(
      "Subcommand flags:\n"
      "  --config PATH    Run configuration (YAML), required\n"
      "  --seed N         Seed override (default: config 'seed')\n"
      "  --threads N      Worker threads (default: all cores)\n"
      "  --out DIR        Output directory (default: config 'output_dir')\n\n"
      "Environment: POLARTOF_LOG=error|warn|info|debug (default warn)\n"
      "Exit codes: 0 ok, 1 runtime failure, 2 configuration or usage error, 3 I/O error");
  CliOptions opts;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const cli::Context&);
  };
  const Command commands[] = {
      {"render", "Render the transient Mueller cube of the configured scene", cli::cmd_render},
      {"capture", "Simulate rotating-ellipsometry captures with the configured schedule", cli::cmd_capture},
      {"learn-angles", "Learn a polarimetric rotation schedule", cli::cmd_learn_angles},
      {"reconstruct-mueller", "Recover the transient Mueller cube from captures", cli::cmd_reconstruct_mueller},
      {"reconstruct-scene", "Recover depth, normals and materials from a Mueller cube", cli::cmd_reconstruct_scene},
      {"edit-material", "Edit recovered materials and re-render", cli::cmd_edit_material},
      {"export-plots", "Export PNG maps and CSV profiles", cli::cmd_export_plots},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opts.config, "Run configuration (YAML)")->required();
    sub->add_option("--seed", opts.seed, "Seed override (default: config 'seed')");
    sub->add_option("--threads", opts.threads, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out, "Output directory (default: config 'output_dir')");
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  set_num_threads(opts.threads);
  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->run(cli::make_context(opts));
    } catch (const Error& e) {
      log().error("{}: {}", cmd->name, e.what());
      return cli::exit_code_for(e.code());
    } catch (const std::exception& e) {
      log().error("{}: {}", cmd->name, e.what());
      return kExitFailure;
    }
  }
  return kExitConfig;
}

}  // namespace polartof
