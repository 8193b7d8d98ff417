#include <set>

#include "test_util.hpp"

#include "polartof/ellipsometry/ellipsometry.hpp"
#include "polartof/numerics/parallel.hpp"
#include "polartof/render/renderer.hpp"
#include "polartof/render/scenes.hpp"

namespace polartof {
namespace {

using test::kPi;

TimeGaussBank uniform_bank(double a, double mu, double sigma) {
  TimeGaussBank b;
  b.a = {a, a, a, a};
  b.mu = {mu, mu, mu, mu};
  b.sigma = {sigma, sigma, sigma, sigma};
  return b;
}

Scene single_pixel(const Material& mat, double depth) {
  Scene s;
  s.width = s.height = 1;
  s.camera = Camera{1, 1, 0.1, {0, 1, 0}};
  s.depth = {depth};
  s.view_dirs = {Vec3d{0, 0, 1}};
  s.normals = {Vec3d{0, 0, -1}};
  s.cluster_id = {0};
  s.materials = {mat};
  return s;
}

Material plane_material() {
  Material m;
  m.eta = 1.6;
  m.m = 0.35;
  m.surface = uniform_bank(5.0, 10e-12, 15e-12);
  m.surface.a = {5.0, 4.0, 3.5, 3.0};
  m.subsurface.a = {0.2, 0.1, 0.08, 0.05};
  m.subsurface.mu = {200e-12, 190e-12, 180e-12, 170e-12};
  m.subsurface.sigma = {50e-12, 50e-12, 50e-12, 50e-12};
  return m;
}

Scene small_plane(int size = 8) {
  SyntheticSceneParams p;
  p.width = p.height = size;
  p.fov = 0.4;
  p.distance = 0.5;
  p.tilt = 0.3;
  p.materials = {plane_material()};
  return make_synthetic_scene(SceneKind::Plane, p);
}

TEST(RenderTransient, ZeroBanksGiveZeroCube) {
  SyntheticSceneParams p;
  p.width = p.height = 4;
  Material m = plane_material();
  m.surface.a = {0, 0, 0, 0};
  m.subsurface.a = {0, 0, 0, 0};
  p.materials = {m};
  SensorConfig sensor;
  sensor.num_bins = 64;
  const auto cube = render_transient(make_synthetic_scene(SceneKind::Plane, p), sensor);
  for (double v : cube.data) EXPECT_EQ(v, 0.0);
}

TEST(RenderTransient, FirstBinOfNarrowSurfaceLobe) {
  Material m;
  m.eta = 1.5;
  m.m = 1.0;
  m.surface = uniform_bank(1.0, 0.0, 4e-12);
  m.subsurface = uniform_bank(0.0, 0.0, 4e-12);
  SensorConfig sensor;
  sensor.num_bins = 8;
  const auto cube = render_transient(single_pixel(m, 1.0), sensor);
  const double prefactor = (1.0 / kPi) / 4.0 * 0.04;
  const double factor = std::exp(-(12.5 * 12.5) / (2 * 4.0 * 4.0));
  EXPECT_NEAR(factor, 7.6e-3, 1e-4);
  EXPECT_NEAR(cube.at(0, 0, 0, 0), prefactor * factor, 1e-15);
}

TEST(RenderTransient, DoublingSurfaceBankDoublesSurfacePart) {
  Scene scene = small_plane(4);
  scene.materials[0].surface = uniform_bank(1.5, 20e-12, 15e-12);
  SensorConfig sensor;
  sensor.num_bins = 32;
  const auto one = render_transient(scene, sensor, RenderPart::Surface);
  scene.materials[0].surface = uniform_bank(3.0, 20e-12, 15e-12);
  const auto two = render_transient(scene, sensor, RenderPart::Surface);
  for (std::size_t i = 0; i < one.data.size(); ++i)
    EXPECT_NEAR(two.data[i], 2.0 * one.data[i], 1e-15 * std::fabs(two.data[i]) + 1e-300);
}

TEST(RenderTransient, PartsSumToTotal) {
  const Scene scene = small_plane(4);
  SensorConfig sensor;
  sensor.num_bins = 64;
  const auto all = render_transient(scene, sensor);
  const auto s = render_transient(scene, sensor, RenderPart::Surface);
  const auto ss = render_transient(scene, sensor, RenderPart::Subsurface);
  for (std::size_t i = 0; i < all.data.size(); ++i)
    EXPECT_NEAR(all.data[i], s.data[i] + ss.data[i], 1e-14 * (1 + std::fabs(all.data[i])));
}

TEST(RenderTransient, VoxelsArePhysical) {
  // Shared sub-surface mu keeps every bank non-amplifying at all delays.
  Scene scene = small_plane(6);
  scene.materials[0].subsurface.mu = {200e-12, 200e-12, 200e-12, 200e-12};
  SensorConfig sensor;
  sensor.num_bins = 48;
  const auto cube = render_transient(scene, sensor);
  for (std::size_t p = 0; p < cube.pixels(); ++p)
    for (int t = 0; t < cube.num_bins; ++t) {
      MuellerMatrix m;
      for (int e = 0; e < 16; ++e) m.m[e] = cube.pixel(p)[t * 16 + e];
      if (m(0, 0) < 1e-300) continue;
      m *= 1.0 / m(0, 0);
      EXPECT_TRUE(is_physical(m, 1e-9)) << "pixel " << p << " bin " << t;
    }
}

TEST(SimulateCapture, IdentityWithZeroAngles) {
  const double bw = 25e-12;
  const int bins = 40;
  // Depth of exactly 10 bins round trip.
  Scene scene = single_pixel(plane_material(), 10 * kSpeedOfLight * bw / 2);
  TransientMuellerCube cube(1, 1, bins, bw);
  for (int i = 0; i < 4; ++i) cube.at(0, 5, i, i) = 1.0;
  PolarimetricSchedule sched;
  sched.entries = {{0, 0, 0, 0}};
  SensorConfig sensor;
  sensor.noise_sigma = 0;
  sensor.num_bins = bins;
  const auto cap = simulate_capture(cube, scene, sched, sensor, 1);
  EXPECT_NEAR(cap.at(0, 0, 15), 1.0, 1e-9);
  EXPECT_NEAR(cap.at(0, 0, 14) + cap.at(0, 0, 16), 0.0, 1e-9);
}

TEST(SimulateCapture, DepthOnePointFiveMetersPeaksAtBin400) {
  const double bw = 25e-12;
  const int bins = 512;
  Scene scene = single_pixel(plane_material(), 1.5);
  TransientMuellerCube cube(1, 1, bins, bw);
  for (int i = 0; i < 4; ++i) cube.at(0, 0, i, i) = 1.0;
  PolarimetricSchedule sched;
  sched.entries = {{0, 0, 0, 0}};
  SensorConfig sensor;
  sensor.noise_sigma = 0;
  sensor.num_bins = bins;
  const auto cap = simulate_capture(cube, scene, sched, sensor, 1);
  int best = 0;
  for (int t = 1; t < bins; ++t)
    if (cap.at(0, 0, t) > cap.at(0, 0, best)) best = t;
  EXPECT_EQ(best, 400);
  EXPECT_EQ(best, static_cast<int>(std::lround(2 * 1.5 / kSpeedOfLight / bw)));
}

TEST(SimulateCapture, SeededAndThreadIndependent) {
  const Scene scene = small_plane(8);
  SensorConfig sensor;
  sensor.num_bins = 128;
  sensor.irf_sigma = 30e-12;
  const auto cube = render_transient(scene, sensor);
  const auto sched = uniform_initial_schedule(16);
  set_num_threads(1);
  const auto a = simulate_capture(cube, scene, sched, sensor, 99);
  set_num_threads(4);
  const auto b = simulate_capture(cube, scene, sched, sensor, 99);
  const auto cube4 = render_transient(scene, sensor);
  set_num_threads(0);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(cube.data, cube4.data);
  const auto c = simulate_capture(cube, scene, sched, sensor, 100);
  EXPECT_NE(a.data, c.data);
}

TEST(SimulateCapture, NoiselessRoundTripThroughReconstruction) {
  const Scene scene = small_plane(6);
  SensorConfig sensor;
  sensor.num_bins = 256;
  sensor.noise_sigma = 0;
  const auto cube = render_transient(scene, sensor);
  const auto sched = uniform_initial_schedule(20);
  const auto cap = simulate_capture(cube, scene, sched, sensor, 3);
  const auto rec = reconstruct_mueller(cap, sched);
  const auto truth = shift_cube(cube, scene.depth);
  int checked = 0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (std::fabs(truth.data[i]) <= 1e-9) continue;
    EXPECT_LT(std::fabs(rec.data[i] - truth.data[i]) / std::fabs(truth.data[i]), 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(SimulateCapture, ShiftPreservesEnergy) {
  const Scene scene = small_plane(6);
  SensorConfig sensor;
  sensor.num_bins = 256;
  sensor.noise_sigma = 0;
  const auto cube = render_transient(scene, sensor);
  const auto sched = uniform_initial_schedule(16);
  const auto cap = simulate_capture(cube, scene, sched, sensor, 3);
  const auto rows = measurement_matrix(sched);
  for (std::size_t p = 0; p < cube.pixels(); ++p)
    for (int i = 0; i < 16; ++i) {
      double delay_sum = 0.0, abs_sum = 0.0;
      for (int t = 0; t < cube.num_bins; ++t) {
        for (int e = 0; e < 16; ++e) delay_sum += rows(i, e) * cube.at(p, t, e / 4, e % 4);
        abs_sum += cap.at(i, p, t);
      }
      EXPECT_NEAR(abs_sum, delay_sum, 1e-9 * (1 + std::fabs(delay_sum)));
    }
}

TEST(SimulateCapture, NoiseStatistics) {
  SyntheticSceneParams p;
  p.width = p.height = 16;
  Material m = plane_material();
  m.surface.a = {0, 0, 0, 0};
  m.subsurface.a = {0, 0, 0, 0};
  p.materials = {m};
  const Scene scene = make_synthetic_scene(SceneKind::Plane, p);
  SensorConfig sensor;
  sensor.num_bins = 256;
  sensor.noise_sigma = 1e-4;
  const auto cube = render_transient(scene, sensor);
  const auto cap = simulate_capture(cube, scene, uniform_initial_schedule(16), sensor, 5);
  ASSERT_GE(cap.data.size(), 1000000u);
  double sum = 0.0, sq = 0.0;
  for (double v : cap.data) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(cap.data.size());
  const double stdev = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(stdev, 1e-4, 2e-6);
}

TEST(SimulateCapture, IrfPreservesIntensity) {
  const Scene scene = small_plane(4);
  SensorConfig sensor;
  sensor.num_bins = 256;
  sensor.noise_sigma = 0;
  const auto cube = render_transient(scene, sensor);
  const auto sched = uniform_initial_schedule(16);
  const auto sharp = simulate_capture(cube, scene, sched, sensor, 1);
  sensor.irf_sigma = 40e-12;
  const auto blurred = simulate_capture(cube, scene, sched, sensor, 1);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < sharp.data.size(); ++i) {
    a += sharp.data[i];
    b += blurred.data[i];
  }
  EXPECT_NEAR(a, b, 1e-9 * std::fabs(a));
  EXPECT_NE(sharp.data, blurred.data);
}

TEST(ShiftToAbsolute, ReportsTruncation) {
  std::vector<double> src(10, 0.0), dst(10);
  src[8] = 1.0;
  EXPECT_TRUE(shift_to_absolute(src.data(), dst.data(), 10, 1, 1.5));
  EXPECT_FALSE(shift_to_absolute(src.data(), dst.data(), 10, 1, 0.5));
  EXPECT_DOUBLE_EQ(dst[8], 0.5);
  EXPECT_DOUBLE_EQ(dst[9], 0.5);
}

TEST(SyntheticScene, FrontoParallelPlane) {
  SyntheticSceneParams p;
  p.width = p.height = 5;
  p.tilt = 0.0;
  p.distance = 0.7;
  const Scene s = make_synthetic_scene(SceneKind::Plane, p);
  const Vec3d center = s.view_dirs[12];
  for (std::size_t i = 0; i < s.pixels(); ++i) {
    EXPECT_NEAR(s.normals[i].x, -center.x, 1e-15);
    EXPECT_NEAR(s.normals[i].y, -center.y, 1e-15);
    EXPECT_NEAR(s.normals[i].z, -center.z, 1e-15);
    EXPECT_NEAR(s.depth[i] * s.view_dirs[i].z, 0.7, 1e-12);
  }
}

TEST(SyntheticScene, SphereGrazesTowardTheBoundary) {
  SyntheticSceneParams p;
  p.width = p.height = 33;
  p.distance = 0.5;
  p.radius = 0.3;
  p.fov = 0.95;
  const Scene s = make_synthetic_scene(SceneKind::Sphere, p);
  double prev = 0.0;
  for (int k = 16; k >= 0; --k) {
    const std::size_t q = static_cast<std::size_t>(k) * 33 + k;
    const double c = dot(s.normals[q], -s.view_dirs[q]);
    if (k == 16) EXPECT_NEAR(c, 1.0, 1e-12);
    else EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_LT(prev, 0.3);
  for (std::size_t i = 0; i < s.pixels(); ++i) {
    const Vec3d x = s.view_dirs[i] * s.depth[i] - Vec3d{0, 0, 0.5};
    EXPECT_NEAR(norm(x), 0.3, 1e-12);
  }
  p.radius = 0.1;
  EXPECT_EQ(test::error_code_of([&] { make_synthetic_scene(SceneKind::Sphere, p); }), ErrorCode::InvalidParam);
}

TEST(SyntheticScene, BlobsHaveTwoLabels) {
  SyntheticSceneParams p;
  p.width = p.height = 16;
  p.materials = {plane_material(), plane_material()};
  const Scene s = make_synthetic_scene(SceneKind::TwoMaterialBlobs, p);
  std::set<int> labels(s.cluster_id.begin(), s.cluster_id.end());
  EXPECT_EQ(labels, (std::set<int>{0, 1}));
}

TEST(SyntheticScene, RejectsBadParameters) {
  SyntheticSceneParams p;
  p.width = 0;
  EXPECT_EQ(test::error_code_of([&] { make_synthetic_scene(SceneKind::Plane, p); }), ErrorCode::InvalidParam);
  p.width = 4;
  p.tilt = 1.5;
  p.fov = 0.5;
  EXPECT_EQ(test::error_code_of([&] { make_synthetic_scene(SceneKind::Plane, p); }), ErrorCode::InvalidParam);
}

TEST(SensorConfig, Validation) {
  SensorConfig s;
  s.bin_width = 0;
  EXPECT_EQ(test::error_code_of([&] { s.validate(); }), ErrorCode::InvalidParam);
  s = SensorConfig{};
  s.num_bins = 0;
  EXPECT_EQ(test::error_code_of([&] { s.validate(); }), ErrorCode::InvalidParam);
}

}  // namespace
}  // namespace polartof
