#include "test_util.hpp"

#include "polartof/brdf/tempol_brdf.hpp"
#include "polartof/numerics/rng.hpp"

namespace polartof {
namespace {

using test::kPi;
using test::max_abs_diff;

TimeGaussBank uniform_bank(double a, double mu, double sigma) {
  TimeGaussBank b;
  b.a = {a, a, a, a};
  b.mu = {mu, mu, mu, mu};
  b.sigma = {sigma, sigma, sigma, sigma};
  return b;
}

Material test_material() {
  Material m;
  m.eta = 1.5;
  m.m = 0.4;
  m.surface = uniform_bank(1.0, 100e-12, 20e-12);
  m.subsurface.a = {0.5, 0.3, 0.2, 0.1};
  m.subsurface.mu = {400e-12, 380e-12, 360e-12, 340e-12};
  m.subsurface.sigma = {60e-12, 60e-12, 60e-12, 60e-12};
  return m;
}

TEST(Ggx, Examples) {
  EXPECT_NEAR(ggx_ndf(0.0, 1.0), 1.0 / kPi, 1e-15);
  EXPECT_NEAR(ggx_ndf(kPi / 3, 1.0), 1.0 / kPi, 1e-15);
  EXPECT_NEAR(ggx_ndf(0.0, 0.5), 4.0 / kPi, 1e-12);
}

TEST(Ggx, ProjectedAreaNormalization) {
  for (double m : {0.1, 0.3, 0.5, 1.0}) {
    // Midpoint rule, 512 samples in theta, analytic in phi.
    const int n = 512;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) * (kPi / 2) / n;
      sum += ggx_ndf(t, m) * std::cos(t) * std::sin(t);
    }
    EXPECT_NEAR(2 * kPi * sum * (kPi / 2) / n, 1.0, 1e-3) << m;
  }
}

TEST(Smith, Examples) {
  EXPECT_DOUBLE_EQ(smith_g(0.0, 0.0, 0.7), 1.0);
  EXPECT_NEAR(smith_g(1.0, 1.0, 1e-9), 1.0, 1e-12);
  // G1(pi/3) at m = 0.5: 2 / (1 + sqrt(1 + 0.25 * 3)).
  const double g1 = 2.0 / (1.0 + std::sqrt(1.75));
  EXPECT_NEAR(g1, 0.86100, 1e-5);
  EXPECT_NEAR(smith_g(kPi / 3, kPi / 3, 0.5), g1 * g1, 1e-15);
  EXPECT_NEAR(smith_g(kPi / 3, kPi / 3, 0.5), 0.74132, 1e-5);
}

TEST(TimeGaussDiag, Examples) {
  TimeGaussBank b = uniform_bank(1.0, 50e-12, 10e-12);
  EXPECT_LT(max_abs_diff(time_gauss_diag(b, 50e-12), MuellerMatrix::identity()), 1e-15);
  b.a = {2.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(time_gauss_diag(b, 60e-12)(0, 0), 2.0 * std::exp(-0.5), 1e-12);
  b.a = {1, 0.5, 0.5, 0.2};
  EXPECT_LT(max_abs_diff(time_gauss_diag(b, 1.0), MuellerMatrix::zero()), 1e-300);
}

TEST(SurfaceTerm, NormalIncidenceClosedForm) {
  Material mat;
  mat.eta = 1.5;
  mat.m = 1.0;
  mat.surface = uniform_bank(1.0, 100e-12, 10e-12);
  mat.subsurface = uniform_bank(0.0, 100e-12, 10e-12);
  const auto g = coaxial_geometry<double>({0, 0, 1}, {0, 0, 1});
  EXPECT_NEAR(surface_term(100e-12, g, mat)(0, 0), 1.0 / kPi / 4 * 0.04, 1e-15);
  EXPECT_NEAR(surface_term(100e-12, g, mat)(0, 0), 3.183e-3, 1e-6);
  EXPECT_LT(max_abs_diff(surface_term(1e-6, g, mat), MuellerMatrix::zero()), 1e-300);
}

TEST(SurfaceTerm, LinearInUniformAmplitude) {
  Material mat = test_material();
  const auto g = coaxial_geometry<double>(normalized(Vec3d{0.1, 0.2, 1}), normalized(Vec3d{0, 0.3, 1}));
  const auto one = surface_term(110e-12, g, mat);
  mat.surface = uniform_bank(2.0, 100e-12, 20e-12);
  const auto two = surface_term(110e-12, g, mat);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(two.m[i], 2.0 * one.m[i]);
}

TEST(SurfaceTerm, Grazing) {
  const Material mat = test_material();
  const auto g = coaxial_geometry<double>({0, 0, 1}, normalized(Vec3d{0, 1, 1e-4}));
  EXPECT_EQ(test::error_code_of([&] { surface_term(0.0, g, mat); }), ErrorCode::GrazingAngle);
  EXPECT_EQ(test::error_code_of([&] { subsurface_term(0.0, g, mat); }), ErrorCode::GrazingAngle);
}

TEST(SubsurfaceTerm, NormalIncidenceRoundTripTransmittance) {
  Material mat;
  mat.eta = 1.5;
  mat.m = 0.3;
  mat.surface = uniform_bank(0.0, 100e-12, 10e-12);
  mat.subsurface = uniform_bank(1.0, 100e-12, 10e-12);
  const auto g = coaxial_geometry<double>({0, 0, 1}, {0, 0, 1});
  EXPECT_NEAR(subsurface_term(100e-12, g, mat)(0, 0), 0.9216, 1e-12);
  EXPECT_LT(max_abs_diff(subsurface_term(1.0, g, mat), MuellerMatrix::zero()), 1e-300);
}

TEST(SubsurfaceTerm, FullDepolarizationChannelAtNormalIncidence) {
  Material mat = test_material();
  mat.subsurface.a = {1.0, 0.0, 0.0, 0.0};
  const auto g = coaxial_geometry<double>({0, 0, 1}, {0, 0, 1});
  const auto m = subsurface_term(400e-12, g, mat);
  for (const auto& s : poincare_uniform_states(20)) EXPECT_NEAR(degree_of_polarization(m * s), 0.0, 1e-12);
}

// Off normal the exit transmission is a diattenuator, so the output carries
// exactly its polarization whatever the input state.
TEST(SubsurfaceTerm, FullDepolarizationChannelOblique) {
  Material mat = test_material();
  mat.subsurface.a = {1.0, 0.0, 0.0, 0.0};
  const Vec3d w = normalized(Vec3d{0.1, 0.2, 1});
  const Vec3d n = normalized(Vec3d{0.3, -0.2, 1});
  const auto g = coaxial_geometry<double>(w, n);
  const double cos_o = g.cos_theta_o();
  const double sin_t = std::sqrt(1.0 - cos_o * cos_o) / mat.eta;
  const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
  const double ts = 2 * mat.eta * cos_t / (mat.eta * cos_t + cos_o);
  const double tp = 2 * mat.eta * cos_t / (cos_t + mat.eta * cos_o);
  const double diattenuation = std::fabs(ts * ts - tp * tp) / (ts * ts + tp * tp);
  EXPECT_GT(diattenuation, 1e-3);
  const auto m = subsurface_term(400e-12, g, mat);
  for (const auto& s : poincare_uniform_states(20)) EXPECT_NEAR(degree_of_polarization(m * s), diattenuation, 1e-12);
}

TEST(Brdf, Additivity) {
  Material mat = test_material();
  const auto g = coaxial_geometry<double>(normalized(Vec3d{0.1, 0.2, 1}), normalized(Vec3d{0.3, -0.2, 1}));
  Material zero = mat;
  zero.surface.a = {0, 0, 0, 0};
  zero.subsurface.a = {0, 0, 0, 0};
  EXPECT_LT(max_abs_diff(brdf(300e-12, g, zero), MuellerMatrix::zero()), 1e-300);
  Material no_surface = mat;
  no_surface.surface.a = {0, 0, 0, 0};
  const auto b = brdf(300e-12, g, no_surface);
  const auto s = subsurface_term(300e-12, g, no_surface);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(b.m[i], s.m[i]);
}

TEST(Brdf, TwoSeparatedPeaks) {
  const Material mat = test_material();
  const auto g = coaxial_geometry<double>({0, 0, 1}, normalized(Vec3d{0, 0.2, 1}));
  std::vector<double> profile;
  for (int k = 0; k < 400; ++k) profile.push_back(brdf(k * 2e-12, g, mat)(0, 0));
  std::vector<int> maxima;
  for (int k = 1; k + 1 < 400; ++k)
    if (profile[k] > profile[k - 1] && profile[k] >= profile[k + 1]) maxima.push_back(k);
  ASSERT_EQ(maxima.size(), 2u);
  EXPECT_NEAR(maxima[0] * 2e-12, 100e-12, 4e-12);
  EXPECT_NEAR(maxima[1] * 2e-12, 400e-12, 8e-12);
}

TEST(CosineScaled, Foreshortening) {
  const Material mat = test_material();
  const auto normal = coaxial_geometry<double>({0, 0, 1}, {0, 0, 1});
  EXPECT_LT(max_abs_diff(cosine_scaled(120e-12, normal, mat), brdf(120e-12, normal, mat)), 1e-15);
  // omega at 60 degrees from n.
  const auto tilted = coaxial_geometry<double>({0, std::sin(kPi / 3), std::cos(kPi / 3)}, {0, 0, 1});
  const auto h = cosine_scaled(120e-12, tilted, mat);
  const auto b = brdf(120e-12, tilted, mat);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(h.m[i], 0.5 * b.m[i], 1e-15 * (1 + std::fabs(b.m[i])));
  double prev = 1e300;
  for (double t : {1.4, 1.5, 1.55, 1.565}) {
    const auto g = coaxial_geometry<double>({0, std::sin(t), std::cos(t)}, {0, 0, 1});
    Material sub = mat;
    sub.surface.a = {0, 0, 0, 0};
    const double v = cosine_scaled(400e-12, g, sub)(0, 0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Brdf, BasisReproducesDirectEvaluation) {
  const Material mat = test_material();
  const auto g = coaxial_geometry<double>(normalized(Vec3d{0.1, 0.2, 1}), normalized(Vec3d{0.3, -0.2, 1}));
  const auto basis = brdf_basis<double>(g, mat.eta, mat.m);
  for (double tau : {80e-12, 130e-12, 350e-12}) {
    MuellerMatrix sum;
    for (int c = 0; c < 8; ++c) {
      const auto& bank = c < 4 ? mat.surface : mat.subsurface;
      sum += basis[c] * bank.channel(c % 4, tau);
    }
    EXPECT_LT(max_abs_diff(sum, cosine_scaled(tau, g, mat)), 1e-14);
  }
}

Material random_material(Rng& rng) {
  Material m;
  m.eta = rng.uniform(1.05, 2.8);
  m.m = rng.uniform(0.05, 1.0);
  for (TimeGaussBank* b : {&m.surface, &m.subsurface}) {
    b->a[0] = rng.uniform(0.1, 5.0);
    for (int i = 1; i < 4; ++i) b->a[i] = rng.uniform(0.0, b->a[0]);
    for (int i = 0; i < 4; ++i) {
      b->mu[i] = rng.uniform(0.0, 500e-12);
      b->sigma[i] = rng.uniform(15e-12, 100e-12);
    }
  }
  return m;
}

LocalGeometry<double> random_geometry(Rng& rng, bool coaxial) {
  const Vec3d n = normalized(Vec3d{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1.0});
  auto dir = [&] { return normalized(Vec3d{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), 1.0}); };
  const Vec3d wi = dir();
  if (coaxial) return coaxial_geometry(wi, n);
  return {wi, dir(), n};
}

// True when no polarization channel of the bank exceeds the intensity
// channel at tau. a_0 >= a_i alone does not ensure this once the channels
// have different mu or sigma.
bool non_amplifying(const TimeGaussBank& bank, double tau) {
  for (std::size_t i = 1; i < 4; ++i)
    if (bank.channel(i, tau) > bank.channel(0, tau)) return false;
  return true;
}

TEST(Brdf, RandomOutputsArePhysical) {
  Rng rng(21);
  int checked = 0;
  while (checked < 1000) {
    const Material mat = random_material(rng);
    const auto g = random_geometry(rng, checked % 2 == 0);
    if (g.cos_theta_i() * g.cos_theta_o() < 1e-3) continue;
    const double tau = rng.uniform(0.0, 600e-12);
    if (!non_amplifying(mat.surface, tau) || !non_amplifying(mat.subsurface, tau)) continue;
    const auto b = brdf(tau, g, mat);
    if (!(b(0, 0) > 0.0)) continue;
    const double scale = std::max(1.0, b(0, 0));
    MuellerMatrix s = b;
    s *= 1.0 / scale;
    EXPECT_TRUE(is_physical(s, 1e-6)) << checked;
    ++checked;
  }
}

TEST(Brdf, ChannelShiftedBankCanAmplify) {
  Material mat = test_material();
  mat.surface.a = {0.0, 0.0, 0.0, 0.0};
  mat.subsurface.a = {1.0, 0.9, 0.0, 0.0};
  mat.subsurface.mu = {400e-12, 200e-12, 400e-12, 400e-12};
  const auto g = coaxial_geometry<double>({0, 0, 1}, {0, 0, 1});
  EXPECT_FALSE(non_amplifying(mat.subsurface, 200e-12));
  EXPECT_FALSE(is_physical(brdf(200e-12, g, mat), 1e-6));
  EXPECT_TRUE(is_physical(brdf(400e-12, g, mat), 1e-6));
}

TEST(Brdf, CoaxialSwapIsExact) {
  Rng rng(22);
  const Material mat = random_material(rng);
  auto g = random_geometry(rng, true);
  const auto a = brdf(200e-12, g, mat);
  std::swap(g.omega_i, g.omega_o);
  const auto b = brdf(200e-12, g, mat);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.m[i], b.m[i]);
}

TEST(Brdf, LinearInEachAmplitude) {
  Rng rng(23);
  const Material mat = random_material(rng);
  const auto g = random_geometry(rng, true);
  for (int bank = 0; bank < 2; ++bank)
    for (int i = 0; i < 4; ++i) {
      Material m0 = mat, m1 = mat, m2 = mat;
      auto& b0 = bank == 0 ? m0.surface : m0.subsurface;
      auto& b1 = bank == 0 ? m1.surface : m1.subsurface;
      auto& b2 = bank == 0 ? m2.surface : m2.subsurface;
      b0.a[i] = 0.0;
      b1.a[i] = 0.3;
      b2.a[i] = 0.6;
      auto term = [&](const Material& m) { return bank == 0 ? surface_term(250e-12, g, m) : subsurface_term(250e-12, g, m); };
      const auto t0 = term(m0), t1 = term(m1), t2 = term(m2);
      for (int e = 0; e < 16; ++e) EXPECT_NEAR(t2.m[e] - t1.m[e], t1.m[e] - t0.m[e], 1e-14 * (1 + std::fabs(t2.m[e])));
    }
}

// Parameter vector: eta, m, surface a/mu/sigma, sub-surface a/mu/sigma, n xyz.
constexpr int kBrdfParams = 29;

template <typename T>
Mueller<T> brdf_of(const std::array<T, kBrdfParams>& p, const LocalGeometry<double>& g0, double tau) {
  MaterialT<T> mat;
  mat.eta = p[0];
  mat.m = p[1];
  for (int i = 0; i < 4; ++i) {
    mat.surface.a[i] = p[2 + i];
    mat.surface.mu[i] = p[6 + i];
    mat.surface.sigma[i] = p[10 + i];
    mat.subsurface.a[i] = p[14 + i];
    mat.subsurface.mu[i] = p[18 + i];
    mat.subsurface.sigma[i] = p[22 + i];
  }
  LocalGeometry<T> g{Vec3<T>::from(g0.omega_i), Vec3<T>::from(g0.omega_o), {p[26], p[27], p[28]}, g0.reference_up};
  return brdf(tau, g, mat);
}

TEST(Brdf, DerivativesMatchFiniteDifferences) {
  Rng rng(24);
  for (int cfg = 0; cfg < 100; ++cfg) {
    const Material mat = random_material(rng);
    const auto g = random_geometry(rng, cfg % 2 == 0);
    if (g.cos_theta_i() * g.cos_theta_o() < 1e-2) continue;
    const double tau = mat.surface.mu[cfg % 4] + rng.uniform(-20e-12, 20e-12);
    std::array<double, kBrdfParams> p{};
    p[0] = mat.eta;
    p[1] = mat.m;
    for (int i = 0; i < 4; ++i) {
      p[2 + i] = mat.surface.a[i];
      p[6 + i] = mat.surface.mu[i];
      p[10 + i] = mat.surface.sigma[i];
      p[14 + i] = mat.subsurface.a[i];
      p[18 + i] = mat.subsurface.mu[i];
      p[22 + i] = mat.subsurface.sigma[i];
    }
    p[26] = g.n.x;
    p[27] = g.n.y;
    p[28] = g.n.z;
    std::array<Dual<kBrdfParams>, kBrdfParams> pd;
    for (int i = 0; i < kBrdfParams; ++i) pd[i] = Dual<kBrdfParams>::variable(p[i], i);
    const auto ad = brdf_of(pd, g, tau);
    const auto base = brdf_of(p, g, tau);
    double scale = 0.0;
    for (int e = 0; e < 16; ++e) scale = std::max(scale, std::fabs(base.m[e]));
    for (int i = 0; i < kBrdfParams; ++i) {
      const double h = 1e-5 * std::max(std::fabs(p[i]), 1e-3 * (i >= 6 && i < 26 ? 1e-9 : 1.0));
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const auto fp = brdf_of(pp, g, tau);
      const auto fm = brdf_of(pm, g, tau);
      for (int e = 0; e < 16; ++e) {
        const double fd = (fp.m[e] - fm.m[e]) / (2 * h);
        const double a = ad.m[e].d[i];
        // Entries whose derivative is negligible against the matrix scale
        // are compared absolutely.
        const double floor = 1e-7 * scale / std::max(std::fabs(p[i]), 1e-12);
        EXPECT_LT(std::fabs(a - fd) / (std::fabs(a) + std::fabs(fd) + floor), 1e-3)
            << "cfg " << cfg << " param " << i << " entry " << e << " ad " << a << " fd " << fd;
      }
    }
  }
}

TEST(Material, Validation) {
  Material m = test_material();
  EXPECT_NO_THROW(validate(m));
  m.surface.a[2] = 2.0;
  EXPECT_EQ(test::error_code_of([&] { validate(m); }), ErrorCode::InvalidParam);
  m = test_material();
  m.eta = 3.5;
  EXPECT_EQ(test::error_code_of([&] { validate(m); }), ErrorCode::InvalidParam);
  m = test_material();
  m.subsurface.sigma[0] = 0.0;
  EXPECT_EQ(test::error_code_of([&] { validate(m); }), ErrorCode::InvalidParam);
}

}  // namespace
}  // namespace polartof
