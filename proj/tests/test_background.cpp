#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "starwave/background.hpp"
#include "test_util.hpp"

using namespace starwave;

namespace {

std::string stratified_csv(int rows) {
  std::ostringstream s;
  s.precision(17);
  s << "r,rho0,c0,phi0\n";
  for (int i = 0; i < rows; ++i) {
    const double r = static_cast<double>(i) / (rows - 1);
    s << r << ',' << std::exp(-20.0 * r) << ",1," << 0.5 * r * r << '\n';
  }
  return s.str();
}

SolverConfig config(Formulation f, double omega = 3.0, double gamma = 0.0) {
  SolverConfig c;
  c.formulation = f;
  c.omega = omega;
  c.gamma_att = gamma;
  return c;
}

}  // namespace

TEST(RadialProfile, ConstantTwoRowFile) {
  const auto path = testutil::write_temp("const.csv", "r,rho0,c0,phi0\n0,1,1,0\n1,1,1,0\n");
  const auto bg = load_radial_profile(path);
  for (double r : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(bg.rho0(r), 1.0);
    EXPECT_DOUBLE_EQ(bg.alpha_rho(r), 0.0);
    EXPECT_DOUBLE_EQ(bg.gravity(r), 0.0);
  }
}

TEST(RadialProfile, StratifiedDerivatives) {
  const auto path = testutil::write_temp("strat.csv", stratified_csv(401));
  const auto bg = load_radial_profile(path);
  for (double r : {0.05, 0.31, 0.5, 0.77, 0.99}) {
    EXPECT_NEAR(bg.alpha_rho(r), 20.0, 1e-9);
    EXPECT_NEAR(bg.gravity(r), r, 1e-4);
    EXPECT_NEAR(bg.rho0(r), std::exp(-20.0 * r), 1e-12);
  }
}

TEST(RadialProfile, ColumnOrderIsFree) {
  const auto path = testutil::write_temp("perm.csv", "c0,r,phi0,rho0\n2,0,0,1\n2,1,0,1\n");
  EXPECT_DOUBLE_EQ(load_radial_profile(path).c0(0.5), 2.0);
}

TEST(RadialProfile, LengthScaleRescalesSpeedAndPotential) {
  const auto path = testutil::write_temp("ls.csv", "r,rho0,c0,phi0\n0,1,10,0\n1,1,10,100\n");
  const auto bg = load_radial_profile(path, 10.0);
  EXPECT_DOUBLE_EQ(bg.c0(0.5), 1.0);
  EXPECT_NEAR(bg.phi0(1.0), 1.0, 1e-14);
}

TEST(RadialProfile, Errors) {
  EXPECT_THROW(load_radial_profile(testutil::write_temp(
                   "nm.csv", "r,rho0,c0,phi0\n0,1,1,0\n0.5,1,1,0\n0.4,1,1,0\n1,1,1,0\n")),
               InputError);
  EXPECT_THROW(load_radial_profile(testutil::write_temp("neg.csv", "r,rho0,c0,phi0\n0,1,1,0\n1,-1,1,0\n")),
               InputError);
  EXPECT_THROW(load_radial_profile(testutil::write_temp("c0.csv", "r,rho0,c0,phi0\n0,1,0,0\n1,1,1,0\n")),
               InputError);
  EXPECT_THROW(load_radial_profile(testutil::write_temp("col.csv", "r,rho0,phi0\n0,1,0\n1,1,0\n")),
               InputError);
  try {
    load_radial_profile("/nonexistent/profile.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/profile.csv"), std::string::npos);
  }
}

TEST(RadialProfile, SaveLoadRoundTrip) {
  const auto bg = toy_star(1.001, 20.0, 1.0, 0.3, 1.0);
  const auto path = (testutil::temp_dir() / "toy.csv").string();
  save_radial_profile(bg, path, 3001);
  const auto back = load_radial_profile(path);
  for (double r : {0.1, 0.5, 0.9, 1.0}) {
    EXPECT_NEAR(back.c0(r), bg.c0(r), 1e-8);
    EXPECT_NEAR(back.alpha_rho(r), bg.alpha_rho(r), 1e-6);
  }
}

TEST(MonotoneCubic, ReproducesLinearDataAndStaysMonotone) {
  MonotoneCubic lin({0, 1, 3}, {1, 3, 7});
  EXPECT_NEAR(lin.value(2.0), 5.0, 1e-14);
  EXPECT_NEAR(lin.derivative(0.5), 2.0, 1e-14);
  MonotoneCubic step({0, 1, 2, 3}, {0, 0, 1, 1});
  double prev = -1.0;
  for (double x = 0.0; x <= 3.0; x += 0.01) {
    const double v = step.value(x);
    EXPECT_GE(v, prev - 1e-15);
    EXPECT_GE(v, -1e-15);
    EXPECT_LE(v, 1.0 + 1e-15);
    prev = v;
  }
}

TEST(Coefficients, HelmholtzLimitForAllFormulations) {
  const auto bg = RadialBackground::constant(1.0, 1.0, 1.0);
  const double w = 2.5;
  for (auto f : {Formulation::original, Formulation::liouville, Formulation::liouville_c}) {
    const auto c = eval_coefficients(bg, PerturbationField::none(), config(f, w), Vec3(0.1, 0.2, 0.3));
    EXPECT_LT((c.A - cplx(-w * w) * CMat3::Identity()).norm(), 1e-14);
    EXPECT_LT(c.beta.norm(), 1e-14);
    EXPECT_NEAR(std::abs(c.rho_coef - 1.0), 0.0, 1e-14);
    EXPECT_DOUBLE_EQ(c.src_scale, 1.0);
    EXPECT_EQ(c.continuity_vector(), -c.beta);
  }
}

TEST(Coefficients, StratifiedLiouvilleBeta) {
  const auto bg = toy_star(1.0, 20.0, 1.0, 0.0, 0.0);
  const Vec3 x(0.3, -0.2, 0.4);
  const Vec3 rhat = x.normalized();
  for (auto f : {Formulation::liouville, Formulation::liouville_c}) {
    const auto c = eval_coefficients(bg, PerturbationField::none(), config(f), x);
    EXPECT_LT((c.beta - CVec3((-10.0 * rhat).cast<cplx>())).norm(), 1e-8);
    EXPECT_NEAR(std::abs(c.rho_coef - 1.0), 0.0, 1e-12);
  }
}

TEST(Coefficients, OriginalMatchesClosedForm) {
  // rho0 = exp(-5r), c0 = 1 - 0.2 r^2, phi0 = 0.7 r^2 / 2.
  const auto bg = toy_star(1.0, 5.0, 1.0, 0.2, 0.7);
  const Vec3 x(0.2, 0.5, -0.3);
  const double r = x.norm();
  const Vec3 rhat = x / r;
  const double w = 2.0, gam = 0.1;
  const cplx s(-w * w, -2.0 * w * gam);
  const double rho = std::exp(-5.0 * r), c = 1.0 - 0.2 * r * r;
  const Vec3 g = 0.7 * r * rhat, arho = 5.0 * rhat;
  const auto co = eval_coefficients(bg, PerturbationField::none(), config(Formulation::original, w, gam), x);
  CMat3 A = rho * (s * CMat3::Identity() + (g * (arho - g / (c * c)).transpose()).cast<cplx>());
  EXPECT_LT((co.A - A).norm() / A.norm(), 1e-6);
  EXPECT_LT((co.beta - CVec3((g / (c * c)).cast<cplx>())).norm(), 1e-6);
  EXPECT_NEAR(std::abs(co.rho_coef - 1.0 / (rho * c * c)), 0.0, 1e-6);
  EXPECT_LT((co.z_bc - CVec3((-rho * g).cast<cplx>())).norm(), 1e-8);
  // Attenuation enters the diagonal as -2 i omega gamma (times rho0).
  const auto lv = eval_coefficients(bg, PerturbationField::none(), config(Formulation::liouville, w, gam), x);
  EXPECT_NEAR(lv.A(1, 1).imag(), -2.0 * w * gam, 1e-12);
  EXPECT_NEAR(lv.src_scale, std::sqrt(rho), 1e-9);
  const auto lc = eval_coefficients(bg, PerturbationField::none(), config(Formulation::liouville_c, w, gam), x);
  EXPECT_NEAR(lc.src_scale, c * std::sqrt(rho), 1e-8);
  const Vec3 ac = (0.4 * r / c) * rhat;
  const Vec3 beta_c = g / (c * c) - 0.5 * arho - ac;
  EXPECT_LT((lc.beta - CVec3(beta_c.cast<cplx>())).norm(), 1e-6);
}

TEST(Coefficients, OutsideDomainThrows) {
  const auto bg = RadialBackground::constant(1.0, 1.0, 1.0);
  EXPECT_THROW(eval_coefficients(bg, PerturbationField::none(), config(Formulation::liouville), Vec3(0, 0, 1.5)),
               DomainError);
}

TEST(Perturbation, NoneIsIdentity) {
  const auto bg = toy_star(1.001, 20.0, 1.0, 0.3);
  const Vec3 x(0.1, 0.4, 0.2);
  EXPECT_EQ(perturbed_wavespeed(bg, PerturbationField::none(), x), bg.c0(x.norm()));
}

TEST(Perturbation, ActiveRegionPeak) {
  const auto bg = RadialBackground::constant(1.0, 1.5, 1.001);
  SphericalTable map({-90, 0, 90}, {-180, 0, 90}, std::vector<double>(9, -1.0));
  const auto p = PerturbationField::active_region(map, 0.995, 8.5e-4, 0.2);
  EXPECT_NEAR(perturbed_wavespeed(bg, p, from_spherical(0.995, 0.3, 1.0)), 1.5 * 0.8, 1e-12);
  const auto zero = PerturbationField::active_region(map, 0.995, 8.5e-4, 0.0);
  EXPECT_EQ(perturbed_wavespeed(bg, zero, from_spherical(0.995, 0.3, 1.0)), 1.5);
  EXPECT_THROW(PerturbationField::active_region(SphericalTable({0, 10}, {0, 10}, {0, 0.1, 0, 0}), 0.9, 1e-3, 0.1),
               InputError);
}

TEST(Perturbation, VolumetricSupport) {
  const auto bg = toy_star(1.001, 20.0, 1.0, 0.3);
  std::vector<double> vals(2 * 2 * 2, -0.05);
  VolumeTable t({0.70, 0.99}, {-90, 90}, {0, 180}, vals);
  const auto p = PerturbationField::volumetric(t);
  const Vec3 inside = from_spherical(0.5, 0.1, 0.2);
  EXPECT_EQ(perturbed_wavespeed(bg, p, inside), bg.c0(0.5));
  const Vec3 mid = from_spherical(0.8, 0.1, 0.2);
  EXPECT_NEAR(perturbed_wavespeed(bg, p, mid), 0.95 * bg.c0(0.8), 1e-12);
}

TEST(Perturbation, SurfaceMapFileLoads) {
  const auto path = testutil::write_temp(
      "map.csv", "theta_deg,phi_deg,delta\n-90,0,0\n-90,180,0\n90,0,-0.5\n90,180,-0.5\n");
  const auto map = load_surface_map(path);
  EXPECT_NEAR(map.lookup(0.0, 0.0), -0.25, 1e-12);
  EXPECT_NEAR(map.lookup(0.0, pi / 2), -0.25, 1e-12);
}

TEST(Source, PeakPeriodicityAndDefaults) {
  GaussianSource s;
  s.center = {0.9, 0.3, 3.0};
  EXPECT_DOUBLE_EQ(s.sigma_r, 1e-2);
  EXPECT_DOUBLE_EQ(s.sigma_theta, 0.2);
  EXPECT_DOUBLE_EQ(s.sigma_phi, 0.2);
  EXPECT_NEAR(source_gaussian(s, from_spherical(0.9, 0.3, 3.0)), 1.0, 1e-12);
  const double a = source_gaussian(s, from_spherical(0.905, 0.35, 3.1));
  const double b = source_gaussian(s, from_spherical(0.905, 0.35, 3.1 - 2.0 * pi));
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_NEAR(a, std::exp(-0.25 - 0.0625 - 0.25), 1e-9);
  s.sigma_phi = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(source_gaussian(s, from_spherical(0.9, 0.3, -1.0)), 1.0, 1e-12);
}

TEST(Config, PhysicalUnits) {
  const auto c = SolverConfig::from_physical(3.0, 10.0);
  EXPECT_NEAR(c.omega, 2.0 * pi * 3e-3, 1e-15);
  EXPECT_NEAR(c.gamma_att, 2.0 * pi * 10e-6, 1e-18);
  SolverConfig bad;
  bad.eps_blr = 1.5;
  EXPECT_THROW(bad.validate(), InputError);
  EXPECT_EQ(parse_formulation("liouville_c"), Formulation::liouville_c);
  EXPECT_THROW(parse_formulation("foo"), InputError);
}
