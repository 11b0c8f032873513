#include <gtest/gtest.h>

#include "sawmod/saw_solver.hpp"
#include "test_support.hpp"

using namespace sawmod;

namespace
{

// Classical Rayleigh equation in x = (v / v_s)^2 with xi = v_s^2 / v_p^2:
// x^3 - 8 x^2 + (24 - 16 xi) x - 16 (1 - xi) = 0, root in (0, 1).
double rayleigh_ratio(double xi)
{
  auto f = [xi](double x) { return x * x * x - 8.0 * x * x + (24.0 - 16.0 * xi) * x - 16.0 * (1.0 - xi); };
  double lo = 1e-6, hi = 1.0 - 1e-12;
  for (int i = 0; i < 200; ++i)
  {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

const MaterialFile &ln()
{
  static const MaterialFile mf = test::lithium_niobate();
  return mf;
}

double magnitude(const DepthAmplitudes &a)
{
  return std::sqrt(std::norm(a.ux) + std::norm(a.uy) + std::norm(a.uz));
}

} // namespace

TEST(RayleighOracle, CubicRootForPoissonQuarter)
{
  EXPECT_NEAR(rayleigh_ratio(1.0 / 3.0), 0.9194, 1e-4);
}

TEST(PartialWaves, IsotropicRootsComeInSignedPairs)
{
  const double mu = 30e9, rho = 3000.0;
  const auto m = test::isotropic(mu, mu, rho);
  const double vs = std::sqrt(mu / rho);
  const auto pw = partial_wave_roots(0.8 * vs, m);
  ASSERT_EQ(pw.roots.size(), 8u);
  for (const auto &r : pw.roots)
  {
    double best = 1e300;
    for (const auto &q : pw.roots)
      best = std::min(best, std::abs(q.alpha + r.alpha));
    EXPECT_LT(best, 1e-6);
  }
  EXPECT_EQ(decaying_roots(pw).size(), 4u);
}

TEST(PartialWaves, LithiumNiobateSubsonicRootsDecayAndSolveSecularProblem)
{
  const auto pw = partial_wave_roots(3400.0, ln().material);
  const auto roots = decaying_roots(pw);
  for (const auto &r : roots)
  {
    EXPECT_LT(r.alpha.imag(), 0.0);
    EXPECT_LT(secular_residual(3400.0, ln().material, r.alpha), 1e-8);
  }
}

TEST(PartialWaves, ZeroPiezoDecouplesLaplaceRoot)
{
  MaterialSet m = ln().material;
  m.piezo.setZero();
  // eps_yy a^2 + 2 eps_yz a + eps_zz = 0 for the potential alone.
  const double eyy = m.permittivity(1, 1), eyz = m.permittivity(1, 2), ezz = m.permittivity(2, 2);
  const double re = -eyz / eyy, im = std::sqrt(eyy * ezz - eyz * eyz) / eyy;
  const auto pw = partial_wave_roots(3000.0, m);
  int laplace = 0;
  for (const auto &r : pw.roots)
  {
    if (std::abs(r.alpha - cdouble(re, im)) < 1e-6 || std::abs(r.alpha - cdouble(re, -im)) < 1e-6)
    {
      ++laplace;
      EXPECT_GT(std::abs(r.polarization[3]), 1.0 - 1e-9);
    }
  }
  EXPECT_EQ(laplace, 2);
}

TEST(PartialWaves, SupersonicVelocityIsRejected)
{
  EXPECT_THROW(decaying_roots(partial_wave_roots(5000.0, ln().material)), NotSubsonicError);
}

TEST(BoundaryDeterminant, GridMinimumNearExpectedVelocity)
{
  double best_v = 0.0, best = 1e300;
  // The tilted shear branch turns bulk-like a little below the on-axis
  // bulk velocity; scan up to that limit.
  const double v_bulk = bulk_velocities(ln().material, Eigen::Vector3d::UnitZ())[0];
  double v_limit = 0.0;
  for (double v = 3000.0; v < v_bulk; v += 10.0)
  {
    const auto d = boundary_residual(v, ln().material, Boundary::free);
    if (!d)
      break;
    v_limit = v;
    if (*d < best)
    {
      best = *d;
      best_v = v;
    }
  }
  EXPECT_GT(v_limit, 3530.0);
  EXPECT_NEAR(best_v, 3488.0, 10.0);
  // Sharp: an order of magnitude above the minimum 50 m/s away.
  EXPECT_GT(*boundary_residual(best_v - 50.0, ln().material, Boundary::free), 10.0 * best);
  EXPECT_GT(boundary_residual(std::min(best_v + 50.0, v_limit), ln().material, Boundary::free).value(), 10.0 * best);
}

TEST(BoundaryDeterminant, ElectricalRowDistinguishesBoundaries)
{
  const auto roots = decaying_roots(partial_wave_roots(3450.0, ln().material));
  const cdouble free = boundary_determinant(roots, ln().material, Boundary::free);
  const cdouble metal = boundary_determinant(roots, ln().material, Boundary::metalized);
  EXPECT_GT(std::abs(free - metal), 1e-6 * std::abs(free));
}

TEST(SolveRayleigh, LithiumNiobateFreeSurface)
{
  const auto sol = solve_rayleigh(ln().material, Boundary::free, 40e-6);
  EXPECT_NEAR(sol.velocity, 3488.0, 0.01 * 3488.0);
  EXPECT_LT(sol.residual, 1e-8);
  EXPECT_LT(sol.velocity, bulk_velocities(ln().material, Eigen::Vector3d::UnitZ())[0]);
  EXPECT_FALSE(sol.degenerate_roots);
}

TEST(SolveRayleigh, FrozenLithiumNiobateVelocities)
{
  // Regression pins for the bundled constants.
  EXPECT_NEAR(solve_rayleigh(ln().material, Boundary::free, 40e-6).velocity, 3487.770185, 1e-5);
  EXPECT_NEAR(solve_rayleigh(ln().material, Boundary::metalized, 40e-6).velocity, 3403.740642, 1e-5);
}

TEST(SolveRayleigh, MetalizedIsSlower)
{
  const double vf = solve_rayleigh(ln().material, Boundary::free, 40e-6).velocity;
  const double vm = solve_rayleigh(ln().material, Boundary::metalized, 40e-6).velocity;
  EXPECT_LT(vm, vf);
}

TEST(SolveRayleigh, IsotropicMatchesClassicalRoot)
{
  for (const double ratio : {1.0, 2.0, 0.5})
  {
    const double mu = 40e9, lambda = ratio * mu, rho = 2500.0;
    const auto m = test::isotropic(lambda, mu, rho);
    const double vs = std::sqrt(mu / rho);
    const double xi = mu / (lambda + 2.0 * mu);
    const auto sol = solve_rayleigh(m, Boundary::free, 10e-6);
    EXPECT_NEAR(sol.velocity / vs, rayleigh_ratio(xi), 1e-3 * rayleigh_ratio(xi)) << "lambda/mu = " << ratio;
    EXPECT_TRUE(sol.degenerate_roots);
  }
}

TEST(SolveRayleigh, InvariantUnderConsistentUnitRescaling)
{
  const double s = 1e-9; // Pa -> GPa, density scaled alike
  MaterialSet m = ln().material;
  m.stiffness *= s;
  m.density *= s;
  m.piezo *= std::sqrt(s);
  RayleighOptions opt;
  const double v_ref = solve_rayleigh(ln().material, Boundary::free, 40e-6, opt).velocity;
  const double v_scaled = solve_rayleigh(m, Boundary::free, 40e-6, opt).velocity;
  EXPECT_NEAR(v_scaled / v_ref, 1.0, 1e-12);
}

TEST(SolveRayleigh, BracketWithoutRootFails)
{
  RayleighOptions opt;
  opt.bracket = std::make_pair(5000.0, 6000.0);
  EXPECT_THROW(solve_rayleigh(ln().material, Boundary::free, 40e-6, opt), ConvergenceError);
  opt.bracket = std::make_pair(2000.0, 3000.0);
  EXPECT_THROW(solve_rayleigh(ln().material, Boundary::free, 40e-6, opt), ConvergenceError);
}

TEST(DepthProfile, UnitSurfaceNormalizationAndDecay)
{
  const auto sol = solve_rayleigh(ln().material, Boundary::free, 40e-6);
  EXPECT_NEAR(peak_surface_displacement(sol), 1.0, 1e-12);
  const auto s = depth_profile(sol, 0.0);
  EXPECT_LE(std::abs(s.uy), 1.0 + 1e-12);
  EXPECT_LE(std::abs(s.uz), 1.0 + 1e-12);
  EXPECT_NEAR(s.uz.imag(), 0.0, 1e-12);
  EXPECT_GT(s.uz.real(), 0.0);

  const double lam = sol.wavelength;
  const double a1 = magnitude(depth_profile(sol, -lam));
  const double a2 = magnitude(depth_profile(sol, -2.0 * lam));
  const double a5 = magnitude(depth_profile(sol, -5.0 * lam));
  EXPECT_GT(a1, a2);
  EXPECT_GT(a2, a5);
  // Far tail follows the slowest-decaying partial wave.
  double slowest = 1e300;
  for (const auto &r : sol.roots)
    slowest = std::min(slowest, std::abs(r.alpha.imag()));
  const double tail = magnitude(depth_profile(sol, -20.0 * lam)) / magnitude(depth_profile(sol, -19.0 * lam));
  EXPECT_NEAR(tail, std::exp(-slowest * sol.wavenumber * lam), 0.02 * tail);
  EXPECT_LT(magnitude(depth_profile(sol, -40.0 * lam)), 1e-6);
  EXPECT_THROW(depth_profile(sol, 1e-9), InputError);
}

TEST(DepthProfile, SurfacePolarizationIsElliptical)
{
  const auto sol = solve_rayleigh(ln().material, Boundary::free, 40e-6);
  const auto s = depth_profile(sol, 0.0);
  const double dphase = std::abs(std::remainder(std::arg(s.uy) - std::arg(s.uz), constants::two_pi));
  EXPECT_NEAR(dphase, constants::pi / 2.0, 15.0 * constants::pi / 180.0);
}

TEST(DepthProfile, DerivativeMatchesFiniteDifference)
{
  const auto sol = solve_rayleigh(ln().material, Boundary::free, 40e-6);
  const double h = sol.wavelength * 1e-4;
  for (const double y : {-1e-6, -4e-6, -9e-6, -20e-6})
  {
    const auto d = depth_profile_derivative(sol, y);
    const auto p = depth_profile(sol, y + h);
    const auto q = depth_profile(sol, y - h);
    const auto check = [&](cdouble analytic, cdouble plus, cdouble minus, double scale) {
      const cdouble fd = (plus - minus) / (2.0 * h);
      EXPECT_LT(std::abs(analytic - fd), 1e-6 * scale) << "y = " << y;
    };
    const double su = sol.wavenumber;
    check(d.uy, p.uy, q.uy, su);
    check(d.uz, p.uz, q.uz, su);
    check(d.phi, p.phi, q.phi, su * std::abs(depth_profile(sol, 0.0).phi));
  }
}
