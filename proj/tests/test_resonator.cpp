#include <random>

#include <gtest/gtest.h>

#include "sawmod/resonator.hpp"
#include "sawmod/spectrum_csv.hpp"
#include "test_support.hpp"

using namespace sawmod;

namespace
{

constexpr double two_pi = constants::two_pi;

SawResonator reference_resonator()
{
  SawResonator r;
  r.omega = two_pi * 87.6e6;
  r.gamma_in = two_pi * 23.9e3;
  r.gamma_ex = two_pi * 2.5e3;
  r.lambda_saw = 40e-6;
  r.length_L = 380e-6;
  r.width_W = 950e-6;
  r.density = 4700.0;
  return r;
}

Spectrum synthetic(const SawResonator &r, int n, double half_span_hz, double noise, bool magnitude_only,
                   unsigned seed = 1234)
{
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  Spectrum s;
  s.magnitude_only = magnitude_only;
  const double f0 = r.omega / two_pi;
  for (int i = 0; i < n; ++i)
  {
    const double f = f0 - half_span_hz + 2.0 * half_span_hz * i / (n - 1);
    const auto v = reflection_s11(two_pi * f, r);
    s.frequencies.push_back(f);
    if (magnitude_only)
      s.values.emplace_back(std::abs(v) + (noise > 0.0 ? g(rng) : 0.0), 0.0);
    else
      s.values.push_back(v + (noise > 0.0 ? std::complex<double>(g(rng), g(rng)) : 0.0));
  }
  return s;
}

} // namespace

TEST(ResonanceFrequency, NominalVelocityAndWavelength)
{
  EXPECT_NEAR(resonance_frequency(3488.0, 40e-6), 87.2e6, 1e-6);
  EXPECT_NEAR(resonance_frequency(3488.0, 20e-6), 174.4e6, 1e-6);
  EXPECT_DOUBLE_EQ(resonance_frequency(3000.0, 1e-5), resonance_frequency(6000.0, 2e-5));
  EXPECT_THROW(resonance_frequency(-1.0, 1.0), InputError);
}

TEST(ReflectionS11, CriticalCouplingNullsReflection)
{
  SawResonator r = reference_resonator();
  r.gamma_ex = r.gamma_in;
  EXPECT_LT(std::abs(reflection_s11(r.omega, r)), 1e-15);
}

TEST(ReflectionS11, HalfWidthPoint)
{
  const SawResonator r = reference_resonator();
  const double on = std::abs(reflection_s11(r.omega, r) - 1.0);
  for (const double sgn : {-1.0, 1.0})
  {
    const double off = std::abs(reflection_s11(r.omega + sgn * 0.5 * r.gamma(), r) - 1.0);
    EXPECT_NEAR(off / on, 1.0 / std::sqrt(2.0), 1e-12);
  }
}

TEST(ReflectionS11, ReferenceDipDepth)
{
  const SawResonator r = reference_resonator();
  EXPECT_NEAR(std::abs(reflection_s11(r.omega, r)), 1.0 - 2.0 * 2.5 / 26.4, 1e-12);
  EXPECT_NEAR(std::abs(reflection_s11(r.omega, r)), 0.811, 1e-3);
}

TEST(ReflectionS11, PassiveAndUnityFarAway)
{
  const SawResonator r = reference_resonator();
  for (int i = -200; i <= 200; ++i)
  {
    EXPECT_LE(std::abs(reflection_s11(r.omega + i * 0.1 * r.gamma(), r)), 1.0 + 1e-15);
  }
  EXPECT_NEAR(std::abs(reflection_s11(r.omega + 1e6 * r.gamma(), r)), 1.0, 1e-6);
}

TEST(ResonatorQ, ReferenceQualityFactor)
{
  EXPECT_NEAR(reference_resonator().quality_factor(), 3318.18, 0.01);
  EXPECT_NEAR(reference_resonator().quality_factor(), 3300.0, 0.01 * 3300.0);
}

TEST(ZeroPoint, UnitInputs)
{
  SawResonator r;
  r.omega = 1.0;
  r.lambda_saw = r.length_L = r.width_W = 1.0;
  r.density = 1.0;
  EXPECT_DOUBLE_EQ(zpf_amplitude(r), std::sqrt(constants::hbar / 2.0));
}

TEST(ZeroPoint, ApertureScaling)
{
  SawResonator r = reference_resonator();
  const double u = zpf_amplitude(r);
  r.width_W *= 2.0;
  EXPECT_NEAR(zpf_amplitude(r) * std::sqrt(2.0) / u, 1.0, 1e-14);
}

TEST(ZeroPoint, ReferenceDefaultsGolden)
{
  EXPECT_NEAR(zpf_amplitude(reference_resonator()) / 1.188087891418e-18, 1.0, 1e-11);
}

TEST(PhononNumber, ResonantFormIsExact)
{
  const SawResonator r = reference_resonator();
  const double p = 3.7e-6;
  const double g = r.gamma();
  const double resonant = 4.0 * r.gamma_ex / (g * g) * p / (constants::hbar * r.omega);
  EXPECT_EQ(phonon_number(p, 0.0, r), resonant);
}

TEST(PhononNumber, HalfWidthHalvesPopulation)
{
  const SawResonator r = reference_resonator();
  EXPECT_NEAR(phonon_number(1e-6, 0.5 * r.gamma(), r) / phonon_number(1e-6, 0.0, r), 0.5, 1e-14);
  EXPECT_DOUBLE_EQ(phonon_number(1e-6, 0.3 * r.gamma(), r), phonon_number(1e-6, -0.3 * r.gamma(), r));
}

TEST(PhononNumber, TenMicrowattHandEvaluation)
{
  EXPECT_NEAR(phonon_number(10e-6, 0.0, reference_resonator()) / 3.934161124381e+14, 1.0, 1e-11);
}

TEST(SawAmplitude, SquareRootLaws)
{
  SawResonator r = reference_resonator();
  EXPECT_EQ(saw_amplitude(0.0, 0.0, r), 0.0);
  const double u1 = saw_amplitude(1e-3, 0.0, r);
  EXPECT_NEAR(saw_amplitude(4e-3, 0.0, r) / u1, 2.0, 1e-14);
  EXPECT_NEAR(saw_amplitude(drive_power(2.0, 50.0), 0.0, r) / saw_amplitude(drive_power(1.0, 50.0), 0.0, r), 2.0,
              1e-14);
  r.width_W *= 4.0;
  EXPECT_NEAR(saw_amplitude(1e-3, 0.0, r) / u1, 0.5, 1e-14);
}

TEST(SawAmplitude, OneVoltChain)
{
  const SawResonator r = reference_resonator();
  const double p = 1.0 / (2.0 * 50.0);
  const double g = r.gamma();
  const double u_zpf = std::sqrt(constants::hbar / (2.0 * r.density * r.lambda_saw * r.length_L * r.width_W * r.omega));
  const double u0 = std::sqrt(4.0 * r.gamma_ex / (g * g) * u_zpf * u_zpf * p / (constants::hbar * r.omega));
  EXPECT_NEAR(saw_amplitude(drive_power(1.0, 50.0), 0.0, r) / u0, 1.0, 1e-13);
}

TEST(Spectrum, ValidationRejectsShortAndUnsorted)
{
  Spectrum s = synthetic(reference_resonator(), 7, 100e3, 0.0, true);
  EXPECT_THROW(validate(s), InputError);
  s = synthetic(reference_resonator(), 20, 100e3, 0.0, true);
  std::swap(s.frequencies[3], s.frequencies[4]);
  EXPECT_THROW(validate(s), InputError);
}

TEST(InitialGuess, TieGoesToLowestFrequency)
{
  Spectrum s;
  for (int i = 0; i < 10; ++i)
  {
    s.frequencies.push_back(1e6 + 1e3 * i);
    s.values.emplace_back(1.0, 0.0);
  }
  s.values[3] = s.values[6] = 0.5;
  EXPECT_DOUBLE_EQ(initial_guess(s).omega, two_pi * s.frequencies[3]);
}

TEST(FitReflection, NoiselessMagnitudeRecoveryIsExact)
{
  const SawResonator r = reference_resonator();
  const auto fit = fit_reflection(synthetic(r, 401, 200e3, 0.0, true));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.omega / r.omega, 1.0, 1e-9);
  EXPECT_NEAR(fit.params.gamma_in / r.gamma_in, 1.0, 1e-9);
  EXPECT_NEAR(fit.params.gamma_ex / r.gamma_ex, 1.0, 1e-9);
  EXPECT_LT(fit.rms_residual, 1e-9);
}

TEST(FitReflection, NoiselessComplexRecoveryIsExact)
{
  SawResonator r = reference_resonator();
  r.gamma_ex = 1.7 * r.gamma_in; // over-coupled, only a complex fit can tell
  const auto fit = fit_reflection(synthetic(r, 301, 300e3, 0.0, false));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.omega / r.omega, 1.0, 1e-9);
  EXPECT_NEAR(fit.params.gamma_in / r.gamma_in, 1.0, 1e-9);
  EXPECT_NEAR(fit.params.gamma_ex / r.gamma_ex, 1.0, 1e-9);
}

TEST(FitReflection, MagnitudeFitReportsUnderCoupledBranch)
{
  SawResonator r = reference_resonator();
  std::swap(r.gamma_in, r.gamma_ex);
  const auto fit = fit_reflection(synthetic(r, 401, 200e3, 0.0, true));
  EXPECT_NEAR(fit.params.gamma_in / r.gamma_ex, 1.0, 1e-9);
  EXPECT_NEAR(fit.params.gamma_ex / r.gamma_in, 1.0, 1e-9);
}

TEST(FitReflection, NoisyRoundTripWithinTwoPercent)
{
  const SawResonator r = reference_resonator();
  const auto fit = fit_reflection(synthetic(r, 801, 200e3, 0.01, true, 42));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.omega / r.omega, 1.0, 0.02);
  EXPECT_NEAR(fit.params.gamma_in / r.gamma_in, 1.0, 0.02);
  EXPECT_NEAR(fit.params.gamma_ex / r.gamma_ex, 1.0, 0.02);
  EXPECT_NEAR(fit.quality_factor() / 3318.18, 1.0, 0.02);
  EXPECT_NEAR(fit.rms_residual, 0.01, 0.002);
}

TEST(FitReflection, NarrowSpanRejected)
{
  const SawResonator r = reference_resonator();
  EXPECT_THROW(fit_reflection(synthetic(r, 50, 20e3, 0.0, true)), InputError);
}

TEST(FitReflection, IterationCapReportsNonConvergence)
{
  const SawResonator r = reference_resonator();
  FitOptions opt;
  opt.max_iterations = 1;
  FitParameters guess{r.omega + 0.3 * r.gamma(), 2.0 * r.gamma_in, 0.5 * r.gamma_ex};
  const auto fit = fit_reflection(synthetic(r, 401, 200e3, 0.0, true), guess, opt);
  EXPECT_FALSE(fit.converged);
}

TEST(SpectrumCsv, ParsesBothLayoutsAndRejectsBadRows)
{
  std::istringstream mag("freq_hz,mag\n1,0.9\n2,0.8\n3,0.7\n4,0.6\n5,0.7\n6,0.8\n7,0.9\n8,0.95\n");
  const auto s = parse_spectrum_csv(mag, "t");
  EXPECT_TRUE(s.magnitude_only);
  EXPECT_EQ(s.frequencies.size(), 8u);

  std::istringstream cplx("freq_hz,re,im\r\n1,0.9,0\r\n2,0.8,0.1\r\n3,0.7,0\r\n4,0.6,0\r\n5,0.7,0\r\n6,0.8,0\r\n"
                          "7,0.9,0\r\n8,\"0.95\",0\r\n");
  const auto c = parse_spectrum_csv(cplx, "t");
  EXPECT_FALSE(c.magnitude_only);
  EXPECT_DOUBLE_EQ(c.values[1].imag(), 0.1);
  EXPECT_DOUBLE_EQ(c.values[7].real(), 0.95);

  std::istringstream bad_header("f,mag\n");
  EXPECT_THROW(parse_spectrum_csv(bad_header, "t"), InputError);
  std::istringstream bad_cell("freq_hz,mag\n1,abc\n");
  EXPECT_THROW(parse_spectrum_csv(bad_cell, "t"), InputError);
  std::istringstream ragged("freq_hz,mag\n1,0.5,3\n");
  EXPECT_THROW(parse_spectrum_csv(ragged, "t"), InputError);
}
