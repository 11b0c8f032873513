#pragma once

// Waveguide Fabry-Perot cavity: FSR, finesse, Q, and the resonant
// enhancement of the first modulation sideband.
//
// Two finesse conventions coexist and are kept apart by name:
//   spectral finesse     F = FSR / (kappa / 2 pi)
//   loss-limited finesse F = 2 pi / delta_rt, delta_rt the round-trip
//                        fractional power loss of the waveguide

#include <cmath>
#include <limits>

#include "sawmod/common.hpp"

namespace sawmod
{

struct OpticalCavity
{
  double fsr = 0.0;               // Hz
  double kappa = 0.0;             // total dissipation rate, rad/s
  double kappa_ex = 0.0;          // external coupling rate, rad/s
  double finesse = 0.0;
  double optical_frequency = 0.0; // Hz

  double quality_factor() const { return constants::two_pi * optical_frequency / kappa; }
};

inline void validate(const OpticalCavity &c)
{
  require_input(c.kappa_ex >= 0.0 && c.kappa_ex <= c.kappa, "cavity: require 0 <= kappa_ex <= kappa");
  require_input(c.finesse > 0.0, "cavity: finesse must be positive");
}

inline double finesse_from_spectrum(double fsr_hz, double kappa_over_2pi_hz)
{
  require_input(fsr_hz > 0.0 && kappa_over_2pi_hz > 0.0, "finesse_from_spectrum: inputs must be positive");
  return fsr_hz / kappa_over_2pi_hz;
}

inline double cavity_quality_factor(double optical_frequency_hz, double kappa_over_2pi_hz)
{
  require_input(optical_frequency_hz > 0.0 && kappa_over_2pi_hz > 0.0, "cavity_quality_factor: inputs must be positive");
  return optical_frequency_hz / kappa_over_2pi_hz;
}

/// c / (2 n L)
inline double fsr_from_geometry(double group_index, double length)
{
  require_input(group_index > 1.0 && length > 0.0, "fsr_from_geometry: need n > 1 and length > 0");
  return constants::speed_of_light / (2.0 * group_index * length);
}

/// P_SB,cavity / P_SB,waveguide = (2F/pi)^2 kappa_ex^2 / (Omega^2 + (kappa/2)^2)
inline double sideband_enhancement(const OpticalCavity &c, double omega)
{
  validate(c);
  const double denom = omega * omega + 0.25 * c.kappa * c.kappa;
  require_input(denom > 0.0, "sideband_enhancement: Omega and kappa cannot both vanish");
  const double g = 2.0 * c.finesse / constants::pi;
  return g * g * c.kappa_ex * c.kappa_ex / denom;
}

/// V_pi with the cavity, from the amplitude (square-root) form of the
/// sideband power enhancement.
inline double vpi_reduction(double v_pi, double finesse, double omega, double kappa, double kappa_ex)
{
  require_input(v_pi > 0.0, "vpi_reduction: v_pi must be positive");
  OpticalCavity c;
  c.finesse = finesse;
  c.kappa = kappa;
  c.kappa_ex = kappa_ex;
  const double enhancement = sideband_enhancement(c, omega);
  if (!(enhancement > 0.0))
  {
    throw DegeneratePhysicsError("vpi_reduction: zero sideband enhancement (uncoupled cavity)");
  }
  return v_pi / std::sqrt(enhancement);
}

/// Internal-loss-limited finesse 2 pi / delta_rt with
/// delta_rt = 1 - 10^(-2 loss L / 10). Returns +infinity for a lossless
/// waveguide.
inline double max_finesse_from_loss(double loss_db_per_cm, double length)
{
  require_input(loss_db_per_cm >= 0.0 && length > 0.0, "max_finesse_from_loss: need loss >= 0 and length > 0");
  const double length_cm = length * 100.0;
  const double round_trip_loss = -std::expm1(-2.0 * loss_db_per_cm * length_cm / 10.0 * std::log(10.0));
  if (round_trip_loss <= 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  return constants::two_pi / round_trip_loss;
}

} // namespace sawmod
