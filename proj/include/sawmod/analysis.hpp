#pragma once

// Phase-modulation sidebands and V_pi extraction from heterodyne sideband
// power ratios.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sawmod/common.hpp"

namespace sawmod
{

struct ModulationDrive
{
  double voltage = 0.0;   // drive amplitude, V
  double frequency = 0.0; // Hz
  double v_pi_ref = 0.0;  // calibrated reference modulator, V
};

inline double modulation_depth(double voltage, double v_pi)
{
  require_input(v_pi > 0.0, "modulation_depth: v_pi must be positive");
  return constants::pi * voltage / v_pi;
}

/// J_0(beta) ... J_nmax(beta) by Miller's downward recurrence, normalized
/// with J_0 + 2 sum J_2k = 1.
inline std::vector<double> bessel_j_sequence(double beta, int nmax)
{
  require_input(nmax >= 0, "bessel order must be non-negative");
  std::vector<double> out(nmax + 1, 0.0);
  if (beta == 0.0)
  {
    out[0] = 1.0;
    return out;
  }
  const double x = std::abs(beta);
  const int top = static_cast<int>(std::max<double>(nmax, x)) + 20 + static_cast<int>(std::sqrt(60.0 * (nmax + x)));
  const int start = top + (top % 2); // even

  std::vector<double> j(start + 2, 0.0);
  j[start + 1] = 0.0;
  j[start] = 1e-30;
  for (int k = start; k > 0; --k)
  {
    j[k - 1] = 2.0 * k / x * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > 1e250)
    {
      for (int m = k - 1; m <= start; ++m)
        j[m] *= 1e-250;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= start; k += 2)
  {
    norm += 2.0 * j[k];
  }
  for (int n = 0; n <= nmax; ++n)
  {
    out[n] = j[n] / norm;
    if (beta < 0.0 && n % 2 == 1)
    {
      out[n] = -out[n];
    }
  }
  return out;
}

inline double bessel_j(int n, double beta) { return bessel_j_sequence(beta, n).back(); }

/// Power in sideband `order` relative to the carrier, J_n^2 / J_0^2.
inline double sideband_power_relative(double beta, int order)
{
  require_input(order >= 0, "sideband order must be non-negative");
  const auto j = bessel_j_sequence(beta, order);
  require_input(j[0] != 0.0, "carrier is extinguished (J_0(beta) = 0)");
  return j[order] * j[order] / (j[0] * j[0]);
}

/// Small-signal extraction: sideband power ~ 1/V_pi^2, so
/// V_pi = V_pi,ref 10^(delta_db / 20). Positive delta_db means the device
/// under test is weaker than the reference.
inline double vpi_from_sideband_ratio(double delta_db, double v_pi_ref)
{
  require_input(v_pi_ref > 0.0, "vpi_from_sideband_ratio: v_pi_ref must be positive");
  return v_pi_ref * std::pow(10.0, delta_db / 20.0);
}

/// Large-signal extraction: solves J_1(pi V / V_pi)^2 = J_1(pi V / V_pi,ref)^2
/// 10^(-delta_db / 10) for V_pi at drive amplitude `drive_voltage`, on the
/// branch where J_1 is increasing.
inline double vpi_from_sideband_ratio_exact(double delta_db, double v_pi_ref, double drive_voltage)
{
  require_input(v_pi_ref > 0.0, "v_pi_ref must be positive");
  require_input(drive_voltage > 0.0, "drive voltage must be positive");
  constexpr double beta_peak = 1.8411837813406593; // first maximum of J_1
  const double beta_ref = modulation_depth(drive_voltage, v_pi_ref);
  require_input(beta_ref < beta_peak, "reference modulation depth is beyond the first maximum of J_1");
  const double j1_ref = bessel_j(1, beta_ref);
  const double target = j1_ref * j1_ref * std::pow(10.0, -delta_db / 10.0);
  const double j1_peak = bessel_j(1, beta_peak);
  require_input(target < j1_peak * j1_peak, "sideband ratio exceeds the largest first-sideband power");

  double lo = 0.0, hi = beta_peak;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i)
  {
    const double mid = 0.5 * (lo + hi);
    const double j1 = bessel_j(1, mid);
    (j1 * j1 < target ? lo : hi) = mid;
  }
  return constants::pi * drive_voltage / (0.5 * (lo + hi));
}

/// Heterodyne beat of the first sideband with the frequency-shifted LO.
inline double beat_frequency(double omega_aom, double omega_rf) { return omega_aom - omega_rf; }

} // namespace sawmod
