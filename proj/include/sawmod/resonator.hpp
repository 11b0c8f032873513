#pragma once

// One-port SAW resonator: reflection model, Lorentzian fitting of measured
// reflection spectra, and the drive power -> phonon number -> SAW amplitude
// chain. All rates are angular (rad/s) unless a name ends in _hz.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sawmod/common.hpp"

namespace sawmod
{

struct SawResonator
{
  double omega = 0.0;      // resonance, rad/s
  double gamma_in = 0.0;   // internal loss rate, rad/s
  double gamma_ex = 0.0;   // external coupling rate, rad/s
  double lambda_saw = 0.0; // m
  double length_L = 0.0;   // m, along SAW propagation
  double width_W = 0.0;    // m, aperture along the optical axis
  double density = 0.0;    // kg/m^3

  double gamma() const { return gamma_in + gamma_ex; }
  double quality_factor() const { return omega / gamma(); }
  double mode_volume() const { return lambda_saw * length_L * width_W; }
};

inline void validate(const SawResonator &r)
{
  require_input(r.omega > 0.0, "resonator: omega must be positive");
  require_input(r.gamma_in >= 0.0 && r.gamma_ex >= 0.0 && r.gamma() > 0.0,
                "resonator: loss rates must be non-negative with positive total");
  require_input(r.lambda_saw > 0.0 && r.length_L > 0.0 && r.width_W > 0.0, "resonator: geometry must be positive");
  require_input(r.density > 0.0, "resonator: density must be positive");
}

inline double resonance_frequency(double velocity, double lambda_saw)
{
  require_input(velocity > 0.0 && lambda_saw > 0.0, "velocity and wavelength must be positive");
  return velocity / lambda_saw;
}

/// S11(w) = 1 - G_ex / (i (w - W) + G / 2)
inline std::complex<double> reflection_s11(double omega, const SawResonator &r)
{
  const std::complex<double> denom(0.5 * r.gamma(), omega - r.omega);
  return 1.0 - r.gamma_ex / denom;
}

/// Drive power delivered by a source of amplitude `voltage` into `z0`.
inline double drive_power(double voltage, double z0_ohm)
{
  require_input(z0_ohm > 0.0, "reference impedance must be positive");
  return voltage * voltage / (2.0 * z0_ohm);
}

/// Zero-point fluctuation amplitude sqrt(hbar / (2 rho V_mode W)).
inline double zpf_amplitude(const SawResonator &r)
{
  require_input(r.density > 0.0 && r.mode_volume() > 0.0 && r.omega > 0.0,
                "zpf_amplitude: density, mode volume and omega must be positive");
  return std::sqrt(constants::hbar / (2.0 * r.density * r.mode_volume() * r.omega));
}

/// Steady-state phonon number for drive power `power` at detuning
/// `detuning` = w_RF - W.
inline double phonon_number(double power, double detuning, const SawResonator &r)
{
  require_input(power >= 0.0, "phonon_number: power must be non-negative");
  const double g = r.gamma();
  return r.gamma_ex / (detuning * detuning + 0.25 * g * g) * power / (constants::hbar * r.omega);
}

inline double saw_amplitude(double power, double detuning, const SawResonator &r)
{
  return zpf_amplitude(r) * std::sqrt(phonon_number(power, detuning, r));
}

// ---------------------------------------------------------------------------
// Spectrum fitting

struct Spectrum
{
  std::vector<double> frequencies;               // Hz, strictly increasing
  std::vector<std::complex<double>> values;      // S11; imaginary part ignored when magnitude_only
  bool magnitude_only = true;
};

inline void validate(const Spectrum &s)
{
  require_input(s.frequencies.size() == s.values.size(), "spectrum: frequency and value arrays differ in length");
  require_input(s.frequencies.size() >= 8, "spectrum: at least 8 points are required");
  for (std::size_t i = 0; i < s.frequencies.size(); ++i)
  {
    require_input(std::isfinite(s.frequencies[i]) && std::isfinite(s.values[i].real()) &&
                      std::isfinite(s.values[i].imag()),
                  "spectrum: non-finite entry at row " + std::to_string(i + 1));
    if (i > 0)
    {
      require_input(s.frequencies[i] > s.frequencies[i - 1],
                    "spectrum: frequencies must be strictly increasing (row " + std::to_string(i + 1) + ")");
    }
  }
}

/// Angular-frequency parameters of a reflection fit.
struct FitParameters
{
  double omega = 0.0;
  double gamma_in = 0.0;
  double gamma_ex = 0.0;
};

struct FitResult
{
  FitParameters params;
  double rms_residual = 0.0; // |S11| units
  bool converged = false;
  int iterations = 0;

  double quality_factor() const { return params.omega / (params.gamma_in + params.gamma_ex); }
};

struct FitOptions
{
  int max_iterations = 200;
  double step_tolerance = 1e-14; // relative parameter change
};

/// Initial guess from the dip: centre at the global minimum of |S11| (lowest
/// frequency on ties), width from the half-depth crossings of 1 - |S11|^2,
/// coupling from the dip depth assuming an under-coupled resonator.
inline FitParameters initial_guess(const Spectrum &s)
{
  validate(s);
  const std::size_t n = s.frequencies.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    mag[i] = std::abs(s.values[i]);
  }
  std::size_t imin = 0;
  for (std::size_t i = 1; i < n; ++i)
  {
    if (mag[i] < mag[imin])
    {
      imin = i;
    }
  }
  const double peak = 1.0 - mag[imin] * mag[imin];
  const double half = 0.5 * peak;
  auto depth = [&](std::size_t i) { return 1.0 - mag[i] * mag[i]; };
  auto crossing = [&](std::size_t a, std::size_t b) {
    const double da = depth(a), db = depth(b);
    const double t = (da - half) / (da - db);
    return s.frequencies[a] + t * (s.frequencies[b] - s.frequencies[a]);
  };

  std::optional<double> lo, hi;
  for (std::size_t i = imin; i > 0; --i)
  {
    if (depth(i - 1) <= half)
    {
      lo = crossing(i, i - 1);
      break;
    }
  }
  for (std::size_t i = imin; i + 1 < n; ++i)
  {
    if (depth(i + 1) <= half)
    {
      hi = crossing(i, i + 1);
      break;
    }
  }
  const double f0 = s.frequencies[imin];
  double fwhm;
  if (lo && hi)
  {
    fwhm = *hi - *lo;
  }
  else if (lo || hi)
  {
    fwhm = 2.0 * std::abs((lo ? *lo : *hi) - f0);
  }
  else
  {
    fwhm = 3.0 * (s.frequencies.back() - s.frequencies.front()) / static_cast<double>(n - 1);
  }

  // Signed on-resonance reflection (G_in - G_ex) / G.
  double d = mag[imin];
  if (!s.magnitude_only && s.values[imin].real() < 0.0)
  {
    d = -d;
  }
  FitParameters p;
  const double g = constants::two_pi * fwhm;
  p.omega = constants::two_pi * f0;
  p.gamma_ex = 0.5 * g * (1.0 - d);
  p.gamma_in = g - p.gamma_ex;
  return p;
}

namespace detail
{
// Residuals and Jacobian in scaled parameters x = ((W - W0)/G0, G_in/G0, G_ex/G0).
struct FitProblem
{
  const Spectrum &spectrum;
  double omega0;
  double gamma0;

  FitParameters unscale(const Eigen::Vector3d &x) const
  {
    return {omega0 + gamma0 * x[0], gamma0 * x[1], gamma0 * x[2]};
  }

  int residual_count() const
  {
    const int n = static_cast<int>(spectrum.frequencies.size());
    return spectrum.magnitude_only ? n : 2 * n;
  }

  void evaluate(const Eigen::Vector3d &x, Eigen::VectorXd &res, Eigen::MatrixXd *jac) const
  {
    const FitParameters p = unscale(x);
    const int n = static_cast<int>(spectrum.frequencies.size());
    res.resize(residual_count());
    if (jac)
    {
      jac->resize(residual_count(), 3);
    }
    const std::complex<double> I(0.0, 1.0);
    for (int i = 0; i < n; ++i)
    {
      const double w = constants::two_pi * spectrum.frequencies[i];
      const std::complex<double> d = I * (w - p.omega) + 0.5 * (p.gamma_in + p.gamma_ex);
      const std::complex<double> s = 1.0 - p.gamma_ex / d;
      // dS/d(scaled parameter)
      const std::complex<double> d2 = d * d;
      const std::complex<double> ds[3] = {-I * p.gamma_ex / d2 * gamma0, p.gamma_ex / (2.0 * d2) * gamma0,
                                          (-1.0 / d + p.gamma_ex / (2.0 * d2)) * gamma0};
      const std::complex<double> data = spectrum.values[i];
      if (spectrum.magnitude_only)
      {
        res[i] = std::norm(s) - std::norm(data);
        if (jac)
        {
          for (int k = 0; k < 3; ++k)
            (*jac)(i, k) = 2.0 * std::real(std::conj(s) * ds[k]);
        }
      }
      else
      {
        res[2 * i] = s.real() - data.real();
        res[2 * i + 1] = s.imag() - data.imag();
        if (jac)
        {
          for (int k = 0; k < 3; ++k)
          {
            (*jac)(2 * i, k) = ds[k].real();
            (*jac)(2 * i + 1, k) = ds[k].imag();
          }
        }
      }
    }
  }
};
} // namespace detail

/// Levenberg-Marquardt fit of the one-port reflection model. Magnitude-only
/// spectra are fitted on |S11|^2 and cannot tell G_in from G_ex; the
/// under-coupled branch (G_ex <= G_in) is reported.
inline FitResult fit_reflection(const Spectrum &s, std::optional<FitParameters> guess = std::nullopt,
                                const FitOptions &opt = {})
{
  validate(s);
  const FitParameters start = guess ? *guess : initial_guess(s);
  const double g0 = start.gamma_in + start.gamma_ex;
  require_input(start.omega > 0.0 && g0 > 0.0, "fit_reflection: initial guess must have positive omega and linewidth");
  const double span = constants::two_pi * (s.frequencies.back() - s.frequencies.front());
  require_input(span >= 3.0 * g0, "fit_reflection: spectrum must span at least 3 linewidths around the dip");

  detail::FitProblem prob{s, start.omega, g0};
  Eigen::Vector3d x(0.0, start.gamma_in / g0, start.gamma_ex / g0);
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd jac;
  prob.evaluate(x, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  FitResult out;
  for (int iter = 1; iter <= opt.max_iterations; ++iter)
  {
    out.iterations = iter;
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * r;
    if (grad.cwiseAbs().maxCoeff() <= 1e-300 || cost == 0.0)
    {
      out.converged = true;
      break;
    }

    bool accepted = false;
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt)
    {
      Eigen::Matrix3d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
      step = -damped.ldlt().solve(grad);
      const Eigen::Vector3d trial = x + step;
      if (trial[1] < 0.0 || trial[2] <= 0.0 || trial[1] + trial[2] <= 0.0)
      {
        lambda *= 10.0;
        continue;
      }
      prob.evaluate(trial, r_trial, nullptr);
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost <= cost)
      {
        x = trial;
        cost = trial_cost;
        prob.evaluate(x, r, &jac);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      }
      else
      {
        lambda *= 10.0;
      }
    }
    if (!accepted || step.cwiseAbs().maxCoeff() <= opt.step_tolerance * (1.0 + x.cwiseAbs().maxCoeff()))
    {
      // No downhill step left at any damping, or the step has collapsed:
      // the iterate is a stationary point.
      out.converged = true;
      break;
    }
  }

  FitParameters p = prob.unscale(x);
  if (s.magnitude_only && p.gamma_ex > p.gamma_in)
  {
    std::swap(p.gamma_ex, p.gamma_in);
  }
  out.params = p;

  SawResonator model;
  model.omega = p.omega;
  model.gamma_in = p.gamma_in;
  model.gamma_ex = p.gamma_ex;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.frequencies.size(); ++i)
  {
    const auto m = reflection_s11(constants::two_pi * s.frequencies[i], model);
    const double e = s.magnitude_only ? std::abs(m) - std::abs(s.values[i]) : std::abs(m - s.values[i]);
    acc += e * e;
  }
  out.rms_residual = std::sqrt(acc / static_cast<double>(s.frequencies.size()));
  return out;
}

} // namespace sawmod
