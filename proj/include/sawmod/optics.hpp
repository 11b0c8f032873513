#pragma once

// Standing SAW field in the resonator, photoelastic + electro-optic index
// change for a y-polarized (TM) guided mode, overlap with the optical mode,
// and the half-wave voltage.
//
// Device frame: x optical axis, y surface normal (substrate y <= 0),
// z SAW propagation.

#include <cmath>
#include <complex>
#include <string>

#include "sawmod/common.hpp"
#include "sawmod/materials.hpp"
#include "sawmod/quadrature.hpp"
#include "sawmod/resonator.hpp"
#include "sawmod/saw_solver.hpp"

namespace sawmod
{

struct OpticalMode
{
  double diameter_y = 6.7e-6;   // 1/e^2 intensity diameter, m
  double diameter_z = 9.7e-6;   // m
  double center_depth = 4e-6;   // depth of the mode centre below the surface, m
  double z_offset = 0.0;        // mode centre relative to the u_z antinode, m
  double wavelength = 1064e-9;  // vacuum wavelength, m
};

inline void validate(const OpticalMode &m)
{
  require_input(m.diameter_y > 0.0 && m.diameter_z > 0.0, "mode: diameters must be positive");
  require_input(m.wavelength > 0.0, "mode: wavelength must be positive");
  require_input(m.center_depth >= 0.0, "mode: center_depth must be non-negative");
  require_input(std::isfinite(m.z_offset), "mode: z_offset must be finite");
}

/// Real standing-wave field U0 * Re(F(y) exp(i k z)), the sum of a forward
/// Rayleigh wave and its time-reversed partner. F is the unit-peak
/// travelling-wave profile with u_z real and positive at the surface, so
/// u_z has an antinode at z = 0 on the surface and the peak surface
/// displacement is U0.
struct SawStandingField
{
  RayleighSolution solution;
  double amplitude = 0.0; // U0, m
  double k_saw = 0.0;     // rad/m
};

inline SawStandingField standing_field(const RayleighSolution &sol, double amplitude)
{
  require_input(amplitude >= 0.0, "standing_field: amplitude must be non-negative");
  const SawGeometry device_axes;
  require_input((sol.geometry.direction - device_axes.direction).norm() < 1e-12 &&
                    (sol.geometry.normal - device_axes.normal).norm() < 1e-12,
                "standing_field: solution must use the device frame (z propagation, y normal); rotate the material "
                "instead");
  return {sol, amplitude, sol.wavenumber};
}

struct FieldSample
{
  double ux, uy, uz, phi; // m, m, m, V
};

struct StrainAndField
{
  double S22 = 0.0, S33 = 0.0, S23 = 0.0; // tensor strain
  double E2 = 0.0, E3 = 0.0;              // d(phi)/dy, d(phi)/dz, V/m
};

namespace detail
{
// Forward-wave profile and its y-derivative at one depth, cached across z.
struct DepthSlice
{
  DepthAmplitudes value;
  DepthAmplitudes dy;
};

inline DepthSlice depth_slice(const SawStandingField &f, double y)
{
  return {depth_profile(f.solution, y), depth_profile_derivative(f.solution, y)};
}

inline StrainAndField strain_from_slice(const SawStandingField &f, const DepthSlice &s, double z)
{
  const cdouble phase = std::polar(f.amplitude, f.k_saw * z);
  const cdouble ik(0.0, f.k_saw);
  auto re = [&](cdouble c) { return std::real(c * phase); };
  StrainAndField out;
  out.S22 = re(s.dy.uy);
  out.S33 = re(ik * s.value.uz);
  out.S23 = 0.5 * (re(ik * s.value.uy) + re(s.dy.uz));
  out.E2 = re(s.dy.phi);
  out.E3 = re(ik * s.value.phi);
  return out;
}
} // namespace detail

inline FieldSample displacement_at(const SawStandingField &f, double y, double z)
{
  const DepthAmplitudes a = depth_profile(f.solution, y);
  const cdouble phase = std::polar(f.amplitude, f.k_saw * z);
  return {std::real(a.ux * phase), std::real(a.uy * phase), std::real(a.uz * phase), std::real(a.phi * phase)};
}

/// Strain and potential gradient from analytic derivatives of the
/// partial-wave superposition.
inline StrainAndField strain_and_field_at(const SawStandingField &f, double y, double z)
{
  require_input(y <= 0.0, "strain_and_field_at: y must be <= 0 (substrate side)");
  return detail::strain_from_slice(f, detail::depth_slice(f, y), z);
}

/// Index change for y polarization:
/// dn = n^3/2 [r222 E2 + r223 E3 - (p2222 S22 + p2233 S33 + 2 p2223 S23)].
inline double delta_n_y(const StrainAndField &sf, const PhotoelasticConstants &c)
{
  const double n3 = c.n_y * c.n_y * c.n_y;
  const double electro = c.r222 * sf.E2 + c.r223 * sf.E3;
  const double photo = c.p2222 * sf.S22 + c.p2233 * sf.S33 + 2.0 * c.p2223 * sf.S23;
  return 0.5 * n3 * (electro - photo);
}

struct OverlapOptions
{
  int order = 64;            // Gauss-Legendre points per axis
  double window_radii = 4.0; // half-width of the window in 1/e^2 radii
  double convergence_tolerance = 1e-4;
};

struct OverlapResult
{
  double value = 0.0;           // intensity-weighted mean of dn_y
  double relative_change = 0.0; // |I(2n) - I(n)| / |I(2n)|
  bool converged = true;
};

namespace detail
{
inline double index_overlap(const OpticalMode &mode, const SawStandingField &f, const PhotoelasticConstants &c,
                            int order, double window_radii)
{
  const double wy = 0.5 * mode.diameter_y;
  const double wz = 0.5 * mode.diameter_z;
  const double yc = -mode.center_depth;
  // The mode lives in the substrate; the window is clipped at the surface.
  const double y_lo = yc - window_radii * wy;
  const double y_hi = std::min(0.0, yc + window_radii * wy);
  const auto ry = gauss_legendre(order, y_lo, y_hi);
  const auto rz = gauss_legendre(order, -window_radii * wz, window_radii * wz);

  double num = 0.0, den = 0.0;
  for (int i = 0; i < order; ++i)
  {
    const double y = ry.nodes[i];
    const double gy = std::exp(-2.0 * (y - yc) * (y - yc) / (wy * wy));
    const DepthSlice slice = depth_slice(f, y);
    double row_num = 0.0, row_den = 0.0;
    for (int j = 0; j < order; ++j)
    {
      const double dz = rz.nodes[j];
      const double w = rz.weights[j] * std::exp(-2.0 * dz * dz / (wz * wz));
      row_num += w * delta_n_y(strain_from_slice(f, slice, mode.z_offset + dz), c);
      row_den += w;
    }
    num += ry.weights[i] * gy * row_num;
    den += ry.weights[i] * gy * row_den;
  }
  return num / den;
}
} // namespace detail

/// Intensity-weighted index change seen by the Gaussian mode,
/// dn_eff = \iint dn_y I dy dz / \iint I dy dz, by tensor Gauss-Legendre
/// quadrature. The result is re-evaluated at twice the order to flag an
/// unconverged integral.
inline OverlapResult effective_index_shift(const OpticalMode &mode, const SawStandingField &f,
                                           const PhotoelasticConstants &c, const OverlapOptions &opt = {})
{
  validate(mode);
  require_input(opt.order >= 2, "quadrature order must be at least 2");
  require_input(opt.window_radii >= 3.0, "quadrature window must cover at least 3 mode radii");
  OverlapResult out;
  out.value = detail::index_overlap(mode, f, c, opt.order, opt.window_radii);
  const double fine = detail::index_overlap(mode, f, c, 2 * opt.order, opt.window_radii);
  const double scale = std::max(std::abs(fine), std::abs(out.value));
  out.relative_change = scale > 0.0 ? std::abs(fine - out.value) / scale : 0.0;
  out.converged = out.relative_change <= opt.convergence_tolerance;
  return out;
}

/// Overlap split into parts even and odd under reflection about the mode
/// centre, z_offset + dz -> z_offset - dz. The odd part integrates to zero
/// against the symmetric Gaussian; its size measures the cancellation.
struct OverlapParity
{
  double even = 0.0;
  double odd = 0.0;
};

inline OverlapParity overlap_parity_parts(const OpticalMode &mode, const SawStandingField &f,
                                          const PhotoelasticConstants &c, const OverlapOptions &opt = {})
{
  validate(mode);
  const double wy = 0.5 * mode.diameter_y;
  const double wz = 0.5 * mode.diameter_z;
  const double yc = -mode.center_depth;
  const auto ry = gauss_legendre(opt.order, yc - opt.window_radii * wy, std::min(0.0, yc + opt.window_radii * wy));
  const auto rz = gauss_legendre(opt.order, -opt.window_radii * wz, opt.window_radii * wz);
  double even = 0.0, odd = 0.0, den = 0.0;
  for (int i = 0; i < opt.order; ++i)
  {
    const double y = ry.nodes[i];
    const double gy = ry.weights[i] * std::exp(-2.0 * (y - yc) * (y - yc) / (wy * wy));
    const auto slice = detail::depth_slice(f, y);
    for (int j = 0; j < opt.order; ++j)
    {
      const double dz = rz.nodes[j];
      const double w = gy * rz.weights[j] * std::exp(-2.0 * dz * dz / (wz * wz));
      const double plus = delta_n_y(detail::strain_from_slice(f, slice, mode.z_offset + dz), c);
      const double minus = delta_n_y(detail::strain_from_slice(f, slice, mode.z_offset - dz), c);
      even += w * 0.5 * (plus + minus);
      odd += w * 0.5 * (plus - minus);
      den += w;
    }
  }
  return {even / den, odd / den};
}

enum class KOptConvention
{
  vacuum,  // 2 pi / lambda
  material // 2 pi n_y / lambda
};

inline std::string to_string(KOptConvention k) { return k == KOptConvention::vacuum ? "vacuum" : "material"; }

inline KOptConvention parse_k_opt_convention(const std::string &s)
{
  if (s == "vacuum")
  {
    return KOptConvention::vacuum;
  }
  if (s == "material")
  {
    return KOptConvention::material;
  }
  throw InputError("k_opt_convention must be 'vacuum' or 'material', got '" + s + "'");
}

inline double optical_wavenumber(const OpticalMode &mode, const PhotoelasticConstants &c, KOptConvention k)
{
  const double k0 = constants::two_pi / mode.wavelength;
  return k == KOptConvention::vacuum ? k0 : k0 * c.n_y;
}

struct Device
{
  SawResonator resonator;
  RayleighSolution saw;
  OpticalMode mode;
  PhotoelasticConstants photoelastic;
  double z0_ohm = 50.0;
  KOptConvention k_opt = KOptConvention::vacuum;
  OverlapOptions quadrature;
};

struct VpiResult
{
  double v_pi = 0.0;             // V
  double delta_n_per_volt = 0.0; // signed, 1/V
  double envelope_per_volt = 0.0; // |dn_eff| at the best z placement, 1/V
  double u0_per_volt = 0.0;      // m/V
  double k_opt = 0.0;            // rad/m
  double node_z_offset = 0.0;    // modulation node nearest lambda_SAW/4, m
  double optimum_z_offset = 0.0; // largest |dn_eff| nearest z = 0, m
  bool quadrature_converged = true;
};

/// Half-wave voltage from pi = dn_eff(V_pi) k_opt W, using linearity of
/// dn_eff in the drive voltage (U0 ~ sqrt(P) ~ V). Throws
/// DegeneratePhysicsError when the mode sits on a modulation node.
inline VpiResult v_pi(const Device &d)
{
  validate(d.resonator);
  validate(d.mode);
  require_input(d.z0_ohm > 0.0, "z0_ohm must be positive");
  require_input(std::abs(d.resonator.lambda_saw - d.saw.wavelength) <= 1e-9 * d.saw.wavelength,
                "resonator and SAW solution use different wavelengths");

  VpiResult out;
  out.u0_per_volt = saw_amplitude(drive_power(1.0, d.z0_ohm), 0.0, d.resonator);
  const SawStandingField field = standing_field(d.saw, out.u0_per_volt);

  const OverlapResult at = effective_index_shift(d.mode, field, d.photoelastic, d.quadrature);
  OpticalMode quarter = d.mode;
  quarter.z_offset += 0.25 * d.saw.wavelength;
  const OverlapResult at_quarter = effective_index_shift(quarter, field, d.photoelastic, d.quadrature);

  // dn_eff(z0) = Re(C exp(i k z0)) exactly, so the two samples recover C.
  const double k = d.saw.wavenumber;
  const cdouble c = cdouble(at.value, -at_quarter.value) * std::polar(1.0, -k * d.mode.z_offset);
  out.delta_n_per_volt = at.value;
  out.envelope_per_volt = std::abs(c);
  out.quadrature_converged = at.converged && at_quarter.converged;
  out.k_opt = optical_wavenumber(d.mode, d.photoelastic, d.k_opt);
  {
    const double half = constants::pi / k;
    double z = (0.5 * constants::pi - std::arg(c)) / k;
    z -= half * std::round((z - 0.25 * d.saw.wavelength) / half);
    out.node_z_offset = z;
    double zo = -std::arg(c) / k;
    zo -= half * std::round(zo / half);
    out.optimum_z_offset = zo;
  }

  if (!(std::abs(out.delta_n_per_volt) > 1e-6 * out.envelope_per_volt))
  {
    throw DegeneratePhysicsError("no modulation sensitivity: the optical mode sits on a node of the index "
                                 "modulation");
  }
  out.v_pi = constants::pi / (out.k_opt * d.resonator.width_W * std::abs(out.delta_n_per_volt));
  return out;
}

/// Length-V_pi product in V cm.
inline double length_vpi_product(double v_pi, double width_W)
{
  require_input(v_pi > 0.0 && width_W > 0.0, "length_vpi_product: inputs must be positive");
  return v_pi * width_W * 100.0;
}

/// V_pi ~ W^(-1/2) at fixed drive voltage and loss rates: the phase grows
/// as W while U_zpf falls as V_mode^(-1/2).
inline double scale_vpi_with_aperture(double v_pi_ref, double width_ref, double width_new)
{
  require_input(v_pi_ref > 0.0 && width_ref > 0.0 && width_new > 0.0, "scale_vpi_with_aperture: inputs must be positive");
  return v_pi_ref * std::sqrt(width_ref / width_new);
}

} // namespace sawmod
