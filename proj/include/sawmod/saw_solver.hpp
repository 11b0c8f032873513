#pragma once

// Rayleigh-type surface acoustic wave on a piezoelectric half-space,
// solved by the partial-wave method in the quasi-static approximation.
//
// Conventions: the substrate occupies y <= 0 along the outward surface
// normal n, the wave travels along p, and every field varies as
// exp(i k (p.x + alpha y)) so a decaying partial wave has Im(alpha) < 0.
// The electric potential is carried internally in scaled form
// phi_hat = phi * sqrt(eps_ref / c_ref), which puts k*phi_hat on the same
// footing as a strain and keeps the boundary matrix well conditioned.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sawmod/common.hpp"
#include "sawmod/materials.hpp"

namespace sawmod
{

using cdouble = std::complex<double>;

enum class Boundary
{
  free,
  metalized
};

inline std::string to_string(Boundary b) { return b == Boundary::free ? "free" : "metalized"; }

inline Boundary parse_boundary(const std::string &s)
{
  if (s == "free")
  {
    return Boundary::free;
  }
  if (s == "metalized")
  {
    return Boundary::metalized;
  }
  throw InputError("boundary must be 'free' or 'metalized', got '" + s + "'");
}

/// Propagation direction and outward surface normal, in the material frame.
struct SawGeometry
{
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();
};

struct PartialWaveRoot
{
  cdouble alpha;
  Eigen::Vector4cd polarization; // (u_x, u_y, u_z, phi_hat), unit norm
};

struct PartialWaves
{
  std::vector<PartialWaveRoot> roots; // all 8, ordered by (Im alpha, Re alpha)
  bool degenerate_cluster = false;    // some roots coincided within 1e-6
};

// The trial velocity admits fewer than four decaying partial waves.
class NotSubsonicError : public InputError
{
public:
  using InputError::InputError;
};

namespace detail
{

struct ScaledMaterial
{
  Tensor4 c;
  Tensor3 e;
  Eigen::Matrix3d eps;
  double density = 0.0;   // rho / c_ref, s^2/m^2
  double vacuum = 0.0;    // eps_0 / eps_ref
  double phi_scale = 1.0; // phi = phi_scale * phi_hat, V/m
};

inline ScaledMaterial scale_material(const MaterialSet &m)
{
  const double c_ref = m.stiffness.cwiseAbs().maxCoeff();
  const double eps_ref = m.permittivity.diagonal().maxCoeff();
  require_input(c_ref > 0.0 && eps_ref > 0.0, "material: stiffness and permittivity must be nonzero");

  ScaledMaterial s;
  s.c = voigt_to_full(Matrix6(m.stiffness / c_ref));
  s.e = voigt_to_full(Matrix36(m.piezo / std::sqrt(c_ref * eps_ref)));
  s.eps = m.permittivity / eps_ref;
  s.density = m.density / c_ref;
  s.vacuum = constants::vacuum_permittivity / eps_ref;
  s.phi_scale = std::sqrt(c_ref / eps_ref);
  return s;
}

// Secular matrix A(alpha) = a0 + alpha a1 + alpha^2 a2 acting on (u, phi_hat).
struct SecularPolynomial
{
  Eigen::Matrix4d a0, a1, a2;

  Eigen::Matrix4cd at(cdouble alpha) const
  {
    return a0.cast<cdouble>() + alpha * a1.cast<cdouble>() + alpha * alpha * a2.cast<cdouble>();
  }
};

inline SecularPolynomial secular_polynomial(const ScaledMaterial &s, double velocity, const SawGeometry &g)
{
  const Eigen::Vector3d &p = g.direction;
  const Eigen::Vector3d &n = g.normal;

  // Each entry is a bilinear form f(x, y) evaluated on m = p + alpha n.
  auto expand = [&](auto &&form, int row, int col, SecularPolynomial &out, double sign) {
    out.a0(row, col) = sign * form(p, p);
    out.a1(row, col) = sign * (form(p, n) + form(n, p));
    out.a2(row, col) = sign * form(n, n);
  };

  SecularPolynomial sp;
  for (int j = 0; j < 3; ++j)
  {
    for (int k = 0; k < 3; ++k)
    {
      expand(
          [&](const Eigen::Vector3d &x, const Eigen::Vector3d &y) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i)
              for (int l = 0; l < 3; ++l)
                acc += s.c(i, j, k, l) * x[i] * y[l];
            return acc;
          },
          j, k, sp, 1.0);
    }
    expand(
        [&](const Eigen::Vector3d &x, const Eigen::Vector3d &y) {
          double acc = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int l = 0; l < 3; ++l)
              acc += s.e(i, j, l) * x[i] * y[l];
          return acc;
        },
        j, 3, sp, 1.0);
    sp.a0(3, j) = sp.a0(j, 3);
    sp.a1(3, j) = sp.a1(j, 3);
    sp.a2(3, j) = sp.a2(j, 3);
    sp.a0(j, j) -= s.density * velocity * velocity;
  }
  expand([&](const Eigen::Vector3d &x, const Eigen::Vector3d &y) { return x.dot(s.eps * y); }, 3, 3, sp, -1.0);
  return sp;
}

inline void validate_geometry(const SawGeometry &g)
{
  require_input(std::abs(g.direction.norm() - 1.0) < 1e-12 && std::abs(g.normal.norm() - 1.0) < 1e-12,
                "geometry: direction and normal must be unit vectors");
  require_input(std::abs(g.direction.dot(g.normal)) < 1e-12, "geometry: direction must be orthogonal to normal");
}

// Orthonormal basis of the null space of a 4x4 matrix, `dim` columns.
inline Eigen::MatrixXcd null_space(const Eigen::Matrix4cd &a, int dim)
{
  Eigen::JacobiSVD<Eigen::Matrix4cd> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

} // namespace detail

/// Slowest-to-fastest bulk velocities along `direction`, piezoelectrically
/// stiffened.
inline std::array<double, 3> bulk_velocities(const MaterialSet &m, const Eigen::Vector3d &direction)
{
  const auto s = detail::scale_material(m);
  SawGeometry g;
  g.direction = direction.normalized();
  g.normal = g.direction.unitOrthogonal();
  const auto sp = detail::secular_polynomial(s, 0.0, g);
  const Eigen::Matrix3d gamma = sp.a0.topLeftCorner<3, 3>();
  const Eigen::Vector3d piezo = sp.a0.topRightCorner<3, 1>();
  const double eps = -sp.a0(3, 3);
  const Eigen::Matrix3d stiffened = gamma + piezo * piezo.transpose() / eps;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(stiffened);
  std::array<double, 3> v{};
  for (int i = 0; i < 3; ++i)
  {
    v[i] = std::sqrt(std::max(es.eigenvalues()[i], 0.0) / s.density);
  }
  return v;
}

/// All eight roots of det A(alpha) = 0 at trial velocity `velocity` with
/// their null-space polarizations.
inline PartialWaves partial_wave_roots(double velocity, const MaterialSet &m, const SawGeometry &g = {})
{
  require_input(velocity > 0.0, "velocity must be positive");
  detail::validate_geometry(g);
  const auto s = detail::scale_material(m);
  const auto sp = detail::secular_polynomial(s, velocity, g);

  Eigen::PartialPivLU<Eigen::Matrix4d> lu(sp.a2);
  require_input(std::abs(lu.determinant()) > 1e-14, "secular polynomial has a singular leading coefficient");

  Eigen::Matrix<double, 8, 8> companion = Eigen::Matrix<double, 8, 8>::Zero();
  companion.topRightCorner<4, 4>() = Eigen::Matrix4d::Identity();
  companion.bottomLeftCorner<4, 4>() = -lu.solve(sp.a0);
  companion.bottomRightCorner<4, 4>() = -lu.solve(sp.a1);

  Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> es(companion, false);
  if (es.info() != Eigen::Success)
  {
    throw ConvergenceError("partial-wave eigenproblem did not converge");
  }
  std::vector<cdouble> alphas(es.eigenvalues().data(), es.eigenvalues().data() + 8);
  std::sort(alphas.begin(), alphas.end(), [](cdouble a, cdouble b) {
    return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
  });

  PartialWaves out;
  out.roots.reserve(8);
  std::size_t i = 0;
  while (i < alphas.size())
  {
    // Group coincident roots and take an orthonormal basis of their common
    // null space; a repeated root carries one polarization per multiplicity.
    std::size_t j = i + 1;
    const double tol = 1e-6 * std::max(1.0, std::abs(alphas[i]));
    while (j < alphas.size() && std::abs(alphas[j] - alphas[i]) < tol)
    {
      ++j;
    }
    const int mult = static_cast<int>(j - i);
    cdouble mean = 0.0;
    for (std::size_t r = i; r < j; ++r)
    {
      mean += alphas[r];
    }
    mean /= static_cast<double>(mult);
    if (mult > 1)
    {
      out.degenerate_cluster = true;
    }
    const Eigen::MatrixXcd basis = detail::null_space(sp.at(mean), mult);
    for (int r = 0; r < mult; ++r)
    {
      out.roots.push_back({mult > 1 ? mean : alphas[i + r], basis.col(r).normalized()});
    }
    i = j;
  }
  return out;
}

/// The four roots that decay into the substrate (y -> -infinity).
inline std::array<PartialWaveRoot, 4> decaying_roots(const PartialWaves &pw)
{
  std::vector<PartialWaveRoot> picked;
  for (const auto &r : pw.roots)
  {
    if (r.alpha.imag() < -1e-9 * std::max(1.0, std::abs(r.alpha)))
    {
      picked.push_back(r);
    }
  }
  if (picked.size() != 4)
  {
    throw NotSubsonicError("trial velocity is not subsonic: found " + std::to_string(picked.size()) +
                           " decaying partial waves instead of 4");
  }
  return {picked[0], picked[1], picked[2], picked[3]};
}

/// Smallest over largest singular value of A(alpha); zero at a root. Stays
/// meaningful when a decoupled polarization leaves a whole row at zero.
inline double secular_residual(double velocity, const MaterialSet &m, cdouble alpha, const SawGeometry &g = {})
{
  const auto s = detail::scale_material(m);
  const Eigen::Matrix4cd a = detail::secular_polynomial(s, velocity, g).at(alpha);
  const Eigen::JacobiSVD<Eigen::Matrix4cd> svd(a);
  const auto &sv = svd.singularValues();
  return sv[0] > 0.0 ? sv[3] / sv[0] : 0.0;
}

namespace detail
{
inline Eigen::Matrix4cd boundary_matrix(const ScaledMaterial &s, const std::array<PartialWaveRoot, 4> &roots,
                                        Boundary boundary, const SawGeometry &g)
{
  const Eigen::Vector3d &n = g.normal;
  Eigen::Matrix4cd b;
  for (int r = 0; r < 4; ++r)
  {
    const cdouble alpha = roots[r].alpha;
    const Eigen::Vector3cd m = g.direction.cast<cdouble>() + alpha * n.cast<cdouble>();
    const Eigen::Vector4cd &a = roots[r].polarization;
    for (int j = 0; j < 3; ++j)
    {
      cdouble t = 0.0;
      for (int i = 0; i < 3; ++i)
      {
        if (n[i] == 0.0)
        {
          continue;
        }
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            t += s.c(i, j, k, l) * n[i] * m[l] * a[k];
        for (int k = 0; k < 3; ++k)
          t += s.e(k, i, j) * n[i] * m[k] * a[3];
      }
      b(j, r) = t;
    }
    if (boundary == Boundary::metalized)
    {
      b(3, r) = a[3];
    }
    else
    {
      cdouble d = 0.0;
      for (int i = 0; i < 3; ++i)
      {
        if (n[i] == 0.0)
        {
          continue;
        }
        for (int k = 0; k < 3; ++k)
        {
          for (int l = 0; l < 3; ++l)
            d += s.e(i, k, l) * n[i] * m[l] * a[k];
          d -= s.eps(i, k) * n[i] * m[k] * a[3];
        }
      }
      b(3, r) = cdouble(0.0, 1.0) * d - s.vacuum * a[3];
    }
  }
  for (int row = 0; row < 4; ++row)
  {
    const double norm = b.row(row).norm();
    if (!(norm > 0.0))
    {
      throw ConvergenceError("boundary matrix has an all-zero row");
    }
    b.row(row) /= norm;
  }
  return b;
}
} // namespace detail

/// Row-normalized determinant of the surface boundary-condition matrix:
/// three traction rows and one electrical row (open-circuit matching to
/// vacuum for a free surface, phi = 0 for a metalized one).
inline cdouble boundary_determinant(const std::array<PartialWaveRoot, 4> &roots, const MaterialSet &m,
                                    Boundary boundary, const SawGeometry &g = {})
{
  const auto s = detail::scale_material(m);
  return detail::boundary_matrix(s, roots, boundary, g).determinant();
}

/// Convenience: |D| at a trial velocity, or nullopt above the limiting velocity.
inline std::optional<double> boundary_residual(double velocity, const MaterialSet &m, Boundary boundary,
                                               const SawGeometry &g = {})
{
  try
  {
    const auto roots = decaying_roots(partial_wave_roots(velocity, m, g));
    return std::abs(boundary_determinant(roots, m, boundary, g));
  }
  catch (const NotSubsonicError &)
  {
    return std::nullopt;
  }
}

struct RayleighSolution
{
  double velocity = 0.0;   // m/s
  double wavelength = 0.0; // m
  double wavenumber = 0.0; // rad/m
  std::array<PartialWaveRoot, 4> roots{};
  std::array<cdouble, 4> weights{};
  Boundary boundary = Boundary::free;
  SawGeometry geometry;
  MaterialSet material;
  double phi_scale = 1.0; // volts per metre of scaled potential
  double residual = 0.0;  // normalized |D| at `velocity`
  bool degenerate_roots = false;
};

struct RayleighOptions
{
  std::optional<std::pair<double, double>> bracket; // default: [0.5, 1) x slowest bulk velocity
  int grid_points = 200;
  double relative_tolerance = 1e-13;
  double residual_threshold = 1e-8;
  SawGeometry geometry;
};

/// Complex amplitudes of a travelling wave at depth y (y <= 0), per unit
/// peak surface displacement. `phi` is in volts per metre of displacement.
struct DepthAmplitudes
{
  cdouble ux, uy, uz, phi;
};

namespace detail
{
inline Eigen::Vector4cd superpose(const RayleighSolution &sol, double y, bool derivative)
{
  Eigen::Vector4cd f = Eigen::Vector4cd::Zero();
  for (int r = 0; r < 4; ++r)
  {
    const cdouble ika = cdouble(0.0, sol.wavenumber) * sol.roots[r].alpha;
    cdouble factor = sol.weights[r] * std::exp(ika * y);
    if (derivative)
    {
      factor *= ika;
    }
    f += factor * sol.roots[r].polarization;
  }
  f[3] *= sol.phi_scale;
  return f;
}

inline DepthAmplitudes to_amplitudes(const Eigen::Vector4cd &f) { return {f[0], f[1], f[2], f[3]}; }

// Peak over one period of |Re(d exp(i theta))|, the semi-major axis of the
// polarization ellipse.
inline double ellipse_semi_major(const Eigen::Vector3cd &d)
{
  const double sum_abs2 = d.squaredNorm();
  const double abs_sum2 = std::abs(d.cwiseProduct(d).sum());
  return std::sqrt(0.5 * (sum_abs2 + abs_sum2));
}
} // namespace detail

inline DepthAmplitudes depth_profile(const RayleighSolution &sol, double y)
{
  require_input(y <= 0.0, "depth_profile: y must be <= 0 (substrate side)");
  return detail::to_amplitudes(detail::superpose(sol, y, false));
}

/// d/dy of the depth profile, evaluated analytically.
inline DepthAmplitudes depth_profile_derivative(const RayleighSolution &sol, double y)
{
  require_input(y <= 0.0, "depth_profile: y must be <= 0 (substrate side)");
  return detail::to_amplitudes(detail::superpose(sol, y, true));
}

/// Peak surface displacement over one acoustic period.
inline double peak_surface_displacement(const RayleighSolution &sol)
{
  const Eigen::Vector4cd f = detail::superpose(sol, 0.0, false);
  return detail::ellipse_semi_major(f.head<3>());
}

inline RayleighSolution solve_rayleigh(const MaterialSet &m, Boundary boundary, double wavelength,
                                       const RayleighOptions &opt = {})
{
  require_input(wavelength > 0.0, "wavelength must be positive");
  require_input(opt.grid_points >= 3, "grid_points must be at least 3");
  detail::validate_geometry(opt.geometry);
  const auto &g = opt.geometry;

  double v_lo, v_hi;
  if (opt.bracket)
  {
    std::tie(v_lo, v_hi) = *opt.bracket;
  }
  else
  {
    const double v_bulk = bulk_velocities(m, g.direction)[0];
    v_lo = 0.5 * v_bulk;
    v_hi = v_bulk * (1.0 - 1e-9);
  }
  require_input(v_lo > 0.0 && v_hi > v_lo, "velocity bracket must satisfy 0 < lo < hi");

  const int npts = opt.grid_points;
  std::vector<double> grid(npts);
  std::vector<double> value(npts, std::numeric_limits<double>::infinity());
  int best = -1;
  for (int i = 0; i < npts; ++i)
  {
    grid[i] = v_lo + (v_hi - v_lo) * i / (npts - 1);
    if (const auto d = boundary_residual(grid[i], m, boundary, g))
    {
      value[i] = *d;
      if (best < 0 || value[i] < value[best])
      {
        best = i;
      }
    }
  }
  if (best < 0)
  {
    throw ConvergenceError("no subsonic velocity in bracket [" + std::to_string(v_lo) + ", " +
                           std::to_string(v_hi) + "] m/s");
  }

  // Golden-section refinement of |D| between the neighbouring grid points.
  auto f = [&](double v) {
    const auto d = boundary_residual(v, m, boundary, g);
    return d ? *d : std::numeric_limits<double>::infinity();
  };
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, npts - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int iter = 0; iter < 200 && (b - a) > opt.relative_tolerance * b; ++iter)
  {
    if (f1 <= f2)
    {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
    else
    {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double v = (f1 <= f2) ? x1 : x2;
  const double residual = std::min(f1, f2);
  if (!(residual < opt.residual_threshold))
  {
    throw ConvergenceError("no surface-wave root in bracket: minimum normalized |D| = " + std::to_string(residual) +
                           " at " + std::to_string(v) + " m/s");
  }

  const auto s = detail::scale_material(m);
  const auto pw = partial_wave_roots(v, m, g);

  RayleighSolution sol;
  sol.velocity = v;
  sol.wavelength = wavelength;
  sol.wavenumber = constants::two_pi / wavelength;
  sol.roots = decaying_roots(pw);
  sol.boundary = boundary;
  sol.geometry = g;
  sol.material = m;
  sol.phi_scale = s.phi_scale;
  sol.residual = residual;
  sol.degenerate_roots = pw.degenerate_cluster;

  const Eigen::Matrix4cd bm = detail::boundary_matrix(s, sol.roots, boundary, g);
  const Eigen::Vector4cd w = detail::null_space(bm, 1).col(0);
  for (int r = 0; r < 4; ++r)
  {
    sol.weights[r] = w[r];
  }

  // Unit peak surface displacement, with the surface displacement along the
  // propagation direction real and positive.
  const Eigen::Vector4cd surf = detail::superpose(sol, 0.0, false);
  const double peak = detail::ellipse_semi_major(surf.head<3>());
  if (!(peak > 0.0))
  {
    throw ConvergenceError("surface-wave solution has no surface displacement");
  }
  const cdouble along = g.direction.cast<cdouble>().dot(surf.head<3>());
  const cdouble across = g.normal.cast<cdouble>().dot(surf.head<3>());
  const cdouble ref = std::abs(along) > 1e-9 * peak ? along : across;
  const cdouble rescale = std::polar(1.0 / peak, -std::arg(ref));
  for (auto &wr : sol.weights)
  {
    wr *= rescale;
  }
  return sol;
}

} // namespace sawmod
