#pragma once

// Command-line front end: solve-saw, fit-s11, vpi, cavity, sideband.
// Results go to `out` as JSON; errors go to `err` as one `error:` line.
// Exit codes: 0 ok, 2 input error, 3 non-convergence, 4 degenerate physics.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sawmod/analysis.hpp"
#include "sawmod/cavity.hpp"
#include "sawmod/common.hpp"
#include "sawmod/device_config.hpp"
#include "sawmod/json_writer.hpp"
#include "sawmod/materials.hpp"
#include "sawmod/optics.hpp"
#include "sawmod/resonator.hpp"
#include "sawmod/saw_solver.hpp"
#include "sawmod/spectrum_csv.hpp"

namespace sawmod::cli
{

inline constexpr const char *tool_version = "0.1.0";

enum ExitCode : int
{
  exit_ok = 0,
  exit_input = 2,
  exit_convergence = 3,
  exit_degenerate = 4
};

struct RunManifest
{
  std::string command;
  std::vector<std::string> config_paths;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// UTC time in ISO 8601; SOURCE_DATE_EPOCH pins it for reproducible builds.
inline std::string utc_timestamp()
{
  std::time_t t = std::time(nullptr);
  if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH"))
  {
    char *end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end && *end == '\0' && end != epoch)
    {
      t = static_cast<std::time_t>(v);
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline JsonObject to_json(const RunManifest &m)
{
  JsonObject overrides;
  for (const auto &[k, v] : m.overrides)
  {
    overrides.add(k, v);
  }
  JsonObject j;
  j.add("command", m.command);
  j.add("config", m.config_paths);
  j.add("overrides", std::move(overrides));
  j.add("tool_version", tool_version);
  j.add("timestamp", utc_timestamp());
  return j;
}

namespace detail
{

inline std::string one_line(std::string s)
{
  for (char &ch : s)
  {
    if (ch == '\n' || ch == '\r')
    {
      ch = ' ';
    }
  }
  while (!s.empty() && s.back() == ' ')
  {
    s.pop_back();
  }
  return s;
}

// Options the user set explicitly, in declaration order. Paths are listed
// separately as config files.
inline RunManifest collect_manifest(const CLI::App &sub, const std::vector<std::string> &path_options)
{
  RunManifest m;
  m.command = sub.get_name();
  for (const CLI::Option *o : sub.get_options())
  {
    if (o->count() == 0 || o->get_lnames().empty())
    {
      continue;
    }
    const std::string name = o->get_lnames().front();
    if (name == "help" || name == "no-manifest")
    {
      continue;
    }
    std::string value;
    for (const auto &r : o->results())
    {
      value += (value.empty() ? "" : " ") + r;
    }
    if (o->get_expected_max() == 0)
    {
      value = "true";
    }
    if (std::find(path_options.begin(), path_options.end(), name) != path_options.end())
    {
      m.config_paths.push_back(value);
    }
    else
    {
      m.overrides.emplace_back(name, value);
    }
  }
  return m;
}

inline std::ofstream open_output(const std::string &path)
{
  std::ofstream f(path);
  if (!f)
  {
    throw InputError("cannot write output file '" + path + "'");
  }
  return f;
}

inline double parse_number(const std::string &s, const std::string &what)
{
  double v = 0.0;
  const char *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
  {
    throw InputError(what + ": '" + s + "' is not a number");
  }
  return v;
}

// ---------------------------------------------------------------------------

struct SolveSawArgs
{
  std::string material;
  std::string boundary = "free";
  double wavelength = 0.0;
  std::string profile_out;
  double profile_depth = 0.0;
  int profile_points = 121;
  std::vector<double> bracket;
  int grid_points = 200;
};

inline JsonObject run_solve_saw(const SolveSawArgs &a)
{
  require_input(a.wavelength > 0.0, "--wavelength-m must be positive");
  const Boundary boundary = parse_boundary(a.boundary);
  const MaterialFile mf = load_material_file(a.material);
  RayleighOptions opt;
  opt.grid_points = a.grid_points;
  if (!a.bracket.empty())
  {
    opt.bracket = std::make_pair(a.bracket[0], a.bracket[1]);
  }
  const RayleighSolution sol = solve_rayleigh(mf.material, boundary, a.wavelength, opt);

  if (!a.profile_out.empty())
  {
    const double depth = a.profile_depth > 0.0 ? a.profile_depth : 3.0 * a.wavelength;
    require_input(a.profile_points >= 2, "--profile-points must be at least 2");
    auto f = open_output(a.profile_out);
    f << "y_m,re_uy,im_uy,re_uz,im_uz,re_phi,im_phi\n";
    for (int i = 0; i < a.profile_points; ++i)
    {
      const double y = -depth * i / (a.profile_points - 1);
      const DepthAmplitudes p = depth_profile(sol, y);
      f << format_float(y) << ',' << format_float(p.uy.real()) << ',' << format_float(p.uy.imag()) << ','
        << format_float(p.uz.real()) << ',' << format_float(p.uz.imag()) << ',' << format_float(p.phi.real()) << ','
        << format_float(p.phi.imag()) << '\n';
    }
  }

  JsonObject j;
  j.add("velocity_m_s", sol.velocity);
  j.add("boundary", to_string(sol.boundary));
  j.add("resonance_hz", resonance_frequency(sol.velocity, a.wavelength));
  j.add("residual", sol.residual);
  j.add("wavelength_m", a.wavelength);
  j.add("material", mf.material.name);
  j.add("degenerate_roots", sol.degenerate_roots);
  return j;
}

// ---------------------------------------------------------------------------

struct FitArgs
{
  std::string input;
  bool complex = false;
};

inline JsonObject run_fit_s11(const FitArgs &a, bool &converged)
{
  Spectrum s = read_spectrum_csv(a.input);
  if (a.complex)
  {
    require_input(!s.magnitude_only, "--complex requires a 'freq_hz,re,im' spectrum");
  }
  else
  {
    s.magnitude_only = true;
  }
  const FitResult fit = fit_reflection(s);
  converged = fit.converged;
  JsonObject j;
  j.add("omega_hz", fit.params.omega / constants::two_pi);
  j.add("gamma_in_hz", fit.params.gamma_in / constants::two_pi);
  j.add("gamma_ex_hz", fit.params.gamma_ex / constants::two_pi);
  j.add("q", fit.quality_factor());
  j.add("rms_residual", fit.rms_residual);
  j.add("converged", fit.converged);
  j.add("iterations", fit.iterations);
  j.add("fit_mode", s.magnitude_only ? "magnitude" : "complex");
  return j;
}

// ---------------------------------------------------------------------------

struct VpiArgs
{
  std::string device;
  std::optional<double> z_offset;
  std::string k_opt;
  std::vector<std::string> sweep;
  std::string out;
};

inline const std::vector<std::string> &sweep_parameters()
{
  static const std::vector<std::string> names = {"z_offset_m",   "center_depth_m", "diameter_y_m",
                                                 "diameter_z_m", "width_W_m",      "length_L_m"};
  return names;
}

inline void apply_sweep_value(Device &d, const DeviceConfig &c, const std::string &param, double v)
{
  if (param == "z_offset_m")
    d.mode.z_offset = v;
  else if (param == "center_depth_m")
    d.mode.center_depth = v;
  else if (param == "diameter_y_m")
    d.mode.diameter_y = v;
  else if (param == "diameter_z_m")
    d.mode.diameter_z = v;
  else if (param == "width_W_m")
    d.resonator.width_W = v;
  else if (param == "length_L_m")
    d.resonator.length_L = v + 2.0 * c.mirror_penetration;
  else
    throw InputError("unknown sweep parameter '" + param + "'");
}

inline VpiResult checked_v_pi(const Device &d)
{
  const VpiResult r = v_pi(d);
  if (!r.quadrature_converged)
  {
    throw ConvergenceError("overlap quadrature did not converge at order " + std::to_string(d.quadrature.order));
  }
  return r;
}

inline JsonObject run_vpi(const VpiArgs &a, std::ostream &out_stream, bool &wrote_csv_to_stdout)
{
  DeviceConfig cfg = load_device_config(a.device);
  if (a.z_offset)
  {
    cfg.mode.z_offset = *a.z_offset;
  }
  if (!a.k_opt.empty())
  {
    cfg.k_opt = parse_k_opt_convention(a.k_opt);
  }
  validate(cfg.mode);
  Device d = build_device(cfg);

  if (!a.sweep.empty())
  {
    const std::string &param = a.sweep[0];
    require_input(std::find(sweep_parameters().begin(), sweep_parameters().end(), param) != sweep_parameters().end(),
                  "unknown sweep parameter '" + param + "'");
    const double from = parse_number(a.sweep[1], "--sweep FROM");
    const double to = parse_number(a.sweep[2], "--sweep TO");
    const double steps_d = parse_number(a.sweep[3], "--sweep STEPS");
    require_input(steps_d >= 1.0 && steps_d == std::floor(steps_d) && steps_d <= 1e6,
                  "--sweep STEPS must be a positive integer");
    const int steps = static_cast<int>(steps_d);

    std::ofstream file;
    if (!a.out.empty())
    {
      file = open_output(a.out);
    }
    std::ostream &csv = a.out.empty() ? out_stream : file;
    wrote_csv_to_stdout = a.out.empty();
    csv << param << ",v_pi_V\n";
    for (int i = 0; i < steps; ++i)
    {
      const double v = steps == 1 ? from : from + (to - from) * i / (steps - 1);
      Device di = d;
      apply_sweep_value(di, cfg, param, v);
      std::string cell;
      try
      {
        cell = format_float(checked_v_pi(di).v_pi);
      }
      catch (const DegeneratePhysicsError &)
      {
        cell = "inf";
      }
      csv << format_float(v) << ',' << cell << '\n';
      csv.flush();
    }
    JsonObject j;
    j.add("sweep_parameter", param);
    j.add("points", steps);
    j.add("out", a.out);
    return j;
  }

  const VpiResult r = checked_v_pi(d);
  Device alt = d;
  alt.k_opt = d.k_opt == KOptConvention::vacuum ? KOptConvention::material : KOptConvention::vacuum;
  const double v_pi_alt = r.v_pi * r.k_opt / optical_wavenumber(alt.mode, alt.photoelastic, alt.k_opt);

  JsonObject j;
  j.add("v_pi_V", r.v_pi);
  j.add("length_vpi_V_cm", length_vpi_product(r.v_pi, d.resonator.width_W));
  j.add("delta_n_per_volt", r.delta_n_per_volt);
  j.add("k_opt_convention", to_string(d.k_opt));
  j.add("v_pi_other_convention_V", v_pi_alt);
  j.add("envelope_delta_n_per_volt", r.envelope_per_volt);
  j.add("u0_per_volt_m", r.u0_per_volt);
  j.add("z_offset_m", d.mode.z_offset);
  j.add("node_z_offset_m", r.node_z_offset);
  j.add("optimum_z_offset_m", r.optimum_z_offset);
  j.add("velocity_m_s", d.saw.velocity);
  j.add("omega_hz", d.resonator.omega / constants::two_pi);
  j.add("width_W_m", d.resonator.width_W);
  j.add("length_L_m", d.resonator.length_L);
  j.add("mirror_penetration_m", cfg.mirror_penetration);
  j.add("quadrature_order", d.quadrature.order);
  return j;
}

// ---------------------------------------------------------------------------

struct CavityArgs
{
  std::optional<double> fsr_hz, kappa_hz, kappa_ex_hz, finesse, vpi, optical_hz;
  double omega_hz = 0.0;
  bool critical = false;
  double wavelength = 1064e-9;
};

inline JsonObject run_cavity(const CavityArgs &a)
{
  double finesse = 0.0;
  if (a.finesse)
  {
    finesse = *a.finesse;
  }
  else
  {
    require_input(a.fsr_hz && a.kappa_hz, "cavity: give --finesse or both --fsr-hz and --kappa-hz");
    finesse = finesse_from_spectrum(*a.fsr_hz, *a.kappa_hz);
  }
  require_input(finesse > 0.0, "cavity: finesse must be positive");
  require_input(!(a.critical && a.kappa_ex_hz), "cavity: --critical and --kappa-ex-hz are exclusive");
  require_input(a.omega_hz >= 0.0, "cavity: --omega-hz must be non-negative");

  double enhancement = 0.0;
  std::optional<double> q;
  if (a.kappa_hz)
  {
    OpticalCavity c;
    c.finesse = finesse;
    c.kappa = *a.kappa_hz;
    c.kappa_ex = a.kappa_ex_hz ? *a.kappa_ex_hz : 0.5 * *a.kappa_hz;
    enhancement = sideband_enhancement(c, a.omega_hz);
    const double nu = a.optical_hz ? *a.optical_hz : constants::speed_of_light / a.wavelength;
    q = cavity_quality_factor(nu, *a.kappa_hz);
  }
  else
  {
    // Without a linewidth only the Omega << kappa, critically coupled limit is defined.
    require_input(!a.kappa_ex_hz, "cavity: --kappa-ex-hz requires --kappa-hz");
    require_input(a.omega_hz == 0.0, "cavity: --omega-hz > 0 requires --kappa-hz");
    const double g = 2.0 * finesse / constants::pi;
    enhancement = g * g;
  }

  JsonObject j;
  j.add("finesse", finesse);
  if (q)
    j.add("q", *q);
  else
    j.add_null("q");
  j.add("enhancement", enhancement);
  j.add("enhancement_db", enhancement > 0.0 ? 10.0 * std::log10(enhancement) : -std::numeric_limits<double>::infinity());
  if (a.vpi)
  {
    require_input(*a.vpi > 0.0, "cavity: --vpi must be positive");
    if (!(enhancement > 0.0))
    {
      throw DegeneratePhysicsError("cavity: zero sideband enhancement (uncoupled cavity)");
    }
    j.add("vpi_reduced_V", *a.vpi / std::sqrt(enhancement));
  }
  else
  {
    j.add_null("vpi_reduced_V");
  }
  return j;
}

// ---------------------------------------------------------------------------

struct SidebandArgs
{
  double delta_db = 0.0;
  double vpi_ref = 0.0;
  bool beta_exact = false;
  std::optional<double> drive_v;
};

inline JsonObject run_sideband(const SidebandArgs &a)
{
  require_input(std::isfinite(a.delta_db), "--delta-db must be finite");
  JsonObject j;
  if (a.beta_exact)
  {
    require_input(a.drive_v.has_value(), "--beta-exact requires --drive-v");
    j.add("v_pi_V", vpi_from_sideband_ratio_exact(a.delta_db, a.vpi_ref, *a.drive_v));
    j.add("method", "bessel");
  }
  else
  {
    j.add("v_pi_V", vpi_from_sideband_ratio(a.delta_db, a.vpi_ref));
    j.add("method", "small_signal");
  }
  return j;
}

} // namespace detail

/// Runs one CLI invocation and returns the process exit code.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  using namespace detail;
  CLI::App app{"SAW acousto-optic modulator design and analysis", "sawmod"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);
  bool no_manifest = false;

  SolveSawArgs saw;
  auto *solve = app.add_subcommand("solve-saw", "Rayleigh-wave velocity and depth profile");
  solve->add_option("--material", saw.material, "material JSON file")->required();
  solve->add_option("--boundary", saw.boundary, "free | metalized");
  solve->add_option("--wavelength-m", saw.wavelength, "SAW wavelength, m")->required();
  solve->add_option("--profile-out", saw.profile_out, "depth-profile CSV output");
  solve->add_option("--profile-depth-m", saw.profile_depth, "profile depth, m (default 3 wavelengths)");
  solve->add_option("--profile-points", saw.profile_points, "profile samples");
  solve->add_option("--bracket", saw.bracket, "velocity search bracket LO HI, m/s")->expected(2);
  solve->add_option("--grid-points", saw.grid_points, "coarse velocity grid size");
  solve->add_flag("--no-manifest", no_manifest, "omit the run manifest");

  FitArgs fit;
  auto *fits = app.add_subcommand("fit-s11", "Lorentzian fit of a one-port reflection spectrum");
  fits->add_option("--in", fit.input, "spectrum CSV")->required();
  fits->add_flag("--complex", fit.complex, "fit real and imaginary parts");
  fits->add_flag("--no-manifest", no_manifest, "omit the run manifest");

  VpiArgs vpi;
  auto *vpis = app.add_subcommand("vpi", "half-wave voltage of the SAW modulator");
  vpis->add_option("--device", vpi.device, "device config JSON")->required();
  vpis->add_option("--z-offset-m", vpi.z_offset, "waveguide offset from the u_z antinode, m");
  vpis->add_option("--k-opt-convention", vpi.k_opt, "vacuum | material");
  vpis->add_option("--sweep", vpi.sweep, "PARAM FROM TO STEPS")->expected(4);
  vpis->add_option("--out", vpi.out, "sweep CSV output (default stdout)");
  vpis->add_flag("--no-manifest", no_manifest, "omit the run manifest");

  CavityArgs cav;
  auto *cavs = app.add_subcommand("cavity", "Fabry-Perot sideband enhancement");
  cavs->add_option("--fsr-hz", cav.fsr_hz, "free spectral range, Hz");
  cavs->add_option("--kappa-hz", cav.kappa_hz, "linewidth kappa/2pi, Hz");
  cavs->add_option("--kappa-ex-hz", cav.kappa_ex_hz, "external coupling kappa_ex/2pi, Hz");
  cavs->add_option("--omega-hz", cav.omega_hz, "SAW frequency Omega/2pi, Hz");
  cavs->add_option("--finesse", cav.finesse, "finesse (overrides FSR/kappa)");
  cavs->add_option("--vpi", cav.vpi, "single-pass V_pi, V");
  cavs->add_flag("--critical", cav.critical, "critical coupling kappa_ex = kappa/2");
  cavs->add_option("--optical-hz", cav.optical_hz, "optical frequency for Q, Hz");
  cavs->add_option("--wavelength-m", cav.wavelength, "optical wavelength for Q when --optical-hz is absent");
  cavs->add_flag("--no-manifest", no_manifest, "omit the run manifest");

  SidebandArgs sb;
  auto *sbs = app.add_subcommand("sideband", "V_pi from a heterodyne sideband power ratio");
  sbs->add_option("--delta-db", sb.delta_db, "reference minus device sideband power, dB")->required();
  sbs->add_option("--vpi-ref-v", sb.vpi_ref, "reference modulator V_pi, V")->required();
  sbs->add_flag("--beta-exact", sb.beta_exact, "use the full Bessel relation");
  sbs->add_option("--drive-v", sb.drive_v, "drive amplitude for --beta-exact, V");
  sbs->add_flag("--no-manifest", no_manifest, "omit the run manifest");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &)
  {
    out << app.help();
    return exit_ok;
  }
  catch (const CLI::CallForAllHelp &)
  {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  }
  catch (const CLI::CallForVersion &)
  {
    out << tool_version << '\n';
    return exit_ok;
  }
  catch (const CLI::ParseError &e)
  {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_input;
  }

  try
  {
    JsonObject result;
    const CLI::App *sub = nullptr;
    int code = exit_ok;
    bool csv_on_stdout = false;
    if (solve->parsed())
    {
      sub = solve;
      result = run_solve_saw(saw);
    }
    else if (fits->parsed())
    {
      sub = fits;
      bool converged = false;
      result = run_fit_s11(fit, converged);
      if (!converged)
      {
        code = exit_convergence;
      }
    }
    else if (vpis->parsed())
    {
      sub = vpis;
      result = run_vpi(vpi, out, csv_on_stdout);
    }
    else if (cavs->parsed())
    {
      sub = cavs;
      result = run_cavity(cav);
    }
    else
    {
      sub = sbs;
      result = run_sideband(sb);
    }

    if (!no_manifest)
    {
      const std::vector<std::string> paths = {"material", "in", "device"};
      result.add("manifest", to_json(collect_manifest(*sub, paths)));
    }
    if (!csv_on_stdout)
    {
      out << result.dump() << '\n';
    }
    if (code == exit_convergence)
    {
      err << "error: fit did not converge within the iteration limit\n";
    }
    return code;
  }
  catch (const InputError &e)
  {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_input;
  }
  catch (const ConvergenceError &e)
  {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_convergence;
  }
  catch (const DegeneratePhysicsError &e)
  {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_degenerate;
  }
  catch (const std::exception &e)
  {
    err << "error: " << one_line(e.what()) << '\n';
    return exit_input;
  }
}

} // namespace sawmod::cli
