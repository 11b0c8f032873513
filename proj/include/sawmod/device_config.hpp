#pragma once

// Device configuration document for the V_pi chain. Rates and the
// resonance are given as ordinary frequencies (Hz) and converted to rad/s.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "sawmod/materials.hpp"
#include "sawmod/optics.hpp"
#include "sawmod/resonator.hpp"
#include "sawmod/saw_solver.hpp"

namespace sawmod
{

struct DeviceConfig
{
  std::filesystem::path material_file; // resolved against the config directory
  double lambda_saw = 0.0;
  double width_W = 0.0;
  double length_L = 380e-6;          // mirror gap
  double mirror_penetration = 0.0;   // added once per mirror
  double gamma_in_hz = 0.0;
  double gamma_ex_hz = 0.0;
  std::optional<double> omega_hz;
  OpticalMode mode;
  double z0_ohm = 50.0;
  KOptConvention k_opt = KOptConvention::vacuum;
  Boundary boundary = Boundary::free;
  int quadrature_order = 64;

  double effective_length() const { return length_L + 2.0 * mirror_penetration; }
};

namespace detail
{
inline double optional_number(const nlohmann::json &doc, const std::string &key, double fallback,
                              const std::string &path = "")
{
  return doc.contains(key) ? require_number(doc, key, path) : fallback;
}
} // namespace detail

inline DeviceConfig parse_device_config(const nlohmann::json &doc, const std::filesystem::path &base_dir)
{
  using namespace detail;
  require_input(doc.is_object(), "device config must be a JSON object");
  DeviceConfig c;
  const auto &mf = require_key(doc, "material_file", "");
  require_input(mf.is_string(), "key 'material_file' must be a string");
  const std::filesystem::path material(mf.get<std::string>());
  c.material_file = material.is_absolute() ? material : base_dir / material;

  c.lambda_saw = require_number(doc, "lambda_saw_m");
  c.width_W = require_number(doc, "width_W_m");
  c.length_L = optional_number(doc, "length_L_m", c.length_L);
  c.mirror_penetration = optional_number(doc, "mirror_penetration_m", 0.0);
  c.gamma_in_hz = require_number(doc, "gamma_in_hz");
  c.gamma_ex_hz = require_number(doc, "gamma_ex_hz");
  if (doc.contains("omega_hz") && !doc.at("omega_hz").is_null())
  {
    c.omega_hz = require_number(doc, "omega_hz");
    require_input(*c.omega_hz > 0.0, "key 'omega_hz' must be positive");
  }
  c.z0_ohm = optional_number(doc, "z0_ohm", c.z0_ohm);
  if (doc.contains("k_opt_convention"))
  {
    require_input(doc.at("k_opt_convention").is_string(), "key 'k_opt_convention' must be a string");
    c.k_opt = parse_k_opt_convention(doc.at("k_opt_convention").get<std::string>());
  }
  if (doc.contains("boundary"))
  {
    require_input(doc.at("boundary").is_string(), "key 'boundary' must be a string");
    c.boundary = parse_boundary(doc.at("boundary").get<std::string>());
  }
  if (doc.contains("quadrature_order"))
  {
    require_input(doc.at("quadrature_order").is_number_integer(), "key 'quadrature_order' must be an integer");
    c.quadrature_order = doc.at("quadrature_order").get<int>();
  }
  if (doc.contains("mode"))
  {
    const auto &m = doc.at("mode");
    require_input(m.is_object(), "key 'mode' must be an object");
    c.mode.diameter_y = optional_number(m, "diameter_y_m", c.mode.diameter_y, "mode.");
    c.mode.diameter_z = optional_number(m, "diameter_z_m", c.mode.diameter_z, "mode.");
    c.mode.center_depth = optional_number(m, "center_depth_m", c.mode.center_depth, "mode.");
    c.mode.z_offset = optional_number(m, "z_offset_m", c.mode.z_offset, "mode.");
    c.mode.wavelength = optional_number(m, "wavelength_m", c.mode.wavelength, "mode.");
  }

  require_input(c.lambda_saw > 0.0, "key 'lambda_saw_m' must be positive");
  require_input(c.width_W > 0.0, "key 'width_W_m' must be positive");
  require_input(c.length_L > 0.0, "key 'length_L_m' must be positive");
  require_input(c.mirror_penetration >= 0.0, "key 'mirror_penetration_m' must be non-negative");
  require_input(c.gamma_in_hz >= 0.0 && c.gamma_ex_hz >= 0.0 && c.gamma_in_hz + c.gamma_ex_hz > 0.0,
                "keys 'gamma_in_hz', 'gamma_ex_hz' must be non-negative with a positive sum");
  require_input(c.z0_ohm > 0.0, "key 'z0_ohm' must be positive");
  require_input(c.quadrature_order >= 2, "key 'quadrature_order' must be at least 2");
  validate(c.mode);
  return c;
}

inline DeviceConfig load_device_config(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot open device config '" + path.string() + "'");
  }
  nlohmann::json doc;
  try
  {
    in >> doc;
  }
  catch (const nlohmann::json::exception &e)
  {
    throw InputError("device config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_device_config(doc, path.parent_path());
}

/// Solves the SAW problem for the configured material and assembles the
/// device. The resonance defaults to v / lambda when omega_hz is absent.
inline Device build_device(const DeviceConfig &c)
{
  const MaterialFile mf = load_material_file(c.material_file);
  Device d;
  d.saw = solve_rayleigh(mf.material, c.boundary, c.lambda_saw);
  d.photoelastic = mf.photoelastic;
  d.mode = c.mode;
  d.z0_ohm = c.z0_ohm;
  d.k_opt = c.k_opt;
  d.quadrature.order = c.quadrature_order;

  auto &r = d.resonator;
  r.omega = constants::two_pi * c.omega_hz.value_or(resonance_frequency(d.saw.velocity, c.lambda_saw));
  r.gamma_in = constants::two_pi * c.gamma_in_hz;
  r.gamma_ex = constants::two_pi * c.gamma_ex_hz;
  r.lambda_saw = c.lambda_saw;
  r.length_L = c.effective_length();
  r.width_W = c.width_W;
  r.density = mf.material.density;
  return d;
}

} // namespace sawmod
