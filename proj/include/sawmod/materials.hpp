#pragma once

// Crystal constants for the piezoelectric substrate: Voigt <-> full index
// conversion, frame rotation, and loading from the JSON constants file.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "sawmod/common.hpp"

namespace sawmod
{

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix36 = Eigen::Matrix<double, 3, 6>;

/// Elastic, piezoelectric and dielectric constants of a substrate (SI units).
struct MaterialSet
{
  Matrix6 stiffness = Matrix6::Zero();   // c_IJ at constant E, Pa
  Matrix36 piezo = Matrix36::Zero();     // e_iJ, C/m^2
  Eigen::Matrix3d permittivity = Eigen::Matrix3d::Zero(); // eps_ij at constant strain, F/m
  double density = 0.0;                  // kg/m^3
  std::string name;
};

/// The subset of photoelastic / electro-optic constants that enters the
/// index change seen by a y-polarized guided mode.
struct PhotoelasticConstants
{
  double n_y = 1.0;
  double p2222 = 0.0;
  double p2233 = 0.0;
  double p2223 = 0.0;
  double r222 = 0.0; // m/V
  double r223 = 0.0; // m/V
};

struct MaterialFile
{
  MaterialSet material;
  PhotoelasticConstants photoelastic;
};

// Full-index tensors, row-major storage.
struct Tensor4
{
  std::array<double, 81> data{};
  double &operator()(int i, int j, int k, int l) { return data[27 * i + 9 * j + 3 * k + l]; }
  double operator()(int i, int j, int k, int l) const { return data[27 * i + 9 * j + 3 * k + l]; }
};

struct Tensor3
{
  std::array<double, 27> data{};
  double &operator()(int i, int j, int k) { return data[9 * i + 3 * j + k]; }
  double operator()(int i, int j, int k) const { return data[9 * i + 3 * j + k]; }
};

namespace voigt
{
// (0,0)->0 (1,1)->1 (2,2)->2 (1,2)->3 (0,2)->4 (0,1)->5
inline constexpr int index(int i, int j)
{
  if (i == j)
  {
    return i;
  }
  return 6 - i - j;
}

inline constexpr std::array<std::array<int, 2>, 6> pairs = {{{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};
} // namespace voigt

// Stiffness and piezo tensors carry no Voigt factors; the factor-of-two
// bookkeeping of engineering shear strain never enters these conversions.
inline Tensor4 voigt_to_full(const Matrix6 &c)
{
  Tensor4 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          t(i, j, k, l) = c(voigt::index(i, j), voigt::index(k, l));
  return t;
}

inline Tensor3 voigt_to_full(const Matrix36 &e)
{
  Tensor3 t;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        t(i, k, l) = e(i, voigt::index(k, l));
  return t;
}

inline Matrix6 full_to_voigt(const Tensor4 &t)
{
  Matrix6 c;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      c(a, b) = t(voigt::pairs[a][0], voigt::pairs[a][1], voigt::pairs[b][0], voigt::pairs[b][1]);
  return c;
}

inline Matrix36 full_to_voigt(const Tensor3 &t)
{
  Matrix36 e;
  for (int i = 0; i < 3; ++i)
    for (int b = 0; b < 6; ++b)
      e(i, b) = t(i, voigt::pairs[b][0], voigt::pairs[b][1]);
  return e;
}

inline bool is_symmetric_positive_definite(const Eigen::MatrixXd &m, double rel_tol = 1e-12)
{
  const double scale = m.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || (m - m.transpose()).cwiseAbs().maxCoeff() > rel_tol * scale)
  {
    return false;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

inline void validate(const MaterialSet &m)
{
  require_input(is_symmetric_positive_definite(m.stiffness), "stiffness: matrix must be symmetric positive definite");
  require_input(is_symmetric_positive_definite(m.permittivity),
                "permittivity: matrix must be symmetric positive definite");
  require_input(std::isfinite(m.density) && m.density > 0.0, "density: must be positive");
  require_input(m.piezo.allFinite(), "piezo: entries must be finite");
}

/// Bond stress-transformation matrix for the rotation `r` (rows are the new
/// axes expressed in the old frame).
inline Matrix6 bond_matrix(const Eigen::Matrix3d &r)
{
  Matrix6 m;
  for (int a = 0; a < 6; ++a)
  {
    const int i = voigt::pairs[a][0];
    const int j = voigt::pairs[a][1];
    for (int b = 0; b < 6; ++b)
    {
      const int k = voigt::pairs[b][0];
      const int l = voigt::pairs[b][1];
      m(a, b) = (k == l) ? r(i, k) * r(j, l) : r(i, k) * r(j, l) + r(i, l) * r(j, k);
    }
  }
  return m;
}

inline MaterialSet rotate_material(const MaterialSet &m, const Eigen::Matrix3d &rotation)
{
  const double orth_err = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require_input(orth_err <= 1e-10, "rotation: matrix is not orthogonal");

  const Matrix6 bond = bond_matrix(rotation);
  MaterialSet out = m;
  out.stiffness = bond * m.stiffness * bond.transpose();
  out.piezo = rotation * m.piezo * bond.transpose();
  out.permittivity = rotation * m.permittivity * rotation.transpose();
  return out;
}

namespace detail
{
inline const nlohmann::json &require_key(const nlohmann::json &doc, const std::string &key, const std::string &path)
{
  if (!doc.is_object() || !doc.contains(key))
  {
    throw InputError("missing key '" + path + key + "'");
  }
  return doc.at(key);
}

inline double require_number(const nlohmann::json &doc, const std::string &key, const std::string &path = "")
{
  const auto &v = require_key(doc, key, path);
  if (!v.is_number())
  {
    throw InputError("key '" + path + key + "' must be numeric");
  }
  return v.get<double>();
}

template <int Rows, int Cols>
Eigen::Matrix<double, Rows, Cols> require_matrix(const nlohmann::json &doc, const std::string &key)
{
  const auto &v = require_key(doc, key, "");
  const std::string shape = std::to_string(Rows) + "x" + std::to_string(Cols);
  if (!v.is_array() || v.size() != Rows)
  {
    throw InputError("key '" + key + "' must be a " + shape + " array");
  }
  Eigen::Matrix<double, Rows, Cols> m;
  for (int i = 0; i < Rows; ++i)
  {
    const auto &row = v[i];
    if (!row.is_array() || row.size() != Cols)
    {
      throw InputError("key '" + key + "' must be a " + shape + " array");
    }
    for (int j = 0; j < Cols; ++j)
    {
      if (!row[j].is_number())
      {
        throw InputError("key '" + key + "' has a non-numeric entry");
      }
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}
} // namespace detail

inline MaterialFile load_material(const nlohmann::json &doc)
{
  using namespace detail;
  MaterialFile out;
  const auto &name = require_key(doc, "name", "");
  require_input(name.is_string(), "key 'name' must be a string");
  out.material.name = name.get<std::string>();
  out.material.density = require_number(doc, "density_kg_m3");
  out.material.stiffness = require_matrix<6, 6>(doc, "stiffness_GPa") * 1e9;
  out.material.piezo = require_matrix<3, 6>(doc, "piezo_C_m2");
  out.material.permittivity = require_matrix<3, 3>(doc, "permittivity_relative") * constants::vacuum_permittivity;

  require_input(std::isfinite(out.material.density) && out.material.density > 0.0,
                "key 'density_kg_m3' must be positive");
  require_input(is_symmetric_positive_definite(out.material.stiffness),
                "key 'stiffness_GPa' must be symmetric positive definite");
  require_input(is_symmetric_positive_definite(out.material.permittivity),
                "key 'permittivity_relative' must be symmetric positive definite");

  const auto &pe = require_key(doc, "photoelastic", "");
  auto &c = out.photoelastic;
  c.n_y = require_number(pe, "n_y", "photoelastic.");
  c.p2222 = require_number(pe, "p2222", "photoelastic.");
  c.p2233 = require_number(pe, "p2233", "photoelastic.");
  c.p2223 = require_number(pe, "p2223", "photoelastic.");
  c.r222 = require_number(pe, "r222_m_V", "photoelastic.");
  c.r223 = require_number(pe, "r223_m_V", "photoelastic.");
  require_input(c.n_y > 1.0, "key 'photoelastic.n_y' must exceed 1");
  return out;
}

inline MaterialFile load_material_file(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot open material file '" + path.string() + "'");
  }
  nlohmann::json doc;
  try
  {
    in >> doc;
  }
  catch (const nlohmann::json::exception &e)
  {
    throw InputError("material file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return load_material(doc);
}

} // namespace sawmod
