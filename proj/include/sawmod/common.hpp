#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace sawmod
{

namespace constants
{
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double speed_of_light = 299792458.0;   // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace constants

// Malformed or physically invalid user input (CLI exit code 2).
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its tolerance (CLI exit code 3).
class ConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Valid input for which the requested quantity does not exist,
// e.g. an optical mode sitting on a standing-wave node (CLI exit code 4).
class DegeneratePhysicsError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void require_input(bool condition, const std::string &message)
{
  if (!condition)
  {
    throw InputError(message);
  }
}

} // namespace sawmod
