#pragma once

// Reflection spectrum CSV: header `freq_hz,mag` or `freq_hz,re,im`.

#include <charconv>
#include <complex>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "sawmod/resonator.hpp"

namespace sawmod
{

namespace detail
{
inline std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
  {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(std::string_view line)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i)
  {
    const char ch = line[i];
    if (quoted)
    {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"')
      {
        cur += '"';
        ++i;
      }
      else if (ch == '"')
      {
        quoted = false;
      }
      else
      {
        cur += ch;
      }
    }
    else if (ch == '"')
    {
      quoted = true;
    }
    else if (ch == ',')
    {
      out.emplace_back(trim(cur));
      cur.clear();
    }
    else
    {
      cur += ch;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

inline double parse_csv_number(const std::string &field, std::size_t row)
{
  double v = 0.0;
  const char *end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end)
  {
    throw InputError("spectrum CSV row " + std::to_string(row) + ": '" + field + "' is not a number");
  }
  return v;
}
} // namespace detail

inline Spectrum parse_spectrum_csv(std::istream &in, const std::string &label)
{
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line))
  {
    ++row;
    if (!detail::trim(line).empty())
    {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (!header.empty() && !header[0].empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0)
  {
    header[0].erase(0, 3);
  }

  Spectrum s;
  if (header == std::vector<std::string>{"freq_hz", "mag"})
  {
    s.magnitude_only = true;
  }
  else if (header == std::vector<std::string>{"freq_hz", "re", "im"})
  {
    s.magnitude_only = false;
  }
  else
  {
    throw InputError(label + ": header must be 'freq_hz,mag' or 'freq_hz,re,im'");
  }

  const std::size_t cols = header.size();
  while (std::getline(in, line))
  {
    ++row;
    if (detail::trim(line).empty())
    {
      continue;
    }
    const auto f = detail::split_csv_line(line);
    if (f.size() != cols)
    {
      throw InputError(label + " row " + std::to_string(row) + ": expected " + std::to_string(cols) + " columns");
    }
    s.frequencies.push_back(detail::parse_csv_number(f[0], row));
    if (cols == 2)
    {
      s.values.emplace_back(detail::parse_csv_number(f[1], row), 0.0);
    }
    else
    {
      s.values.emplace_back(detail::parse_csv_number(f[1], row), detail::parse_csv_number(f[2], row));
    }
  }
  validate(s);
  return s;
}

inline Spectrum read_spectrum_csv(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot open spectrum file '" + path.string() + "'");
  }
  return parse_spectrum_csv(in, "spectrum '" + path.string() + "'");
}

} // namespace sawmod
