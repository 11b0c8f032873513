#pragma once

// Ordered JSON emitter with fixed float formatting (%.9e). Fields are
// written in insertion order so identical inputs give identical bytes.

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace sawmod
{

inline std::string format_float(double v)
{
  if (!std::isfinite(v))
  {
    return "null";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

inline std::string json_quote(std::string_view s)
{
  std::string out = "\"";
  for (const char ch : s)
  {
    switch (ch)
    {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\r': out += "\\r"; break;
    case '\t': out += "\\t"; break;
    default:
      if (static_cast<unsigned char>(ch) < 0x20)
      {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\u%04x", ch);
        out += buf;
      }
      else
      {
        out += ch;
      }
    }
  }
  return out + "\"";
}

class JsonObject
{
public:
  JsonObject &add(std::string key, double v) { return raw(std::move(key), format_float(v)); }
  JsonObject &add(std::string key, int v) { return raw(std::move(key), std::to_string(v)); }
  JsonObject &add(std::string key, bool v) { return raw(std::move(key), v ? "true" : "false"); }
  JsonObject &add(std::string key, const char *v) { return raw(std::move(key), json_quote(v)); }
  JsonObject &add(std::string key, const std::string &v) { return raw(std::move(key), json_quote(v)); }
  JsonObject &add_null(std::string key) { return raw(std::move(key), "null"); }

  JsonObject &add(std::string key, const std::vector<std::string> &items)
  {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i)
    {
      s += (i ? ", " : "") + json_quote(items[i]);
    }
    return raw(std::move(key), s + "]");
  }

  JsonObject &add(std::string key, JsonObject child)
  {
    entries_.push_back({std::move(key), {}, std::make_shared<JsonObject>(std::move(child))});
    return *this;
  }

  std::string dump(int indent = 0) const
  {
    if (entries_.empty())
    {
      return "{}";
    }
    const std::string pad(indent + 2, ' ');
    std::string out = "{\n";
    for (std::size_t i = 0; i < entries_.size(); ++i)
    {
      const auto &e = entries_[i];
      out += pad + json_quote(e.key) + ": " + (e.child ? e.child->dump(indent + 2) : e.value);
      out += (i + 1 < entries_.size()) ? ",\n" : "\n";
    }
    return out + std::string(indent, ' ') + "}";
  }

private:
  struct Entry
  {
    std::string key;
    std::string value;
    std::shared_ptr<JsonObject> child;
  };

  JsonObject &raw(std::string key, std::string value)
  {
    entries_.push_back({std::move(key), std::move(value), nullptr});
    return *this;
  }

  std::vector<Entry> entries_;
};

} // namespace sawmod
