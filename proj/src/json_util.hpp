#pragma once

// Field accessors that turn nlohmann type errors into InvalidInput messages
// naming the document and the field path.

#include <string>

#include <nlohmann/json.hpp>

#include "wmnav/geometry.hpp"
#include "wmnav/simulator.hpp"

namespace wmnav::detail {

using nlohmann::json;

[[noreturn]] inline void fail_field(const std::string& source, const std::string& field, const std::string& what) {
  throw InvalidInput(source + ": field '" + field + "': " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& source,
                           const std::string& path) {
  const std::string field = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) fail_field(source, path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail_field(source, field, "missing");
  return *it;
}

template <typename T>
T as(const json& value, const std::string& source, const std::string& field) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    fail_field(source, field, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& source, const std::string& path = "") {
  const json& v = require(obj, key, source, path);
  return as<T>(v, source, path.empty() ? key : path + "." + key);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& source,
         const std::string& path = "") {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get<T>(obj, key, source, path);
}

inline Vec2 get_vec2(const json& obj, const std::string& key, const std::string& source, const std::string& path) {
  const json& v = require(obj, key, source, path);
  const std::string field = path.empty() ? key : path + "." + key;
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail_field(source, field, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

inline json vec2_json(Vec2 p) { return json::array({p.x, p.y}); }

}  // namespace wmnav::detail
