// SPDX-License-Identifier: Apache-2.0
#pragma once

// Typed field access over nlohmann::json with path-qualified errors.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "aquafeed/error.hpp"
#include "json.hpp"

namespace aquafeed::json_util {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json& require(const json& obj, const std::string& key, const std::string& path,
                           ErrorKind kind = ErrorKind::Parse) {
  if (!obj.is_object()) throw Error(kind, path.empty() ? "$" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(kind, join(path, key), "missing required field");
  return *it;
}

inline std::int64_t get_int(const json& obj, const std::string& key, const std::string& path,
                            ErrorKind kind = ErrorKind::Parse) {
  const json& v = require(obj, key, path, kind);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw Error(kind, join(path, key), "integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  throw Error(kind, join(path, key), "expected an integer");
}

inline int get_int32(const json& obj, const std::string& key, const std::string& path,
                     ErrorKind kind = ErrorKind::Parse) {
  const std::int64_t v = get_int(obj, key, path, kind);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error(kind, join(path, key), "integer out of range");
  }
  return static_cast<int>(v);
}

inline double get_double(const json& obj, const std::string& key, const std::string& path,
                         ErrorKind kind = ErrorKind::Parse) {
  const json& v = require(obj, key, path, kind);
  if (!v.is_number()) throw Error(kind, join(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(kind, join(path, key), "expected a finite number");
  return d;
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path,
                              ErrorKind kind = ErrorKind::Parse) {
  const json& v = require(obj, key, path, kind);
  if (!v.is_string()) throw Error(kind, join(path, key), "expected a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& obj, const std::string& key, const std::string& path,
                     ErrorKind kind = ErrorKind::Parse) {
  const json& v = require(obj, key, path, kind);
  if (!v.is_boolean()) throw Error(kind, join(path, key), "expected a boolean");
  return v.get<bool>();
}

inline const json& get_array(const json& obj, const std::string& key, const std::string& path,
                             ErrorKind kind = ErrorKind::Parse) {
  const json& v = require(obj, key, path, kind);
  if (!v.is_array()) throw Error(kind, join(path, key), "expected an array");
  return v;
}

template <typename T>
T value_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.is_object()) return fallback;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return it->get<T>();
}

inline json parse_document(std::string_view text, ErrorKind kind = ErrorKind::Parse) {
  json doc = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(kind, "$", "malformed document");
  return doc;
}

}  // namespace aquafeed::json_util
