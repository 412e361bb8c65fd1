// Copyright 2026 The lamda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lamda/error.hpp"

namespace lamda {

// Throws ConfigError naming the first key of `obj` that is not in `allowed`.
inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<std::string_view> allowed,
                                std::string_view context) {
  if (!obj.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) {
      throw ConfigError(std::string(context) + ": unknown key '" + item.key() + "'");
    }
  }
}

// Reads obj[key] as T, or ConfigError with the key name when it is missing or
// has the wrong type.
template <typename T>
T require(const nlohmann::json& obj, const char* key, std::string_view context) {
  if (!obj.contains(key)) {
    throw ConfigError(std::string(context) + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(context) + ": bad value for '" + key + "'");
  }
}

template <typename T>
T optional(const nlohmann::json& obj, const char* key, T fallback, std::string_view context) {
  return obj.contains(key) ? require<T>(obj, key, context) : fallback;
}

}  // namespace lamda
