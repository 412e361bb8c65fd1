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

#include "lamda/module_id.hpp"

#include <charconv>

#include "lamda/error.hpp"

namespace lamda {

std::string_view to_string(ModuleKind kind) noexcept {
  switch (kind) {
    case ModuleKind::Q: return "Q";
    case ModuleKind::K: return "K";
    case ModuleKind::V: return "V";
    case ModuleKind::O: return "O";
    case ModuleKind::FFN1: return "FFN1";
    case ModuleKind::FFN2: return "FFN2";
  }
  return "?";
}

ModuleKind parse_module_kind(std::string_view text) {
  for (ModuleKind k : kAllModuleKinds)
    if (to_string(k) == text) return k;
  throw ConfigError("unknown module kind '" + std::string(text) +
                    "' (expected one of Q, K, V, O, FFN1, FFN2)");
}

std::vector<ModuleKind> parse_module_kinds(std::string_view text) {
  std::vector<ModuleKind> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_module_kind(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty module kind list");
  return out;
}

std::string ModuleId::name() const {
  return "layers." + std::to_string(layer) + "." + std::string(to_string(kind));
}

std::optional<ModuleId> parse_module_id(std::string_view text) {
  constexpr std::string_view prefix = "layers.";
  if (!text.starts_with(prefix)) return std::nullopt;
  text.remove_prefix(prefix.size());
  const auto dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0) return std::nullopt;
  std::size_t layer = 0;
  const auto digits = text.substr(0, dot);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), layer);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  text.remove_prefix(dot + 1);
  if (text.ends_with(".weight")) text.remove_suffix(7);
  for (ModuleKind k : kAllModuleKinds)
    if (to_string(k) == text) return ModuleId{layer, k};
  return std::nullopt;
}

}  // namespace lamda
