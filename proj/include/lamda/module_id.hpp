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

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lamda {

// Linear modules of a transformer block. Declaration order is the tie-break
// order used by the rank allocator.
enum class ModuleKind { Q, K, V, O, FFN1, FFN2 };

inline constexpr ModuleKind kAllModuleKinds[] = {ModuleKind::Q,    ModuleKind::K,
                                                 ModuleKind::V,    ModuleKind::O,
                                                 ModuleKind::FFN1, ModuleKind::FFN2};

std::string_view to_string(ModuleKind kind) noexcept;
ModuleKind parse_module_kind(std::string_view text);
// Comma-separated list, e.g. "Q,K,V,FFN1,FFN2".
std::vector<ModuleKind> parse_module_kinds(std::string_view text);

struct ModuleId {
  std::size_t layer = 0;
  ModuleKind kind = ModuleKind::Q;

  friend auto operator<=>(const ModuleId&, const ModuleId&) = default;

  // "layers.<layer>.<KIND>"
  std::string name() const;
};

// Accepts "layers.<l>.<KIND>" with an optional ".weight" suffix.
std::optional<ModuleId> parse_module_id(std::string_view text);

}  // namespace lamda
