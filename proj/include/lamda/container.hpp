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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lamda/tensor.hpp"

namespace lamda {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

struct ContainerEntry {
  std::string name;
  DType dtype = DType::f64;
  Tensor tensor;
};

// Binary layout, little-endian, no padding:
//   "LDWT" | u16 version (1) | u32 count |
//   count × { u16 name_len | name bytes | u8 dtype | u8 ndim | ndim × u64 dim | data }
// f32 entries must hold values that are exactly representable as binary32.
using WeightContainer = std::vector<ContainerEntry>;

inline constexpr std::uint16_t kContainerVersion = 1;

std::string encode_container(const WeightContainer& entries);
WeightContainer decode_container(std::string_view bytes);

void write_container(const std::filesystem::path& path, const WeightContainer& entries);
WeightContainer read_container(const std::filesystem::path& path);

// Entry lookup by name; FormatError naming the tensor when absent.
const ContainerEntry& find_entry(const WeightContainer& entries, std::string_view name);

// dtype matching the current float mode.
DType storage_dtype();

bool bitwise_equal(const WeightContainer& a, const WeightContainer& b);

}  // namespace lamda
