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

#include "lamda/container.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "lamda/error.hpp"

namespace lamda {

namespace {

static_assert(std::numeric_limits<float>::is_iec559 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(std::string("container truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_container(const WeightContainer& entries) {
  if (entries.size() > UINT32_MAX) throw FormatError("container: too many tensors");
  std::string out = "LDWT";
  put<std::uint16_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  std::set<std::string_view> names;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second) throw FormatError("container: duplicate tensor " + e.name);
    if (e.name.size() > UINT16_MAX) throw FormatError("container: name too long: " + e.name);
    if (e.tensor.ndim() == 0 || e.tensor.ndim() > UINT8_MAX)
      throw FormatError("container: tensor " + e.name + " has no shape");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out += e.name;
    out.push_back(static_cast<char>(e.dtype));
    out.push_back(static_cast<char>(e.tensor.ndim()));
    for (std::size_t d : e.tensor.shape()) put<std::uint64_t>(out, d);
    for (double v : e.tensor.data()) {
      if (e.dtype == DType::f32) {
        const float f = static_cast<float>(v);
        if (static_cast<double>(f) != v && !(std::isnan(v) && std::isnan(f))) {
          throw FormatError("container: tensor " + e.name +
                            " holds values that are not exact in f32");
        }
        put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
      } else {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  return out;
}

WeightContainer decode_container(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != "LDWT") throw FormatError("not a weight container (bad magic)");
  const auto version = in.get<std::uint16_t>("version");
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>("tensor count");
  WeightContainer out;
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    ContainerEntry e;
    const auto len = in.get<std::uint16_t>("name length");
    e.name = std::string(in.take(len, "name"));
    if (!names.insert(e.name).second) throw FormatError("container: duplicate tensor " + e.name);
    const auto code = in.get<std::uint8_t>("dtype");
    if (code > 1) {
      throw FormatError("container: tensor " + e.name + " has unknown dtype code " +
                        std::to_string(code));
    }
    e.dtype = static_cast<DType>(code);
    const auto ndim = in.get<std::uint8_t>("ndim");
    if (ndim == 0) throw FormatError("container: tensor " + e.name + " has ndim 0");
    Shape shape;
    std::size_t count_elems = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const auto dim = in.get<std::uint64_t>("dims");
      if (dim == 0) throw FormatError("container: tensor " + e.name + " has a zero dimension");
      const std::size_t scalar = e.dtype == DType::f32 ? 4 : 8;
      if (dim > in.remaining() / scalar / count_elems) {
        throw FormatError("container: tensor " + e.name + " declares more data than present");
      }
      count_elems *= dim;
      shape.push_back(dim);
    }
    std::vector<double> data(count_elems);
    for (double& v : data) {
      v = e.dtype == DType::f32
              ? static_cast<double>(std::bit_cast<float>(in.get<std::uint32_t>("data")))
              : std::bit_cast<double>(in.get<std::uint64_t>("data"));
    }
    e.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(e));
  }
  if (in.remaining() != 0) {
    throw FormatError("container: " + std::to_string(in.remaining()) +
                      " unexpected trailing bytes");
  }
  return out;
}

void write_container(const std::filesystem::path& path, const WeightContainer& entries) {
  const std::string bytes = encode_container(entries);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
}

WeightContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_container(buf.str());
}

const ContainerEntry& find_entry(const WeightContainer& entries, std::string_view name) {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw FormatError("container has no tensor '" + std::string(name) + "'");
}

DType storage_dtype() { return float_mode() == FloatMode::f32 ? DType::f32 : DType::f64; }

bool bitwise_equal(const WeightContainer& a, const WeightContainer& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].dtype != b[i].dtype ||
        !bitwise_equal(a[i].tensor, b[i].tensor))
      return false;
  }
  return true;
}

}  // namespace lamda
