// Copyright 2026 The SLAY Authors
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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "slay/tensor.hpp"

namespace slay {

/// On-disk layout (all little-endian):
///   "SLAY" | u32 version=1 | u32 rows | u32 cols | u8 dtype | payload
/// dtype 0 = f64, 1 = f32; payload is row-major.
enum class Dtype : std::uint8_t { f64 = 0, f32 = 1 };

struct TensorFile {
  Dtype dtype = Dtype::f64;
  Matrix<double> values;
};

inline constexpr std::array<char, 4> kTensorMagic{'S', 'L', 'A', 'Y'};
inline constexpr std::uint32_t kTensorVersion = 1;

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<unsigned char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    fail(ErrorKind::io, std::string("tensor file truncated while reading ") + what);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace detail

inline void write_tensor(std::ostream& out, const Matrix<double>& m, Dtype dtype = Dtype::f64) {
  require(m.rows() <= UINT32_MAX && m.cols() <= UINT32_MAX, ErrorKind::io,
          "tensor too large for the u32 header");
  out.write(kTensorMagic.data(), kTensorMagic.size());
  detail::put_le<std::uint32_t>(out, kTensorVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  for (double v : m.data()) {
    if (dtype == Dtype::f64) {
      detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) fail(ErrorKind::io, "failed writing tensor payload");
}

inline TensorFile read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kTensorMagic)
    fail(ErrorKind::io, "bad tensor magic (expected \"SLAY\")");
  const auto version = detail::get_le<std::uint32_t>(in, "version");
  if (version != kTensorVersion)
    fail(ErrorKind::io, "unsupported tensor version " + std::to_string(version));
  const auto rows = detail::get_le<std::uint32_t>(in, "rows");
  const auto cols = detail::get_le<std::uint32_t>(in, "cols");
  const auto dtype_raw = detail::get_le<std::uint8_t>(in, "dtype");
  if (dtype_raw > 1) fail(ErrorKind::io, "unknown tensor dtype " + std::to_string(dtype_raw));

  TensorFile file{static_cast<Dtype>(dtype_raw), Matrix<double>(rows, cols)};
  for (double& v : file.values.data()) {
    if (file.dtype == Dtype::f64) {
      v = std::bit_cast<double>(detail::get_le<std::uint64_t>(in, "payload"));
    } else {
      v = static_cast<double>(std::bit_cast<float>(detail::get_le<std::uint32_t>(in, "payload")));
    }
  }
  return file;
}

inline TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open tensor file " + path);
  return read_tensor(in);
}

inline void write_tensor_file(const std::string& path, const Matrix<double>& m, Dtype dtype) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open output tensor file " + path);
  write_tensor(out, m, dtype);
}

}  // namespace slay
