// Copyright 2026 The DRG-HOI Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "drg/tensor.hpp"

// Flat container of named tensors, shared by model checkpoints and feature
// archives. Little-endian layout:
//
//   char[8]  magic "DRGTNSR1"
//   u32      format version (1)
//   u64      metadata length, then that many bytes of UTF-8 JSON
//   u64      tensor count
//   per tensor:
//     u32 name length, name bytes
//     u32 rank, u64 extents[rank]
//     f64 values[product of extents], row-major
namespace drg::io {

inline constexpr char kTensorFileMagic[9] = "DRGTNSR1";
inline constexpr std::uint32_t kTensorFileVersion = 1;

struct TensorFile {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  void add(std::string name, Tensor tensor);
};

void write_tensor_file(std::ostream& out, const TensorFile& file);
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
// Throws ParseError on truncated or malformed input.
TensorFile read_tensor_file(std::istream& in, const std::string& source);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace drg::io
