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
#include "drg/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "drg/error.hpp"

namespace drg::io {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& source, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(source, 0, std::string("truncated tensor file while reading ") + what);
  }
  return value;
}

std::string get_string(std::istream& in, std::uint64_t length, const std::string& source, const char* what) {
  constexpr std::uint64_t kMaxString = std::uint64_t{1} << 32;
  if (length > kMaxString) throw ParseError(source, 0, std::string("implausible length for ") + what);
  std::string s(static_cast<std::size_t>(length), '\0');
  if (length > 0 && !in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw ParseError(source, 0, std::string("truncated tensor file while reading ") + what);
  }
  return s;
}

}  // namespace

const Tensor* TensorFile::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void TensorFile::add(std::string name, Tensor tensor) { tensors.emplace_back(std::move(name), std::move(tensor)); }

void write_tensor_file(std::ostream& out, const TensorFile& file) {
  out.write(kTensorFileMagic, 8);
  put<std::uint32_t>(out, kTensorFileVersion);
  put<std::uint64_t>(out, file.metadata.size());
  out.write(file.metadata.data(), static_cast<std::streamsize>(file.metadata.size()));
  put<std::uint64_t>(out, file.tensors.size());
  for (const auto& [name, t] : file.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint64_t>(out, e);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(Real)));
  }
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_tensor_file(out, file);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

TensorFile read_tensor_file(std::istream& in, const std::string& source) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kTensorFileMagic, 8) != 0) {
    throw ParseError(source, 0, "not a tensor file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, source, "version");
  if (version != kTensorFileVersion) {
    throw ParseError(source, 0, "unsupported tensor file version " + std::to_string(version));
  }
  TensorFile file;
  file.metadata = get_string(in, get<std::uint64_t>(in, source, "metadata length"), source, "metadata");
  const auto count = get<std::uint64_t>(in, source, "tensor count");
  std::set<std::string> seen;
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = get_string(in, get<std::uint32_t>(in, source, "name length"), source, "tensor name");
    if (!seen.insert(name).second) throw ParseError(source, 0, "duplicate tensor '" + name + "'");
    const auto rank = get<std::uint32_t>(in, source, "rank");
    if (rank == 0 || rank > 8) throw ParseError(source, 0, "tensor '" + name + "' has unsupported rank");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& e : shape) {
      const auto extent = get<std::uint64_t>(in, source, "extent");
      if (extent == 0 || extent > (std::uint64_t{1} << 40) / numel) {
        throw ParseError(source, 0, "tensor '" + name + "' has an invalid extent");
      }
      e = static_cast<std::size_t>(extent);
      numel *= extent;
    }
    std::vector<Real> values(static_cast<std::size_t>(numel));
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(numel * sizeof(Real)))) {
      throw ParseError(source, 0, "truncated data for tensor '" + name + "'");
    }
    try {
      file.add(std::move(name), Tensor::from_external(std::move(shape), std::move(values)));
    } catch (const NumericError& e) {
      throw ParseError(source, 0, e.what());
    }
  }
  return file;
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open tensor file");
  return read_tensor_file(in, path.string());
}

}  // namespace drg::io
