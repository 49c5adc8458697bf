// Copyright 2026 The pianogm Authors.
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
#include <cstring>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pianogm {

template <typename T>
struct NpyDtype;
template <>
struct NpyDtype<float> {
  static constexpr const char* descr = "<f4";
};
template <>
struct NpyDtype<double> {
  static constexpr const char* descr = "<f8";
};
template <>
struct NpyDtype<std::uint8_t> {
  static constexpr const char* descr = "|u1";
};
template <>
struct NpyDtype<std::int64_t> {
  static constexpr const char* descr = "<i8";
};

/// One C-order array as stored in a .npy member.
struct NpyArray {
  std::string dtype;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> bytes;

  std::size_t size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  template <typename T>
  static NpyArray from(std::span<const T> values, std::vector<std::size_t> shape) {
    NpyArray a;
    a.dtype = NpyDtype<T>::descr;
    a.shape = std::move(shape);
    if (a.size() != values.size()) throw std::invalid_argument("npy: shape does not match data");
    a.bytes.resize(values.size() * sizeof(T));
    if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
    return a;
  }

  static NpyArray from_text(const std::string& text) {
    return from<std::uint8_t>(
        std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
        {text.size()});
  }

  template <typename T>
  std::vector<T> values() const {
    if (dtype != NpyDtype<T>::descr) {
      throw std::runtime_error("npy: expected dtype " + std::string(NpyDtype<T>::descr) +
                               " but found " + dtype);
    }
    std::vector<T> out(size());
    if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
  }

  std::string text() const {
    const auto v = values<std::uint8_t>();
    return {v.begin(), v.end()};
  }
};

/// Named-array container in NumPy's .npz layout (a zip of .npy members).
/// Members are written uncompressed in name order; reading also accepts
/// deflate-compressed members.
class NpzArchive {
 public:
  void put(const std::string& name, NpyArray array) { arrays_[name] = std::move(array); }
  bool contains(const std::string& name) const { return arrays_.count(name) > 0; }
  const NpyArray& at(const std::string& name) const;
  std::vector<std::string> names() const;
  const std::map<std::string, NpyArray>& arrays() const { return arrays_; }

  /// Writes to a temporary sibling file and renames it into place.
  void save(const std::filesystem::path& path) const;
  std::vector<std::uint8_t> serialize() const;

  /// Throws std::runtime_error on truncation, CRC mismatch or bad headers.
  static NpzArchive load(const std::filesystem::path& path);
  static NpzArchive parse(std::span<const std::uint8_t> bytes);

 private:
  std::map<std::string, NpyArray> arrays_;
};

/// Writes text to a temporary sibling file and renames it into place.
void write_file_atomically(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomically(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pianogm
