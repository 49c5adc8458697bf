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

#include "pianogm/npz.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

namespace pianogm {

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, v & 0xFFFF);
  put16(out, v >> 16);
}

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos;

  void need(std::size_t n) const {
    if (pos > bytes.size() || n > bytes.size() - pos) {
      throw std::runtime_error("npz: truncated archive at byte " + std::to_string(pos));
    }
  }
  std::uint32_t u16() {
    need(2);
    const std::uint32_t v = bytes[pos] | (bytes[pos + 1] << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    return lo | (u16() << 16);
  }
};

std::vector<std::uint8_t> npy_bytes(const NpyArray& array) {
  std::ostringstream shape;
  shape << "(";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    if (i > 0) shape << ", ";
    shape << array.shape[i];
  }
  shape << (array.shape.size() == 1 ? ",)" : ")");
  std::string header = "{'descr': '" + array.dtype + "', 'fortran_order': False, 'shape': " +
                       shape.str() + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  put16(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), array.bytes.begin(), array.bytes.end());
  return out;
}

std::string header_field(const std::string& header, const std::string& key) {
  const auto at = header.find("'" + key + "'");
  if (at == std::string::npos) throw std::runtime_error("npy: header lacks '" + key + "'");
  auto colon = header.find(':', at);
  auto start = header.find_first_not_of(' ', colon + 1);
  if (header[start] == '(') return header.substr(start, header.find(')', start) - start + 1);
  if (header[start] == '\'') return header.substr(start + 1, header.find('\'', start + 1) - start - 1);
  return header.substr(start, header.find_first_of(",}", start) - start);
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "<f4") return 4;
  if (dtype == "<f8" || dtype == "<i8") return 8;
  if (dtype == "|u1" || dtype == "<u1") return 1;
  throw std::runtime_error("npy: unsupported dtype " + dtype);
}

NpyArray parse_npy(std::span<const std::uint8_t> bytes, const std::string& name) {
  static constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  if (bytes.size() < 10 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw std::runtime_error("npy: bad magic in member " + name);
  }
  Cursor cur{bytes, 8};
  std::size_t header_len = bytes[6] == 1 ? cur.u16() : cur.u32();
  cur.need(header_len);
  const std::string header(bytes.begin() + cur.pos, bytes.begin() + cur.pos + header_len);
  cur.pos += header_len;

  NpyArray array;
  array.dtype = header_field(header, "descr");
  if (array.dtype == "<u1") array.dtype = "|u1";
  if (header_field(header, "fortran_order") != "False") {
    throw std::runtime_error("npy: Fortran-order member " + name + " not supported");
  }
  std::string shape = header_field(header, "shape");
  std::istringstream dims(shape.substr(1, shape.size() - 2));
  std::string dim;
  while (std::getline(dims, dim, ',')) {
    if (dim.find_first_not_of(' ') == std::string::npos) continue;
    array.shape.push_back(std::stoul(dim));
  }
  const std::size_t expected = array.size() * dtype_size(array.dtype);
  cur.need(expected);
  array.bytes.assign(bytes.begin() + cur.pos, bytes.begin() + cur.pos + expected);
  return array;
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t out_size) {
  std::vector<std::uint8_t> out(out_size);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw std::runtime_error("npz: inflateInit failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("npz: corrupt deflate stream");
  return out;
}

}  // namespace

const NpyArray& NpzArchive::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::runtime_error("npz: missing array '" + name + "'");
  return it->second;
}

std::vector<std::string> NpzArchive::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : arrays_) out.push_back(name);
  return out;
}

std::vector<std::uint8_t> NpzArchive::serialize() const {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> central;
  for (const auto& [name, array] : arrays_) {
    const std::string member = name + ".npy";
    const auto payload = npy_bytes(array);
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto size = static_cast<std::uint32_t>(payload.size());

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);  // stored
    put16(out, 0);
    put16(out, 0x21);  // 1980-01-01, fixed for reproducible bytes
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint32_t>(member.size()));
    put16(out, 0);
    out.insert(out.end(), member.begin(), member.end());
    out.insert(out.end(), payload.begin(), payload.end());

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint32_t>(member.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central.insert(central.end(), member.begin(), member.end());
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(arrays_.size()));
  put16(out, static_cast<std::uint32_t>(arrays_.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

void NpzArchive::save(const std::filesystem::path& path) const {
  write_file_atomically(path, serialize());
}

NpzArchive NpzArchive::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 22) throw std::runtime_error("npz: file too short");
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = bytes.size() >= 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
  for (std::size_t p = bytes.size() - 22 + 1; p-- > lowest;) {
    if (bytes[p] == 0x50 && bytes[p + 1] == 0x4b && bytes[p + 2] == 0x05 && bytes[p + 3] == 0x06) {
      eocd = p;
      break;
    }
  }
  if (eocd == std::string::npos) throw std::runtime_error("npz: missing end of central directory (truncated?)");
  Cursor cur{bytes, eocd + 10};
  const std::uint32_t entries = cur.u16();
  cur.u32();
  const std::uint32_t cd_offset = cur.u32();

  NpzArchive archive;
  Cursor cd{bytes, cd_offset};
  for (std::uint32_t e = 0; e < entries; ++e) {
    if (cd.u32() != 0x02014b50) throw std::runtime_error("npz: bad central directory entry");
    cd.pos += 6;
    const std::uint32_t method = cd.u16();
    cd.pos += 4;
    const std::uint32_t crc = cd.u32();
    const std::uint32_t comp_size = cd.u32();
    const std::uint32_t size = cd.u32();
    const std::uint32_t name_len = cd.u16();
    const std::uint32_t extra_len = cd.u16();
    const std::uint32_t comment_len = cd.u16();
    cd.pos += 8;
    const std::uint32_t local = cd.u32();
    cd.need(name_len);
    std::string member(bytes.begin() + cd.pos, bytes.begin() + cd.pos + name_len);
    cd.pos += name_len + extra_len + comment_len;

    Cursor lh{bytes, local};
    if (lh.u32() != 0x04034b50) throw std::runtime_error("npz: bad local header for " + member);
    lh.pos += 22;
    const std::uint32_t lname = lh.u16();
    const std::uint32_t lextra = lh.u16();
    lh.pos += lname + lextra;
    lh.need(comp_size);
    const auto raw = bytes.subspan(lh.pos, comp_size);
    std::vector<std::uint8_t> payload;
    if (method == 0) {
      payload.assign(raw.begin(), raw.end());
    } else if (method == 8) {
      payload = inflate_raw(raw, size);
    } else {
      throw std::runtime_error("npz: unsupported compression method for " + member);
    }
    if (crc32(0L, payload.data(), static_cast<uInt>(payload.size())) != crc) {
      throw std::runtime_error("npz: CRC mismatch in member " + member);
    }
    if (member.size() > 4 && member.ends_with(".npy")) member.resize(member.size() - 4);
    archive.put(member, parse_npy(payload, member));
  }
  return archive;
}

NpzArchive NpzArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open archive " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return parse(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_file_atomically(const std::filesystem::path& path,
                           std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  write_file_atomically(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pianogm
