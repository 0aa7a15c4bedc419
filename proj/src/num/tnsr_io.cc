// Copyright 2026 The ppg2mel Authors.
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

#include "ppg2mel/num/tnsr_io.h"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ppg2mel/num/errors.h"

namespace ppg2mel::num {

namespace {

static_assert(std::endian::native == std::endian::little,
              "TNSR I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError(std::string("TNSR: truncated while reading ") + what);
  }
  return v;
}

}  // namespace

void write_tnsr(std::ostream& os, const Tensor& t) {
  os.write("TNSR", 4);
  put<std::uint16_t>(os, kTnsrVersion);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(t.rank()));
  for (std::size_t e : t.shape()) put<std::uint64_t>(os, e);
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

Tensor read_tnsr(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "TNSR", 4) != 0) {
    throw FormatError("TNSR: bad magic");
  }
  auto version = get<std::uint16_t>(is, "version");
  if (version != kTnsrVersion) {
    throw FormatError("TNSR: unsupported version " + std::to_string(version));
  }
  auto rank = get<std::uint16_t>(is, "rank");
  if (rank == 0) throw FormatError("TNSR: rank 0");
  Shape shape(rank);
  for (auto& e : shape) {
    e = get<std::uint64_t>(is, "extent");
    if (e == 0) throw FormatError("TNSR: zero extent");
  }
  std::vector<double> data(shape_numel(shape));
  if (!is.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    throw FormatError("TNSR: truncated payload for shape " + shape_str(shape));
  }
  return Tensor::from(std::move(shape), std::move(data));
}

void save_tnsr(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tnsr(os, t);
}

Tensor load_tnsr(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tnsr(is);
}

void write_checkpoint(std::ostream& os, const NamedTensors& tensors) {
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw FormatError("checkpoint name too long: " + name);
    put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tnsr(os, t);
  }
}

NamedTensors read_checkpoint(std::istream& is) {
  NamedTensors out;
  while (is.peek() != std::char_traits<char>::eof()) {
    auto len = get<std::uint16_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("checkpoint: truncated name");
    out.emplace_back(std::move(name), read_tnsr(is));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, tensors);
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace ppg2mel::num
