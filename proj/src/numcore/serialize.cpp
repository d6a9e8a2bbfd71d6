// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/numcore/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "pam/errors.hpp"

namespace pam::num {

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts need byte swapping");

namespace {

constexpr char kMagic[8] = {'P', 'A', 'M', 'W', '0', '0', '0', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw InputError("truncated weight file " + path.string());
  }
  return v;
}

std::string get_string(std::ifstream& in, const std::filesystem::path& path) {
  const auto n = get<std::uint32_t>(in, path);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw InputError("truncated weight file " + path.string());
  return s;
}

std::ifstream open_checked(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weight file " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw InputError("not a weight file: " + path.string());
  }
  return in;
}

}  // namespace

void save_parameters(const std::filesystem::path& path, const std::string& header_json,
                     const ConstParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write weight file " + path.string());
  out.write(kMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header_json.size()));
  out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
    const auto data = p->value.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw InputError("failed writing weight file " + path.string());
}

std::string read_parameter_header(const std::filesystem::path& path) {
  std::ifstream in = open_checked(path);
  return get_string(in, path);
}

std::string load_parameters(const std::filesystem::path& path, const ParamList& params) {
  std::ifstream in = open_checked(path);
  std::string header = get_string(in, path);
  const auto count = get<std::uint32_t>(in, path);
  if (count != params.size()) {
    throw ConfigError("weight file " + path.string() + " holds " + std::to_string(count) +
                      " parameters, model expects " + std::to_string(params.size()));
  }
  std::unordered_map<std::string, Parameter*> by_name;
  for (Parameter* p : params) by_name.emplace(p->name, p);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, path);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("unexpected parameter '" + name + "' in weights");
    const auto rank = get<std::uint32_t>(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in, path));
    Parameter& p = *it->second;
    if (shape != p.value.shape()) {
      throw ConfigError("parameter '" + name + "' has shape " + to_string(shape) +
                        ", model expects " + to_string(p.value.shape()));
    }
    auto data = p.value.data();
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size_bytes()))) {
      throw InputError("truncated weight file " + path.string());
    }
    if (!p.value.all_finite()) throw NumericError("non-finite weights for '" + name + "'");
  }
  return header;
}

}  // namespace pam::num
