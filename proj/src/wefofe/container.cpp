// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wefofe/error.hpp"

namespace wefofe {

namespace {

constexpr char kMagic[4] = {'W', 'F', 'T', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view in, size_t pos) {
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return static_cast<T>(v);
}

void put_f64(std::string& out, double d) { put_le(out, std::bit_cast<uint64_t>(d)); }
double get_f64(std::string_view in, size_t pos) {
  return std::bit_cast<double>(get_le<uint64_t>(in, pos));
}

}  // namespace

std::string encode_container(std::span<const NamedTensor> tensors) {
  nlohmann::ordered_json manifest;
  manifest["tensors"] = nlohmann::ordered_json::array();
  uint64_t offset = 0;
  for (const auto& t : tensors) {
    require(t.values.size() == t.shape.size(), ErrorKind::Dimension,
            "container entry '" + t.name + "' has inconsistent shape");
    manifest["tensors"].push_back({{"name", t.name},
                                   {"rows", t.shape.rows},
                                   {"cols", t.shape.cols},
                                   {"dtype", "f64le"},
                                   {"offset", offset}});
    offset += 8 * t.values.size();
  }
  manifest["payload_bytes"] = offset;
  const std::string m = manifest.dump();

  std::string out(kMagic, 4);
  put_le(out, kVersion);
  put_le(out, static_cast<uint64_t>(m.size()));
  out += m;
  out.reserve(out.size() + offset);
  for (const auto& t : tensors)
    for (double d : t.values) put_f64(out, d);
  return out;
}

std::vector<NamedTensor> decode_container(std::string_view bytes) {
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 4) == 0,
          ErrorKind::Data, "not a tensor container (bad magic)");
  const auto version = get_le<uint32_t>(bytes, 4);
  require(version == kVersion, ErrorKind::Data,
          "unsupported tensor container version " + std::to_string(version));
  const auto mlen = get_le<uint64_t>(bytes, 8);
  require(16 + mlen <= bytes.size(), ErrorKind::Data, "truncated container manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, mlen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, std::string("corrupt container manifest: ") + e.what());
  }
  const size_t payload = 16 + mlen;
  const uint64_t payload_bytes = manifest.at("payload_bytes").get<uint64_t>();
  require(payload + payload_bytes == bytes.size(), ErrorKind::Data,
          "container payload size does not match manifest");

  std::vector<NamedTensor> out;
  for (const auto& e : manifest.at("tensors")) {
    NamedTensor t;
    t.name = e.at("name").get<std::string>();
    t.shape = {e.at("rows").get<size_t>(), e.at("cols").get<size_t>()};
    require(e.at("dtype").get<std::string>() == "f64le", ErrorKind::Data,
            "unsupported dtype for '" + t.name + "'");
    const auto off = e.at("offset").get<uint64_t>();
    require(off + 8 * t.shape.size() <= payload_bytes, ErrorKind::Data,
            "container entry '" + t.name + "' exceeds payload");
    t.values.resize(t.shape.size());
    for (size_t i = 0; i < t.values.size(); ++i)
      t.values[i] = get_f64(bytes, payload + off + 8 * i);
    out.push_back(std::move(t));
  }
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

void write_container(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors) {
  write_file_bytes(path, encode_container(tensors));
}

std::vector<NamedTensor> read_container(const std::filesystem::path& path) {
  return decode_container(read_file_bytes(path));
}

std::vector<NamedTensor> snapshot_groups(std::span<const ParamGroup> groups) {
  std::vector<NamedTensor> out;
  for (const auto& g : groups)
    for (size_t i = 0; i < g.tensors.size(); ++i) {
      const auto v = g.tensors[i].values();
      out.push_back({g.name + "/" + g.tensor_names[i], g.tensors[i].shape(),
                     std::vector<double>(v.begin(), v.end())});
    }
  return out;
}

}  // namespace wefofe
