/* Copyright 2026 The fpmkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpm/error.hpp"
#include "fpm/forward.hpp"
#include "fpm/image.hpp"
#include "fpm/multiplex.hpp"
#include "fpm/noise.hpp"
#include "fpm/pupil.hpp"

// FPMS container, all integers little-endian:
//
//   offset  size  field
//        0     4  magic "FPMS"
//        4     4  u32 version (1)
//        8     4  u32 record count N
//       12     2  u16 height H
//       14     2  u16 width W
//       16     2  u16 channels K
//       18     1  u8 dtype tag (0 = float32)
//       19     1  u8 flags (bit 0 on-axis only, bit 1 multiplexed)
//       20     4  u32 metadata length L
//       24     L  UTF-8 JSON metadata
//     24+L        N * K * H * W float32 values, record-major, then channel,
//                 then row-major pixels

namespace fpm {

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 24;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::uint8_t kFlagOnAxis = 0x01;
inline constexpr std::uint8_t kFlagMultiplexed = 0x02;

enum class ContainerKind { measurements, reconstruction, ground_truth };

inline std::string to_string(ContainerKind k) {
  switch (k) {
    case ContainerKind::measurements: return "measurements";
    case ContainerKind::reconstruction: return "reconstruction";
    case ContainerKind::ground_truth: return "ground_truth";
  }
  return "?";
}

inline ContainerKind container_kind_from_string(const std::string& s) {
  if (s == "measurements") return ContainerKind::measurements;
  if (s == "reconstruction") return ContainerKind::reconstruction;
  if (s == "ground_truth") return ContainerKind::ground_truth;
  throw IoError("unknown container kind '" + s + "'");
}

struct ContainerMetadata {
  ContainerKind kind = ContainerKind::measurements;
  /// Acquisition grid; required for measurements, kept as provenance otherwise.
  std::optional<LedGrid> grid;
  NoiseSpec noise;
  std::optional<MultiplexMatrix> multiplex;
  /// 1 for grayscale, 3 when each color plane was simulated separately.
  int colors = 1;
  std::vector<std::string> ids;
  std::vector<int> labels;
  /// Free-form provenance (dataset, settings); written verbatim.
  nlohmann::json extra = nlohmann::json::object();

  /// Channels per color plane implied by the metadata.
  int channels_per_color() const {
    if (kind != ContainerKind::measurements) return 1;
    if (multiplex) return multiplex->rows();
    return grid ? grid->count() : 0;
  }
};

/// In-memory image of an FPMS file. Values are held at float32 precision.
class StackContainer {
 public:
  StackContainer() = default;
  StackContainer(Extent extent, int channels, ContainerMetadata meta)
      : extent_(extent), channels_(channels), meta_(std::move(meta)) {
    if (extent.height < 1 || extent.width < 1 || extent.height > 0xffff ||
        extent.width > 0xffff) {
      throw ConfigError("container extent " + to_string(extent) + " out of range");
    }
    if (channels < 1 || channels > 0xffff) throw ConfigError("container channel count out of range");
    meta_.ids.clear();
    meta_.labels.clear();
  }

  Extent extent() const noexcept { return extent_; }
  int channels() const noexcept { return channels_; }
  int count() const noexcept { return static_cast<int>(meta_.ids.size()); }
  const ContainerMetadata& metadata() const noexcept { return meta_; }
  ContainerMetadata& metadata() noexcept { return meta_; }
  const std::vector<float>& payload() const noexcept { return payload_; }

  std::uint8_t flags() const noexcept {
    std::uint8_t f = 0;
    if (meta_.kind == ContainerKind::measurements && !meta_.multiplex && meta_.grid &&
        meta_.grid->side() == 1) {
      f |= kFlagOnAxis;
    }
    if (meta_.multiplex) f |= kFlagMultiplexed;
    return f;
  }
  bool on_axis_only() const noexcept { return (flags() & kFlagOnAxis) != 0; }

  void append(std::string id, int label, std::span<const RealImage> channels) {
    if (channels.size() != static_cast<std::size_t>(channels_)) {
      throw ConfigError("record '" + id + "' has " + std::to_string(channels.size()) +
                        " channels, container expects " + std::to_string(channels_));
    }
    for (const auto& ch : channels) {
      require_same_extent(ch.extent(), extent_, "container record");
      for (double v : ch) payload_.push_back(static_cast<float>(v));
    }
    meta_.ids.push_back(std::move(id));
    meta_.labels.push_back(label);
  }

  std::span<const float> record_values(int record) const {
    check_record(record);
    const std::size_t n = static_cast<std::size_t>(channels_) * extent_.size();
    return std::span<const float>(payload_).subspan(static_cast<std::size_t>(record) * n, n);
  }

  RealImage channel(int record, int channel) const {
    check_record(record);
    if (channel < 0 || channel >= channels_) throw ConfigError("channel index out of range");
    const auto values = record_values(record).subspan(
        static_cast<std::size_t>(channel) * extent_.size(), extent_.size());
    return RealImage(extent_, std::vector<double>(values.begin(), values.end()));
  }

  /// Channels of one color plane of a measurement record, with the metadata
  /// needed to rebuild its forward operator.
  MeasurementStack stack(int record, int color = 0) const {
    if (meta_.kind != ContainerKind::measurements || !meta_.grid) {
      throw ConfigError("container does not hold measurements");
    }
    if (color < 0 || color >= meta_.colors) throw ConfigError("color plane out of range");
    const int per = meta_.channels_per_color();
    MeasurementStack s{extent_, {}, {*meta_.grid, meta_.noise, meta_.multiplex, meta_.ids[record]}};
    for (int k = 0; k < per; ++k) s.channels.push_back(channel(record, color * per + k));
    return s;
  }

  friend bool operator==(const StackContainer& a, const StackContainer& b) {
    return a.extent_ == b.extent_ && a.channels_ == b.channels_ && a.payload_ == b.payload_ &&
           a.meta_.ids == b.meta_.ids && a.meta_.labels == b.meta_.labels &&
           a.meta_.kind == b.meta_.kind && a.meta_.grid == b.meta_.grid &&
           a.meta_.noise == b.meta_.noise && a.meta_.multiplex == b.meta_.multiplex &&
           a.meta_.colors == b.meta_.colors && a.meta_.extra == b.meta_.extra;
  }

 private:
  friend StackContainer decode_stack(std::span<const std::uint8_t>);

  void check_record(int record) const {
    if (record < 0 || record >= count()) {
      throw ConfigError("record index " + std::to_string(record) + " out of range (count " +
                        std::to_string(count()) + ")");
    }
  }

  Extent extent_;
  int channels_ = 0;
  ContainerMetadata meta_;
  std::vector<float> payload_;
};

namespace detail {

inline nlohmann::json metadata_to_json(const ContainerMetadata& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  j["colors"] = m.colors;
  j["ids"] = m.ids;
  j["labels"] = m.labels;
  j["grid"] = m.grid ? nlohmann::json{{"side", m.grid->side()},
                                      {"spacing", m.grid->spacing()},
                                      {"radius", m.grid->radius()}}
                     : nlohmann::json(nullptr);
  j["noise"] = {{"kind", to_string(m.noise.kind)}, {"sigma", m.noise.sigma}, {"seed", m.noise.seed}};
  j["multiplex"] = m.multiplex ? to_json(*m.multiplex) : nlohmann::json(nullptr);
  j["extra"] = m.extra;
  return j;
}

inline ContainerMetadata metadata_from_json(const nlohmann::json& j) {
  ContainerMetadata m;
  try {
    m.kind = container_kind_from_string(j.at("kind").get<std::string>());
    m.colors = j.at("colors").get<int>();
    m.ids = j.at("ids").get<std::vector<std::string>>();
    m.labels = j.at("labels").get<std::vector<int>>();
    if (const auto& g = j.at("grid"); !g.is_null()) {
      m.grid = LedGrid(g.at("side").get<int>(), g.at("spacing").get<int>(),
                       g.at("radius").get<int>());
    }
    const auto& n = j.at("noise");
    m.noise = {noise_kind_from_string(n.at("kind").get<std::string>()),
               n.at("sigma").get<double>(), n.at("seed").get<std::uint64_t>()};
    if (const auto& b = j.at("multiplex"); !b.is_null()) m.multiplex = multiplex_from_json(b);
    m.extra = j.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("invalid container metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid container metadata: ") + e.what());
  }
  return m;
}

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
  }
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{in[offset + i]} << (8 * i);
  return static_cast<T>(v);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_stack(const StackContainer& c) {
  const std::string meta = detail::metadata_to_json(c.metadata()).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kContainerHeaderSize + meta.size() + c.payload().size() * 4);
  for (char ch : {'F', 'P', 'M', 'S'}) out.push_back(static_cast<std::uint8_t>(ch));
  detail::put_le<std::uint32_t>(out, kContainerVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.count()));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.extent().height));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.extent().width));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(c.channels()));
  out.push_back(kDtypeFloat32);
  out.push_back(c.flags());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  for (float v : c.payload()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

/// Validates the fixed header and all length fields before reading the
/// payload, then checks the metadata against the header.
inline StackContainer decode_stack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kContainerHeaderSize) throw IoError("FPMS: file shorter than header");
  if (std::memcmp(bytes.data(), "FPMS", 4) != 0) throw IoError("FPMS: bad magic");
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kContainerVersion) {
    throw IoError("FPMS: unsupported version " + std::to_string(version));
  }
  const auto count = detail::get_le<std::uint32_t>(bytes, 8);
  const int height = detail::get_le<std::uint16_t>(bytes, 12);
  const int width = detail::get_le<std::uint16_t>(bytes, 14);
  const int channels = detail::get_le<std::uint16_t>(bytes, 16);
  const std::uint8_t dtype = bytes[18];
  const std::uint8_t flags = bytes[19];
  const auto meta_len = detail::get_le<std::uint32_t>(bytes, 20);
  if (height < 1 || width < 1 || channels < 1) throw IoError("FPMS: zero dimension in header");
  if (dtype != kDtypeFloat32) throw IoError("FPMS: unsupported dtype tag " + std::to_string(dtype));
  if ((flags & ~(kFlagOnAxis | kFlagMultiplexed)) != 0) throw IoError("FPMS: unknown flag bits");
  if (meta_len > bytes.size() - kContainerHeaderSize) {
    throw IoError("FPMS: metadata length exceeds file size");
  }
  const std::size_t payload_offset = kContainerHeaderSize + meta_len;
  const std::size_t per_record = static_cast<std::size_t>(channels) * height * width;
  const std::size_t available = bytes.size() - payload_offset;
  if (count > available / (per_record * 4)) {
    throw IoError("FPMS: header declares " + std::to_string(count) +
                  " records, payload holds fewer");
  }
  const std::size_t expected = static_cast<std::size_t>(count) * per_record * 4;
  if (available != expected) {
    throw IoError("FPMS: payload is " + std::to_string(available) +
                  " bytes, header declares " + std::to_string(expected));
  }

  nlohmann::json meta_json;
  try {
    meta_json = nlohmann::json::parse(bytes.begin() + kContainerHeaderSize,
                                      bytes.begin() + static_cast<std::ptrdiff_t>(payload_offset));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("FPMS: metadata is not valid JSON: ") + e.what());
  }
  ContainerMetadata meta = detail::metadata_from_json(meta_json);
  if (meta.ids.size() != count || meta.labels.size() != count) {
    throw IoError("FPMS: metadata lists " + std::to_string(meta.ids.size()) + " ids and " +
                  std::to_string(meta.labels.size()) + " labels for " + std::to_string(count) +
                  " records");
  }
  if (meta.colors != 1 && meta.colors != 3) throw IoError("FPMS: colors must be 1 or 3");
  if (meta.kind == ContainerKind::measurements && !meta.grid) {
    throw IoError("FPMS: measurement container without grid metadata");
  }
  if (meta.multiplex && meta.grid && meta.multiplex->cols() != meta.grid->count()) {
    throw IoError("FPMS: multiplex columns do not match the LED grid");
  }
  if (meta.channels_per_color() * meta.colors != channels) {
    throw IoError("FPMS: header declares " + std::to_string(channels) +
                  " channels, metadata implies " +
                  std::to_string(meta.channels_per_color() * meta.colors));
  }

  StackContainer c(Extent{height, width}, channels, std::move(meta));
  c.meta_.ids = meta_json.at("ids").get<std::vector<std::string>>();
  c.meta_.labels = meta_json.at("labels").get<std::vector<int>>();
  if (c.flags() != flags) throw IoError("FPMS: header flags disagree with metadata");

  c.payload_.resize(static_cast<std::size_t>(count) * per_record);
  for (std::size_t i = 0; i < c.payload_.size(); ++i) {
    c.payload_[i] =
        std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, payload_offset + 4 * i));
  }
  return c;
}

inline void write_stack(const StackContainer& c, const std::filesystem::path& path) {
  const auto bytes = encode_stack(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline StackContainer read_stack(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_stack(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace fpm
