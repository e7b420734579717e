// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The zonecsi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Binary dataset (ZCD1) and model bundle (ZCM1) formats, the CSV channel
// interchange, and CSV trajectory export. All binary fields are
// little-endian; see docs/formats.md for the byte layouts.

#include <Eigen/Dense>

#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/mobility.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/transform.hpp"
#include "zonecsi/zoning.hpp"

namespace zonecsi {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 20;
inline constexpr std::size_t kBundleHeaderBytes = 32;

namespace detail {

template <class U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  } else {
    return v;
  }
}

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) { raw(to_little(v)); }
  void f32(float v) { raw(to_little(std::bit_cast<std::uint32_t>(v))); }
  void f64(double v) { raw(to_little(std::bit_cast<std::uint64_t>(v))); }

 private:
  template <class U>
  void raw(U v) {
    unsigned char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out_.insert(out_.end(), buf, buf + sizeof(U));
  }
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(in_.data() + pos_, m.data(), m.size()) != 0)
      throw ParseError(pos_, "bad magic, expected \"" + std::string(m) + "\"");
    pos_ += m.size();
  }
  std::uint32_t u32(const char* what) { return to_little(raw<std::uint32_t>(what)); }
  float f32(const char* what) { return std::bit_cast<float>(to_little(raw<std::uint32_t>(what))); }
  double f64(const char* what) {
    return std::bit_cast<double>(to_little(raw<std::uint64_t>(what)));
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      throw ParseError(pos_, std::string("truncated while reading ") + what);
  }
  template <class U>
  U raw(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, in_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  const Bytes& in_;
  std::size_t pos_ = 0;
};

// a * b with overflow detection.
inline bool mul_ok(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return !__builtin_mul_overflow(a, b, &out);
}
inline bool add_ok(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return !__builtin_add_overflow(a, b, &out);
}

}  // namespace detail

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "short write to " + path);
}

inline void write_text(const std::string& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

// ---------------------------------------------------------------------------
// ZCD1 dataset

inline std::uint64_t dataset_byte_length(std::uint64_t n_t, std::uint64_t k, std::uint64_t count) {
  return kDatasetHeaderBytes + count * (24 + 8 * n_t * k);
}

inline Bytes serialize_dataset(const std::vector<ChannelSample>& samples) {
  require(!samples.empty(), ErrorKind::InvalidArgument, "dataset is empty");
  const auto n_t = samples.front().channel.rows();
  const auto k = samples.front().channel.cols();
  require(n_t >= 1 && k >= 1, ErrorKind::InvalidArgument, "empty channel matrix");
  Bytes out;
  out.reserve(dataset_byte_length(static_cast<std::uint64_t>(n_t), static_cast<std::uint64_t>(k),
                                  samples.size()));
  detail::ByteWriter w(out);
  w.magic("ZCD1");
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(n_t));
  w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    require(s.channel.rows() == n_t && s.channel.cols() == k, ErrorKind::DimensionMismatch,
            "samples have differing channel shapes");
    for (int i = 0; i < 3; ++i) w.f64(s.position(i));
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index r = 0; r < n_t; ++r) {
        w.f32(static_cast<float>(s.channel(r, c).real()));
        w.f32(static_cast<float>(s.channel(r, c).imag()));
      }
    }
  }
  return out;
}

inline std::vector<ChannelSample> parse_dataset(const Bytes& data) {
  detail::ByteReader r(data);
  r.expect_magic("ZCD1");
  const std::uint32_t version = r.u32("version");
  if (version != kDatasetVersion)
    throw ParseError(4, "unsupported dataset version " + std::to_string(version));
  const std::uint32_t n_t = r.u32("N_t");
  const std::uint32_t k = r.u32("K");
  const std::uint32_t count = r.u32("sample count");
  if (n_t == 0 || k == 0) throw ParseError(8, "N_t and K must be non-zero");
  std::uint64_t per = 0, body = 0, total = 0;
  if (!detail::mul_ok(n_t, k, per) || !detail::mul_ok(per, 8, per) ||
      !detail::add_ok(per, 24, per) || !detail::mul_ok(per, count, body) ||
      !detail::add_ok(body, kDatasetHeaderBytes, total))
    throw ParseError(8, "header dimensions overflow");
  if (total != data.size()) {
    const std::uint64_t at = data.size() < total ? data.size() : total;
    throw ParseError(at, "dataset length mismatch: expected " + std::to_string(total) +
                             " bytes, found " + std::to_string(data.size()));
  }
  std::vector<ChannelSample> samples(count);
  for (auto& s : samples) {
    for (int i = 0; i < 3; ++i) s.position(i) = r.f64("position");
    s.channel.resize(n_t, k);
    for (std::uint32_t c = 0; c < k; ++c) {
      for (std::uint32_t row = 0; row < n_t; ++row) {
        const float re = r.f32("channel");
        const float im = r.f32("channel");
        s.channel(row, c) = {re, im};
      }
    }
  }
  return samples;
}

inline void write_dataset(const std::string& path, const std::vector<ChannelSample>& samples) {
  write_file(path, serialize_dataset(samples));
}

inline std::vector<ChannelSample> read_dataset(const std::string& path) {
  return parse_dataset(read_file(path));
}

/// Rounds channel entries to the 32-bit storage precision of ZCD1, so that
/// in-memory data matches what a write/read cycle returns.
inline void quantize_to_storage(std::vector<ChannelSample>& samples) {
  // Works on the interleaved real/imaginary doubles; complex assignment from
  // narrowed parts was folded away by g++ 11 at -O3.
  for (auto& s : samples) {
    auto* d = reinterpret_cast<double*>(s.channel.data());
    for (Eigen::Index i = 0; i < 2 * s.channel.size(); ++i)
      d[i] = static_cast<double>(static_cast<float>(d[i]));
  }
}

// ---------------------------------------------------------------------------
// CSV channel interchange: x,y,z then 2*N_t*K values in ZCD1 entry order.

inline std::vector<ChannelSample> parse_channel_csv(const std::string& text, int n_t, int k) {
  require(n_t >= 1 && k >= 1, ErrorKind::InvalidArgument, "N_t and K must be positive");
  const std::size_t expected = 3 + 2 * static_cast<std::size_t>(n_t) * static_cast<std::size_t>(k);
  std::vector<ChannelSample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    vals.clear();
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      while (p < comma && *p == ' ') ++p;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || (ptr != comma && *ptr != ' '))
        fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", field " +
                                        std::to_string(vals.size() + 1) + ": not a number");
      vals.push_back(v);
      p = comma + 1;
    }
    if (vals.size() != expected)
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(expected) + " fields, found " +
                                      std::to_string(vals.size()));
    ChannelSample s;
    s.position = {vals[0], vals[1], vals[2]};
    s.channel.resize(n_t, k);
    std::size_t i = 3;
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < n_t; ++r, i += 2) s.channel(r, c) = {vals[i], vals[i + 1]};
    out.push_back(std::move(s));
  }
  require(!out.empty(), ErrorKind::ParseError, "CSV contains no samples");
  return out;
}

inline std::string trajectory_csv(const Trajectory& traj, const std::vector<int>& zones) {
  require(zones.size() == traj.size(), ErrorKind::DimensionMismatch,
          "zone sequence length does not match trajectory");
  std::ostringstream os;
  os << "time,x,y,zone\n" << std::setprecision(12);
  for (std::size_t i = 0; i < traj.size(); ++i)
    os << traj[i].time << ',' << traj[i].position.x() << ',' << traj[i].position.y() << ','
       << zones[i] << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// ZCM1 model bundle

struct ModelBundle {
  int n_t = 64;
  int n_c = 32;
  LayerSpec spec;
  ZonePartition partition;
  Normalizer normalizer;
  std::vector<ModelParams<double>> models;  // one per zone
};

/// Doubles stored per zone: trainable parameters plus four running-stat
/// vectors of the hidden width.
inline std::uint64_t bundle_zone_doubles(const LayerSpec& spec) {
  return static_cast<std::uint64_t>(count_parameters(spec).total) +
         4 * static_cast<std::uint64_t>(spec.hidden());
}

inline Bytes serialize_bundle(const ModelBundle& b) {
  require(static_cast<int>(b.models.size()) == b.partition.zones(), ErrorKind::InvalidArgument,
          "bundle needs one model per zone");
  require(b.spec.input_dim == 2 * static_cast<std::int64_t>(b.n_t) * b.n_c,
          ErrorKind::InvalidArgument, "spec input dimension disagrees with N_t, N_c");
  Bytes out;
  detail::ByteWriter w(out);
  w.magic("ZCM1");
  w.u32(kBundleVersion);
  w.u32(static_cast<std::uint32_t>(b.n_t));
  w.u32(static_cast<std::uint32_t>(b.n_c));
  w.u32(static_cast<std::uint32_t>(b.spec.codeword_len));
  w.u32(static_cast<std::uint32_t>(b.spec.width_factor));
  w.u32(static_cast<std::uint32_t>(b.spec.activation));
  w.u32(static_cast<std::uint32_t>(b.partition.zones()));
  for (const auto& c : b.partition.centroids) {
    w.f64(c.x());
    w.f64(c.y());
  }
  w.f64(b.normalizer.scale);
  for (const auto& m : b.models) {
    require(m.spec == b.spec, ErrorKind::InvalidArgument, "zone model spec differs from bundle");
    m.visit([&](std::string_view, const double* data, Eigen::Index size, bool) {
      for (Eigen::Index i = 0; i < size; ++i) w.f64(data[i]);
    });
  }
  return out;
}

inline ModelBundle parse_bundle(const Bytes& data) {
  detail::ByteReader r(data);
  r.expect_magic("ZCM1");
  const std::uint32_t version = r.u32("version");
  if (version != kBundleVersion)
    throw ParseError(4, "unsupported bundle version " + std::to_string(version));
  ModelBundle b;
  const std::uint32_t n_t = r.u32("N_t");
  const std::uint32_t n_c = r.u32("N_c");
  const std::uint32_t l = r.u32("L");
  const std::uint32_t beta = r.u32("beta");
  const std::uint32_t act = r.u32("activation");
  const std::uint32_t zones = r.u32("zone count");
  auto corrupt = [](const std::string& what) { fail(ErrorKind::CorruptBundle, what); };
  if (n_t == 0 || n_c == 0 || l == 0 || beta == 0) corrupt("zero dimension in header");
  if (act > 1) corrupt("unknown activation tag " + std::to_string(act));
  if (zones == 0) corrupt("zone count is zero");
  const std::uint64_t input_dim = 2ULL * n_t * n_c;  // < 2^65 impossible: both < 2^32
  if (input_dim < l) corrupt("codeword longer than input");
  const std::uint64_t hidden = static_cast<std::uint64_t>(beta) * l;
  if (hidden > (1ULL << 40)) corrupt("hidden width out of range");

  // Per-zone doubles: (d+1)h + 2h + (h+1)l + (l+1)h + 2h + (h+1)d + 4h.
  using Wide = unsigned __int128;
  const Wide d = input_dim, h = hidden, lw = l;
  const Wide per_zone = (d + 1) * h + (h + 1) * lw + (lw + 1) * h + (h + 1) * d + 8 * h;
  if (per_zone > std::numeric_limits<std::uint64_t>::max()) corrupt("tensor sizes overflow");
  const Wide expected_wide = per_zone * zones * 8 + kBundleHeaderBytes + 16ULL * zones + 8;
  if (expected_wide > std::numeric_limits<std::uint64_t>::max()) corrupt("bundle size overflows");
  const auto expected = static_cast<std::uint64_t>(expected_wide);
  if (expected != data.size())
    corrupt("tensor byte count mismatch: header implies " + std::to_string(expected) +
            " bytes, file has " + std::to_string(data.size()));

  b.n_t = static_cast<int>(n_t);
  b.n_c = static_cast<int>(n_c);
  b.spec = {static_cast<std::int64_t>(input_dim), l, beta, static_cast<Activation>(act)};
  for (std::uint32_t z = 0; z < zones; ++z) {
    const double x = r.f64("centroid");
    const double y = r.f64("centroid");
    if (!std::isfinite(x) || !std::isfinite(y)) corrupt("non-finite centroid");
    b.partition.centroids.emplace_back(x, y);
  }
  b.normalizer.scale = r.f64("normalizer scale");
  if (!(b.normalizer.scale > 0.0) || !std::isfinite(b.normalizer.scale))
    corrupt("normalizer scale must be positive");
  for (std::uint32_t z = 0; z < zones; ++z) {
    auto m = ModelParams<double>::zeros(b.spec);
    m.visit([&](std::string_view, double* d, Eigen::Index size, bool) {
      for (Eigen::Index i = 0; i < size; ++i) d[i] = r.f64("tensor");
    });
    if (!m.all_finite()) corrupt("non-finite parameter in zone " + std::to_string(z + 1));
    if ((m.bn1.running_var.array() <= 0.0).any() || (m.bn2.running_var.array() <= 0.0).any())
      corrupt("non-positive running variance in zone " + std::to_string(z + 1));
    b.models.push_back(std::move(m));
  }
  return b;
}

inline void save_model(const std::string& path, const ModelBundle& bundle) {
  write_file(path, serialize_bundle(bundle));
}

inline ModelBundle load_model(const std::string& path) { return parse_bundle(read_file(path)); }

/// The parameters a UE downloads for one zone: encoder trainable tensors.
inline std::vector<double> encoder_payload(const ModelParams<double>& m) {
  std::vector<double> out;
  m.visit([&](std::string_view name, const double* d, Eigen::Index size, bool trainable) {
    const auto layer = name.substr(0, 3);
    if (trainable && (layer == "fc1" || layer == "bn1" || layer == "fc2"))
      out.insert(out.end(), d, d + size);
  });
  return out;
}

}  // namespace zonecsi
