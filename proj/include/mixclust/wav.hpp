// Copyright 2026 The mixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal RIFF/WAVE reader and writer: 16-bit PCM and 32-bit IEEE float,
// mono or stereo, little-endian.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mixclust/error.hpp"

namespace mixclust {

enum class SampleFormat { kPcm16, kFloat32 };

struct AudioBuffer {
  std::vector<std::vector<double>> channels;
  double sample_rate = 16000.0;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

namespace wav_detail {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little,
              "WAV and checkpoint I/O assume a little-endian host");

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace wav_detail

inline std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, SampleFormat format) {
  using namespace wav_detail;
  const std::size_t nch = audio.num_channels();
  if (nch < 1 || nch > 2) throw InvalidInput("wav: only mono and stereo are supported");
  for (const auto& ch : audio.channels) {
    if (ch.size() != audio.num_frames()) throw InvalidInput("wav: channel lengths differ");
  }
  if (!(audio.sample_rate > 0) || audio.sample_rate != std::floor(audio.sample_rate)) {
    throw InvalidInput("wav: sample rate must be a positive integer");
  }
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(nch * bits / 8);
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(audio.num_frames()) * block_align;
  if (data_bytes > 0xFFFFFFFFULL - 64) throw InvalidInput("wav: file too large for RIFF");
  const auto rate = static_cast<std::uint32_t>(audio.sample_rate);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(nch));
  put_u32(out, rate);
  put_u32(out, rate * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));

  for (std::size_t i = 0; i < audio.num_frames(); ++i) {
    for (std::size_t c = 0; c < nch; ++c) {
      const double x = audio.channels[c][i];
      if (format == SampleFormat::kPcm16) {
        const double clipped = std::clamp(x, -1.0, 1.0);
        const auto s = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(s));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      }
    }
  }
  return out;
}

inline AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes) {
  using namespace wav_detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InvalidInput("wav: not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, nch = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw InvalidInput("wav: truncated fmt chunk");
      format = get_u16(chunk + 8);
      nch = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw InvalidInput("wav: truncated extensible fmt chunk");
        format = get_u16(chunk + 8 + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, avail);  // tolerate streaming writers
    }
    pos = body + size + (size & 1u);
    if (data && have_fmt) break;
  }
  if (!have_fmt) throw InvalidInput("wav: missing fmt chunk");
  if (!data) throw InvalidInput("wav: missing data chunk");
  if (nch < 1 || nch > 2) throw InvalidInput("wav: only mono and stereo are supported");
  if (rate == 0) throw InvalidInput("wav: zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) throw InvalidInput("wav: only 16-bit PCM and 32-bit float are supported");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * nch);
  AudioBuffer audio;
  audio.sample_rate = rate;
  audio.channels.assign(nch, std::vector<double>(frames));
  const std::uint8_t* p = data;
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < nch; ++c) {
      if (pcm16) {
        audio.channels[c][i] = static_cast<std::int16_t>(get_u16(p)) / 32768.0;
      } else {
        audio.channels[c][i] = std::bit_cast<float>(get_u32(p));
      }
      p += bytes_per_sample;
    }
  }
  return audio;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("wav: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string(e.what()) + " (" + path.string() + ")");
  }
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
                      SampleFormat format = SampleFormat::kFloat32) {
  const auto bytes = encode_wav(audio, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("wav: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("wav: write failed for " + path.string());
}

}  // namespace mixclust
