// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "vocalplan/errors.hpp"

namespace vocalplan {

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open audio file '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) {
    throw InputError(fmt::format("sample rate must be positive, got {}", sample_rate_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double s = samples_[i];
    if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
      throw InputError(fmt::format("sample {} is {} (expected finite value in [-1, 1])", i, s));
    }
  }
}

AudioBuffer load_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError(fmt::format("'{}' is not a RIFF/WAVE file", name));
  }

  FormatChunk fmt_chunk;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    const auto chunk_size = read_le<std::uint32_t>(header + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(chunk_size, bytes.size() - body);
    if (std::memcmp(header, "fmt ", 4) == 0) {
      if (available < 16) throw InputError(fmt::format("'{}': truncated fmt chunk", name));
      const std::uint8_t* p = bytes.data() + body;
      fmt_chunk.format = read_le<std::uint16_t>(p);
      fmt_chunk.channels = read_le<std::uint16_t>(p + 2);
      fmt_chunk.sample_rate = read_le<std::uint32_t>(p + 4);
      fmt_chunk.bits_per_sample = read_le<std::uint16_t>(p + 14);
      if (fmt_chunk.format == kFormatExtensible) {
        if (available < 26) throw InputError(fmt::format("'{}': truncated extensible fmt chunk", name));
        // First two bytes of the sub-format GUID carry the real format tag.
        fmt_chunk.format = read_le<std::uint16_t>(p + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(header, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1U);
  }

  if (!have_fmt) throw InputError(fmt::format("'{}': missing fmt chunk", name));
  if (!have_data) throw InputError(fmt::format("'{}': missing data chunk", name));
  if (fmt_chunk.channels == 0) throw InputError(fmt::format("'{}': zero channels", name));
  if (fmt_chunk.sample_rate == 0 ||
      fmt_chunk.sample_rate > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw InputError(fmt::format("'{}': invalid sample rate {}", name, fmt_chunk.sample_rate));
  }

  std::size_t sample_bytes = 0;
  if (fmt_chunk.format == kFormatPcm && fmt_chunk.bits_per_sample == 16) {
    sample_bytes = 2;
  } else if (fmt_chunk.format == kFormatFloat && fmt_chunk.bits_per_sample == 32) {
    sample_bytes = 4;
  } else {
    throw InputError(fmt::format("'{}': unsupported encoding (format {}, {} bits)", name,
                                 fmt_chunk.format, fmt_chunk.bits_per_sample));
  }

  const std::size_t frame_bytes = sample_bytes * fmt_chunk.channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw InputError(fmt::format("'{}': zero-length audio", name));

  std::vector<double> mono(frames);
  const double inv_channels = 1.0 / fmt_chunk.channels;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::uint8_t* frame = data + f * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt_chunk.channels; ++c) {
      const std::uint8_t* p = frame + c * sample_bytes;
      double s = 0.0;
      if (sample_bytes == 2) {
        s = read_le<std::int16_t>(p) / 32768.0;
      } else {
        s = static_cast<double>(read_le<float>(p));
        if (!std::isfinite(s)) {
          throw InputError(fmt::format("'{}': non-finite sample at frame {}", name, f));
        }
        s = std::clamp(s, -1.0, 1.0);
      }
      acc += s;
    }
    mono[f] = acc * inv_channels;
  }
  return AudioBuffer(std::move(mono), static_cast<int>(fmt_chunk.sample_rate));
}

void write_wav_channels(const std::filesystem::path& path,
                        std::span<const std::vector<double>> channels, int sample_rate,
                        WavEncoding encoding) {
  if (channels.empty()) throw InputError("write_wav: no channels");
  if (sample_rate <= 0) throw InputError("write_wav: sample rate must be positive");
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != frames) throw InputError("write_wav: channels differ in length");
  }

  const std::uint16_t n_channels = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(n_channels * bits / 8);
  const auto data_size = static_cast<std::uint32_t>(frames * block_align);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_le<std::uint32_t>(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, n_channels);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  put_le<std::uint16_t>(out, block_align);
  put_le<std::uint16_t>(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_le<std::uint32_t>(out, data_size);

  for (std::size_t f = 0; f < frames; ++f) {
    for (const auto& ch : channels) {
      const double s = std::clamp(ch[f], -1.0, 1.0);
      if (encoding == WavEncoding::Pcm16) {
        const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(scaled));
      } else {
        put_le<float>(out, static_cast<float>(s));
      }
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError(fmt::format("cannot write '{}'", path.string()));
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw InputError(fmt::format("write to '{}' failed", path.string()));
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer, WavEncoding encoding) {
  const std::array<std::vector<double>, 1> channels{
      std::vector<double>(buffer.samples().begin(), buffer.samples().end())};
  write_wav_channels(path, channels, buffer.sample_rate(), encoding);
}

double duration_seconds(const AudioBuffer& buffer) {
  return static_cast<double>(buffer.size()) / buffer.sample_rate();
}

}  // namespace vocalplan
