// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace vocalplan {

/// Mono audio at its native sample rate. Samples are finite and lie in
/// [-1, 1]; the buffer is immutable once built.
class AudioBuffer {
 public:
  AudioBuffer(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const noexcept { return samples_; }
  int sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

enum class WavEncoding { Pcm16, Float32 };

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
/// Multi-channel audio is averaged to mono.
AudioBuffer load_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer,
               WavEncoding encoding = WavEncoding::Pcm16);

/// Interleaved multi-channel writer, mainly for fixtures.
void write_wav_channels(const std::filesystem::path& path,
                        std::span<const std::vector<double>> channels, int sample_rate,
                        WavEncoding encoding = WavEncoding::Pcm16);

double duration_seconds(const AudioBuffer& buffer);

}  // namespace vocalplan
