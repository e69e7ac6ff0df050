// SPDX-License-Identifier: Apache-2.0
//
// Frame-level analysis: framing, RMS energy, spectral centroid and
// autocorrelation F0. `analyze` runs frames in parallel with OpenMP;
// `serial::analyze` is the straightforward loop kept as its reference.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vocalplan/audio_io.hpp"

namespace vocalplan {

struct AnalysisConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double f_min = 50.0;
  double f_max = 500.0;
  /// Minimum normalized autocorrelation peak for a frame to count as voiced.
  double voicing_threshold = 0.3;
  /// Total spectral magnitude below which the centroid is undefined.
  double silence_floor = 1e-6;
  /// Frames whose RMS is at or below this are never voiced.
  double min_voiced_rms = 1e-5;
  /// The earliest lag peak reaching this fraction of the best peak wins,
  /// which suppresses sub-harmonic (octave-down) picks.
  double octave_ratio = 0.9;

  std::size_t frame_length(int sample_rate) const;
  std::size_t hop_length(int sample_rate) const;
  /// Pitch analysis window: the analysis frame widened to two periods of f_min.
  std::size_t pitch_window_length(int sample_rate) const;
  void validate(int sample_rate) const;
};

struct FrameView {
  std::span<const double> samples;
  std::size_t start = 0;  ///< first sample index
  double center_s = 0.0;
};

/// floor((n - frame_len) / hop) + 1; zero when the signal is shorter than a frame.
std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop);

std::vector<FrameView> frame_signal(const AudioBuffer& buffer, std::size_t frame_len,
                                    std::size_t hop);

double frame_rms(std::span<const double> frame);

/// Periodic (DFT-even) Hann window.
std::vector<double> hann_window(std::size_t length);

/// |X_k| for k = 0..n/2 of the Hann-windowed frame, DFT length = frame length.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

/// |X_k|^2 for k = 0..n/2 of the Hann-windowed frame.
std::vector<double> power_spectrum(std::span<const double> frame);

std::optional<double> spectral_centroid(std::span<const double> frame, int sample_rate,
                                        double silence_floor = 1e-6);

std::optional<double> estimate_f0(std::span<const double> frame, int sample_rate,
                                  double f_min, double f_max, double voicing_threshold = 0.3,
                                  double octave_ratio = 0.9);

/// Per-frame analysis results. All four series share the frame index.
struct FrameTrack {
  std::vector<double> frame_times;
  std::vector<std::optional<double>> f0_hz;
  std::vector<double> rms;
  std::vector<std::optional<double>> centroid_hz;

  std::size_t size() const noexcept { return frame_times.size(); }
  bool operator==(const FrameTrack&) const = default;
};

FrameTrack analyze(const AudioBuffer& buffer, const AnalysisConfig& config = {});

namespace serial {
FrameTrack analyze(const AudioBuffer& buffer, const AnalysisConfig& config = {});
}  // namespace serial

}  // namespace vocalplan
