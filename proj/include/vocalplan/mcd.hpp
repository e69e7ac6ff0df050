// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <utility>
#include <vector>

#include "vocalplan/audio_io.hpp"

namespace vocalplan {

/// Mel-cepstral coefficients 1..D per frame (c0 dropped).
struct CepstralTrack {
  std::vector<std::vector<double>> frames;
  std::vector<double> frame_times;

  std::size_t size() const noexcept { return frames.size(); }
  std::size_t dimension() const noexcept { return frames.empty() ? 0 : frames.front().size(); }
  bool operator==(const CepstralTrack&) const = default;
};

struct CepstrumConfig {
  std::size_t n_coeffs = 13;
  std::size_t n_filters = 26;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  /// Floor applied to filterbank energies before the log.
  double energy_floor = 1e-10;
  void validate() const;
};

/// (10 / ln 10) * sqrt(2)
inline constexpr double kMcdScale = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;

/// Triangular filters on the HTK mel scale spanning 0 Hz to Nyquist.
/// Returns n_filters rows of n_bins weights.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_filters, std::size_t n_bins,
                                                std::size_t dft_length, int sample_rate);

CepstralTrack mel_cepstrum(const AudioBuffer& buffer, const CepstrumConfig& config = {});

namespace serial {
CepstralTrack mel_cepstrum(const AudioBuffer& buffer, const CepstrumConfig& config = {});
}  // namespace serial

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  double total_cost = 0.0;
};

/// DTW with steps (1,0), (0,1), (1,1), unit weights and Euclidean frame
/// distance. Among minimum-cost paths the shortest wins, so the result is
/// symmetric under swapping the arguments.
Alignment dtw_align(const CepstralTrack& a, const CepstralTrack& b);

/// kMcdScale * mean Euclidean distance over DTW-aligned frame pairs, in dB.
double mcd(const CepstralTrack& a, const CepstralTrack& b);

/// CSV with header "time,c1,...,cD" and one row per frame.
void write_track_csv(std::ostream& out, const CepstralTrack& track);
CepstralTrack read_track_csv(std::istream& in);
CepstralTrack read_track_csv(const std::filesystem::path& path);

}  // namespace vocalplan
