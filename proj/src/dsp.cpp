// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fft.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

std::size_t AnalysisConfig::frame_length(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(frame_ms * sample_rate / 1000.0));
}

std::size_t AnalysisConfig::hop_length(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
}

std::size_t AnalysisConfig::pitch_window_length(int sample_rate) const {
  const auto two_periods = static_cast<std::size_t>(std::ceil(2.0 * sample_rate / f_min));
  return std::max(frame_length(sample_rate), two_periods);
}

void AnalysisConfig::validate(int sample_rate) const {
  if (!(frame_ms > 0.0) || !(hop_ms > 0.0)) {
    throw InputError(fmt::format("frame_ms and hop_ms must be positive (got {}, {})", frame_ms, hop_ms));
  }
  if (hop_ms > frame_ms) {
    throw InputError(fmt::format("hop_ms {} exceeds frame_ms {}", hop_ms, frame_ms));
  }
  if (frame_length(sample_rate) == 0 || hop_length(sample_rate) == 0) {
    throw InputError(fmt::format("frame or hop rounds to zero samples at {} Hz", sample_rate));
  }
  if (!(f_min > 0.0) || !(f_min < f_max) || !(f_max < sample_rate / 2.0)) {
    throw InputError(fmt::format("invalid F0 range [{}, {}] at {} Hz", f_min, f_max, sample_rate));
  }
  if (!(voicing_threshold > 0.0 && voicing_threshold <= 1.0)) {
    throw InputError(fmt::format("voicing_threshold must be in (0, 1], got {}", voicing_threshold));
  }
  if (!(octave_ratio > 0.0 && octave_ratio <= 1.0)) {
    throw InputError(fmt::format("octave_ratio must be in (0, 1], got {}", octave_ratio));
  }
}

std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0 || n < frame_len) return 0;
  return (n - frame_len) / hop + 1;
}

std::vector<FrameView> frame_signal(const AudioBuffer& buffer, std::size_t frame_len,
                                    std::size_t hop) {
  if (hop == 0 || hop > frame_len) {
    throw InputError(fmt::format("hop must satisfy 0 < hop <= frame_len (hop={}, frame_len={})",
                                 hop, frame_len));
  }
  if (frame_len > buffer.size()) {
    throw InputError(fmt::format("frame length {} exceeds buffer length {}", frame_len,
                                 buffer.size()));
  }
  const std::size_t count = frame_count(buffer.size(), frame_len, hop);
  const auto samples = buffer.samples();
  const double sr = buffer.sample_rate();
  std::vector<FrameView> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * hop;
    frames.push_back({samples.subspan(start, frame_len), start,
                      (static_cast<double>(start) + frame_len / 2.0) / sr});
  }
  return frames;
}

double frame_rms(std::span<const double> frame) {
  if (frame.empty()) throw InputError("frame_rms: empty frame");
  double sum = 0.0;
  for (double s : frame) sum += s * s;
  return std::sqrt(sum / static_cast<double>(frame.size()));
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(length));
  }
  return w;
}

namespace {

std::vector<std::complex<double>> windowed_dft(std::span<const double> frame) {
  const auto window = hann_window(frame.size());
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * window[i];
  return detail::real_dft(x);
}

}  // namespace

std::vector<double> magnitude_spectrum(std::span<const double> frame) {
  if (frame.empty()) throw InputError("magnitude_spectrum: empty frame");
  const auto bins = windowed_dft(frame);
  std::vector<double> mag(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) mag[k] = std::abs(bins[k]);
  return mag;
}

std::vector<double> power_spectrum(std::span<const double> frame) {
  if (frame.empty()) throw InputError("power_spectrum: empty frame");
  const auto bins = windowed_dft(frame);
  std::vector<double> power(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) power[k] = std::norm(bins[k]);
  return power;
}

std::optional<double> spectral_centroid(std::span<const double> frame, int sample_rate,
                                        double silence_floor) {
  if (frame.empty()) throw InputError("spectral_centroid: empty frame");
  const auto mag = magnitude_spectrum(frame);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(frame.size());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    total += mag[k];
    weighted += bin_hz * static_cast<double>(k) * mag[k];
  }
  if (total < silence_floor) return std::nullopt;
  return std::clamp(weighted / total, 0.0, sample_rate / 2.0);
}

std::optional<double> estimate_f0(std::span<const double> frame, int sample_rate, double f_min,
                                  double f_max, double voicing_threshold, double octave_ratio) {
  const double sr = sample_rate;
  if (!(f_min > 0.0) || !(f_min < f_max) || !(f_max < sr / 2.0)) {
    throw InputError(fmt::format("invalid F0 range [{}, {}] at {} Hz", f_min, f_max, sample_rate));
  }
  if (static_cast<double>(frame.size()) < 2.0 * sr / f_min) {
    throw InputError(fmt::format("frame of {} samples is shorter than two periods of {} Hz",
                                 frame.size(), f_min));
  }

  const std::size_t n = frame.size();
  double mean = 0.0;
  for (double s : frame) mean += s;
  mean /= static_cast<double>(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = frame[i] - mean;

  const auto lag_lo = static_cast<std::size_t>(std::max(1.0, std::floor(sr / f_max)));
  const auto lag_hi = std::min(static_cast<std::size_t>(std::ceil(sr / f_min)), n - 2);
  // Correlations for lags [lag_lo - 1, lag_hi + 1] so every candidate has neighbours.
  const std::size_t first = lag_lo - 1;
  const std::size_t last = lag_hi + 1;
  std::vector<double> r(last - first + 1, 0.0);
  for (std::size_t lag = std::max<std::size_t>(first, 1); lag <= last; ++lag) {
    double cross = 0.0, head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      cross += x[i] * x[i + lag];
      head += x[i] * x[i];
      tail += x[i + lag] * x[i + lag];
    }
    const double denom = std::sqrt(head * tail);
    r[lag - first] = denom > 0.0 ? cross / denom : 0.0;
  }
  if (first == 0) r[0] = 1.0;

  auto at = [&](std::size_t lag) { return r[lag - first]; };
  double best = -1.0;
  for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
    if (at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1)) best = std::max(best, at(lag));
  }
  if (best < voicing_threshold) return std::nullopt;

  for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
    const double v = at(lag);
    if (v < at(lag - 1) || v < at(lag + 1) || v < octave_ratio * best || v < voicing_threshold) {
      continue;
    }
    const double left = at(lag - 1);
    const double right = at(lag + 1);
    const double curvature = left - 2.0 * v + right;
    double offset = 0.0;
    if (curvature < 0.0) offset = std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
    const double f0 = sr / (static_cast<double>(lag) + offset);
    return std::clamp(f0, f_min, f_max);
  }
  return std::nullopt;
}

namespace {

struct FramePlan {
  std::size_t count = 0;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t pitch_len = 0;
};

FramePlan plan_frames(const AudioBuffer& buffer, const AnalysisConfig& config) {
  config.validate(buffer.sample_rate());
  FramePlan plan;
  plan.frame_len = config.frame_length(buffer.sample_rate());
  plan.hop = config.hop_length(buffer.sample_rate());
  plan.pitch_len = config.pitch_window_length(buffer.sample_rate());
  if (buffer.size() < plan.frame_len) {
    throw InputError(fmt::format("buffer of {} samples is shorter than one {}-sample frame",
                                 buffer.size(), plan.frame_len));
  }
  plan.count = frame_count(buffer.size(), plan.frame_len, plan.hop);
  return plan;
}

FrameTrack make_track(std::size_t count) {
  FrameTrack track;
  track.frame_times.resize(count);
  track.f0_hz.resize(count);
  track.rms.resize(count);
  track.centroid_hz.resize(count);
  return track;
}

// Fills slot i of the track. Every frame is independent of every other.
void analyze_frame(const AudioBuffer& buffer, const AnalysisConfig& config, const FramePlan& plan,
                   std::size_t i, FrameTrack& track) {
  const auto samples = buffer.samples();
  const int sr = buffer.sample_rate();
  const std::size_t start = i * plan.hop;
  const auto frame = samples.subspan(start, plan.frame_len);
  const double center = static_cast<double>(start) + plan.frame_len / 2.0;

  track.frame_times[i] = center / sr;
  track.rms[i] = frame_rms(frame);
  track.centroid_hz[i] = spectral_centroid(frame, sr, config.silence_floor);

  track.f0_hz[i] = std::nullopt;
  if (track.rms[i] <= config.min_voiced_rms || samples.size() < plan.pitch_len) return;
  const double wanted = center - plan.pitch_len / 2.0;
  const double max_start = static_cast<double>(samples.size() - plan.pitch_len);
  const auto pitch_start = static_cast<std::size_t>(std::clamp(std::round(wanted), 0.0, max_start));
  track.f0_hz[i] = estimate_f0(samples.subspan(pitch_start, plan.pitch_len), sr, config.f_min,
                               config.f_max, config.voicing_threshold, config.octave_ratio);
}

}  // namespace

FrameTrack analyze(const AudioBuffer& buffer, const AnalysisConfig& config) {
  const FramePlan plan = plan_frames(buffer, config);
  FrameTrack track = make_track(plan.count);
  const auto count = static_cast<std::ptrdiff_t>(plan.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    analyze_frame(buffer, config, plan, static_cast<std::size_t>(i), track);
  }
  return track;
}

namespace serial {

FrameTrack analyze(const AudioBuffer& buffer, const AnalysisConfig& config) {
  const FramePlan plan = plan_frames(buffer, config);
  FrameTrack track = make_track(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) analyze_frame(buffer, config, plan, i, track);
  return track;
}

}  // namespace serial

}  // namespace vocalplan
