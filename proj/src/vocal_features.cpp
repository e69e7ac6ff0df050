// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/vocal_features.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "json.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

void SpeakerBaseline::validate() const {
  if (pitch_hz <= 0 || !(energy_rms > 0.0) || spectral_centroid_hz <= 0) {
    throw InputError(fmt::format("speaker baseline values must be positive (pitch {}, energy {}, "
                                 "centroid {})",
                                 pitch_hz, energy_rms, spectral_centroid_hz));
  }
}

double linear_slope(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) {
    throw InputError(fmt::format("linear_slope: {} times vs {} values", times.size(), values.size()));
  }
  if (times.size() < 2) throw InputError("linear_slope: need at least two points");
  const double n = static_cast<double>(times.size());
  double t_mean = 0.0, v_mean = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    t_mean += times[i];
    v_mean += values[i];
  }
  t_mean /= n;
  v_mean /= n;
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - t_mean;
    cov += dt * (values[i] - v_mean);
    var += dt * dt;
  }
  if (var == 0.0) throw InputError("linear_slope: time values are constant");
  return cov / var;
}

int round_to_int(double value) {
  const double r = std::round(value);
  if (!(r >= std::numeric_limits<int>::min() && r <= std::numeric_limits<int>::max())) {
    throw InputError(fmt::format("value {} does not fit an integer feature", value));
  }
  return static_cast<int>(r);
}

double round_to_milli(double value) {
  const double r = std::round(value * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;  // no "-0.000"
}

SegmentFeatures segment_features(const FrameTrack& track, const Segment& segment) {
  std::vector<double> times, rms, voiced_times, f0, centroids;
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double t = track.frame_times[i];
    if (t < segment.start || t > segment.end) continue;
    times.push_back(t);
    rms.push_back(track.rms[i]);
    if (track.f0_hz[i]) {
      voiced_times.push_back(t);
      f0.push_back(*track.f0_hz[i]);
    }
    if (track.centroid_hz[i]) centroids.push_back(*track.centroid_hz[i]);
  }
  if (times.empty()) {
    throw InputError(fmt::format("no analysis frames fall inside segment [{:.3f}, {:.3f}] s ('{}')",
                                 segment.start, segment.end, segment.text()));
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  SegmentFeatures out;
  out.word = segment.text();
  if (!f0.empty()) out.pitch_mean = round_to_int(mean(f0));
  if (f0.size() >= 2) out.pitch_slope = round_to_int(linear_slope(voiced_times, f0));
  out.energy_rms = round_to_milli(mean(rms));
  if (rms.size() >= 2) out.energy_slope = round_to_int(1000.0 * linear_slope(times, rms));
  if (!centroids.empty()) out.spectral_centroid = round_to_int(mean(centroids));
  return out;
}

VocalPlan extract_plan(const FrameTrack& track, std::span<const Segment> segments) {
  VocalPlan plan;
  plan.segments.reserve(segments.size());
  for (const auto& s : segments) plan.segments.push_back(segment_features(track, s));
  return plan;
}

void validate_plan(const VocalPlan& plan) {
  if (plan.segments.empty()) throw SchemaError("vocal plan is empty");
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const auto& s = plan.segments[i];
    if (s.word.empty()) throw SchemaError(fmt::format("segment {}: empty 'word'", i));
    if (s.pitch_mean < 0) throw SchemaError(fmt::format("segment {}: negative pitch_mean {}", i, s.pitch_mean));
    if (!std::isfinite(s.energy_rms) || s.energy_rms < 0.0) {
      throw SchemaError(fmt::format("segment {}: invalid energy_rms {}", i, s.energy_rms));
    }
    if (s.spectral_centroid < 0) {
      throw SchemaError(fmt::format("segment {}: negative spectral_centroid {}", i, s.spectral_centroid));
    }
  }
}

std::string serialize_plan(const VocalPlan& plan) {
  validate_plan(plan);
  std::string out = "[\n";
  for (std::size_t i = 0; i < plan.segments.size(); ++i) {
    const auto& s = plan.segments[i];
    std::string word;
    try {
      word = nlohmann::json(s.word).dump();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(fmt::format("segment {}: 'word' is not valid UTF-8 ({})", i, e.what()));
    }
    out += fmt::format(
        "  {{\n"
        "    \"word\": {},\n"
        "    \"pitch_mean\": {},\n"
        "    \"pitch_slope\": {},\n"
        "    \"energy_rms\": {:.3f},\n"
        "    \"energy_slope\": {},\n"
        "    \"spectral_centroid\": {}\n"
        "  }}{}\n",
        word, s.pitch_mean, s.pitch_slope, round_to_milli(s.energy_rms), s.energy_slope,
        s.spectral_centroid, i + 1 < plan.segments.size() ? "," : "");
  }
  out += "]";
  return out;
}

namespace {

constexpr std::array<const char*, 6> kKeys = {"word",       "pitch_mean",   "pitch_slope",
                                              "energy_rms", "energy_slope", "spectral_centroid"};

int integer_field(const nlohmann::json& obj, const char* key, std::size_t index) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw SchemaError(fmt::format("segment {}: '{}' must be an integer, got {}", index, key, v.dump()));
  }
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
      throw SchemaError(fmt::format("segment {}: '{}' out of range", index, key));
    }
    return static_cast<int>(u);
  }
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    throw SchemaError(fmt::format("segment {}: '{}' out of range", index, key));
  }
  return static_cast<int>(i);
}

}  // namespace

VocalPlan parse_plan(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(fmt::format("vocal plan is not valid JSON: {}", e.what()));
  }
  if (!doc.is_array()) throw SchemaError("vocal plan must be a JSON array");
  if (doc.empty()) throw SchemaError("vocal plan is empty");

  VocalPlan plan;
  plan.segments.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    if (!obj.is_object()) throw SchemaError(fmt::format("segment {} is not an object", i));
    for (const char* key : kKeys) {
      if (!obj.contains(key)) throw SchemaError(fmt::format("segment {}: missing key '{}'", i, key));
    }
    SegmentFeatures s;
    if (!obj["word"].is_string()) throw SchemaError(fmt::format("segment {}: 'word' must be a string", i));
    s.word = obj["word"].get<std::string>();
    s.pitch_mean = integer_field(obj, "pitch_mean", i);
    s.pitch_slope = integer_field(obj, "pitch_slope", i);
    if (!obj["energy_rms"].is_number()) {
      throw SchemaError(fmt::format("segment {}: 'energy_rms' must be a number", i));
    }
    const double energy = obj["energy_rms"].get<double>();
    if (energy < 0.0) throw SchemaError(fmt::format("segment {}: negative energy_rms {}", i, energy));
    s.energy_rms = round_to_milli(energy);
    s.energy_slope = integer_field(obj, "energy_slope", i);
    s.spectral_centroid = integer_field(obj, "spectral_centroid", i);
    plan.segments.push_back(std::move(s));
  }
  validate_plan(plan);
  return plan;
}

}  // namespace vocalplan
