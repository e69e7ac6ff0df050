// SPDX-License-Identifier: Apache-2.0
//
// Per-segment vocal features and the plan JSON schema:
//
//   [
//     {
//       "word": "segmentation words",
//       "pitch_mean": <int Hz>,
//       "pitch_slope": <int Hz/s>,
//       "energy_rms": <float, 3 decimals>,
//       "energy_slope": <int milli-RMS/s>,
//       "spectral_centroid": <int Hz>
//     }, ...
//   ]
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vocalplan/dsp.hpp"
#include "vocalplan/segmenter.hpp"

namespace vocalplan {

struct SegmentFeatures {
  std::string word;
  int pitch_mean = 0;  ///< 0 marks an unvoiced segment
  int pitch_slope = 0;
  double energy_rms = 0.0;
  int energy_slope = 0;
  int spectral_centroid = 0;
  bool operator==(const SegmentFeatures&) const = default;
};

struct VocalPlan {
  std::vector<SegmentFeatures> segments;
  bool operator==(const VocalPlan&) const = default;
};

struct SpeakerBaseline {
  int pitch_hz = 226;
  double energy_rms = 0.008;
  int spectral_centroid_hz = 1885;
  void validate() const;
};

/// Ordinary least-squares slope of values against times.
double linear_slope(std::span<const double> times, std::span<const double> values);

/// Round half away from zero to an integer.
int round_to_int(double value);
/// Round half away from zero to three decimals.
double round_to_milli(double value);

SegmentFeatures segment_features(const FrameTrack& track, const Segment& segment);

VocalPlan extract_plan(const FrameTrack& track, std::span<const Segment> segments);

/// Throws SchemaError when the plan breaks a schema invariant.
void validate_plan(const VocalPlan& plan);

std::string serialize_plan(const VocalPlan& plan);
VocalPlan parse_plan(std::string_view text);

}  // namespace vocalplan
