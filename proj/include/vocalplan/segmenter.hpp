// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace vocalplan {

struct WordTimestamp {
  std::string word;
  double start = 0.0;
  double end = 0.0;
  bool operator==(const WordTimestamp&) const = default;
};

struct Segment {
  std::vector<WordTimestamp> words;
  double start = 0.0;  ///< first word start
  double end = 0.0;    ///< last word end

  double duration() const noexcept { return end - start; }
  /// Words joined by single spaces.
  std::string text() const;
  bool operator==(const Segment&) const = default;
};

/// Throws InputError unless every word has start < end and the list is
/// sorted and non-overlapping.
void validate_words(std::span<const WordTimestamp> words);

/// Greedy left-to-right merge. A segment closes as soon as its span exceeds
/// `threshold_s`; a trailing remainder that never exceeds it is folded into
/// the previous segment.
std::vector<Segment> merge_words(std::span<const WordTimestamp> words, double threshold_s = 1.0);

/// One JSON object per line: {"word": ..., "start": ..., "end": ...}.
std::vector<WordTimestamp> read_word_timestamps(std::istream& in);
std::vector<WordTimestamp> read_word_timestamps(const std::filesystem::path& path);

}  // namespace vocalplan
