// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/segmenter.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include "json.hpp"

#include "vocalplan/errors.hpp"

namespace vocalplan {

std::string Segment::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w.word;
  }
  return out;
}

void validate_words(std::span<const WordTimestamp> words) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (!std::isfinite(w.start) || !std::isfinite(w.end) || !(w.start < w.end)) {
      throw InputError(fmt::format("word {} ('{}'): start {} must be before end {}", i, w.word,
                                   w.start, w.end));
    }
    if (i > 0 && w.start < words[i - 1].end) {
      throw InputError(fmt::format("word {} ('{}') starts at {} before previous word ends at {}",
                                   i, w.word, w.start, words[i - 1].end));
    }
  }
}

std::vector<Segment> merge_words(std::span<const WordTimestamp> words, double threshold_s) {
  if (words.empty()) throw InputError("merge_words: empty word list");
  if (!(threshold_s > 0.0)) {
    throw InputError(fmt::format("merge_words: threshold must be positive, got {}", threshold_s));
  }
  validate_words(words);

  std::vector<Segment> segments;
  Segment current;
  for (const auto& w : words) {
    if (current.words.empty()) current.start = w.start;
    current.words.push_back(w);
    current.end = w.end;
    if (current.end - current.start > threshold_s) {
      segments.push_back(std::move(current));
      current = Segment{};
    }
  }
  if (!current.words.empty()) {
    if (segments.empty()) {
      segments.push_back(std::move(current));
    } else {
      auto& last = segments.back();
      last.words.insert(last.words.end(), current.words.begin(), current.words.end());
      last.end = current.end;
    }
  }
  return segments;
}

std::vector<WordTimestamp> read_word_timestamps(std::istream& in) {
  std::vector<WordTimestamp> words;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      words.push_back({obj.at("word").get<std::string>(), obj.at("start").get<double>(),
                       obj.at("end").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("word timestamps line {}: {}", line_no, e.what()));
    }
  }
  return words;
}

std::vector<WordTimestamp> read_word_timestamps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open word timestamps '{}'", path.string()));
  try {
    return read_word_timestamps(in);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace vocalplan
