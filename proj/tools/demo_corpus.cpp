// SPDX-License-Identifier: Apache-2.0
#include "demo_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "vocalplan/audio_io.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan::demo {
namespace {

constexpr int kSampleRate = 16000;
constexpr double kSeconds = 2.4;

struct Voice {
  const char* id;
  const char* transcript;
  double f0_start;
  double f0_end;
  double amplitude;
  /// Hypothesis given for the rejected take, and its duration.
  const char* bad_hypothesis;
  double bad_duration;
};

constexpr Voice kVoices[] = {
    {"utt1", "the quick brown fox jumps over", 180.0, 240.0, 0.25, "the quick brown box jumps over", kSeconds},
    {"utt2", "please read the morning news slowly", 220.0, 200.0, 0.15, "please read the morning news slowly", 6.0},
    {"utt3", "a calm voice carries far", 140.0, 160.0, 0.35, "a calm choice carries", kSeconds},
};

std::vector<double> synthesize(const Voice& v, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(kSeconds * kSampleRate);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.002);
  std::vector<double> out(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double f0 = v.f0_start + (v.f0_end - v.f0_start) * t / kSeconds;
    phase += 2.0 * std::numbers::pi * f0 / kSampleRate;
    // Slow loudness contour so energy features are not flat.
    const double envelope = 0.75 + 0.25 * std::sin(2.0 * std::numbers::pi * 0.6 * t);
    double s = 0.0;
    for (int h = 1; h <= 5; ++h) s += std::sin(h * phase) / h;
    out[i] = std::clamp(v.amplitude * envelope * s / 1.5 + noise(rng), -1.0, 1.0);
  }
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << content;
}

}  // namespace

std::vector<std::uint32_t> quantize_speech(const std::vector<double>& samples, int sample_rate) {
  const auto block = static_cast<std::size_t>(sample_rate / 25);
  std::vector<std::uint32_t> codes;
  for (std::size_t start = 0; start + block <= samples.size(); start += block) {
    double energy = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = start; i < start + block; ++i) {
      energy += samples[i] * samples[i];
      if (i > start && (samples[i - 1] < 0.0) != (samples[i] < 0.0)) ++crossings;
    }
    const auto level = static_cast<std::uint32_t>(std::lround(std::sqrt(energy / block) * 40.0));
    codes.push_back((level * 5 + static_cast<std::uint32_t>(crossings)) % 32);
  }
  return codes;
}

Corpus write_demo_corpus(const std::filesystem::path& root, std::uint64_t seed) {
  std::filesystem::create_directories(root / "audio");
  std::filesystem::create_directories(root / "plans");
  Corpus corpus;
  corpus.root = root;
  corpus.build_manifest = root / "build.jsonl";
  corpus.pref_manifest = root / "candidates.jsonl";

  std::string build_rows;
  std::string pref_rows;
  for (std::size_t k = 0; k < std::size(kVoices); ++k) {
    const Voice& v = kVoices[k];
    Utterance u;
    u.id = v.id;
    u.transcript = v.transcript;
    u.wav = root / "audio" / fmt::format("{}.wav", v.id);
    u.words = root / "audio" / fmt::format("{}.words.jsonl", v.id);
    u.plan = root / "plans" / fmt::format("{}.json", v.id);

    const auto samples = synthesize(v, seed + k);
    write_wav(u.wav, AudioBuffer(samples, kSampleRate));

    // Words share the voiced span evenly with short gaps between them.
    const auto words = split_words(v.transcript);
    const double span_start = 0.1, span_end = kSeconds - 0.1;
    const double slot = (span_end - span_start) / static_cast<double>(words.size());
    std::string word_rows;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const double start = span_start + slot * static_cast<double>(w);
      const nlohmann::json row = {{"word", words[w]}, {"start", start}, {"end", start + slot * 0.85}};
      word_rows += row.dump() + "\n";
    }
    write_text(u.words, word_rows);

    const auto codes = quantize_speech(samples, kSampleRate);
    const auto& good = codes;
    std::vector<std::uint32_t> bad(codes.rbegin(), codes.rend());
    for (auto& c : bad) c = (c + 3) % 32;
    const std::string plan_rel = fmt::format("plans/{}.json", v.id);

    build_rows += nlohmann::json{{"id", v.id}, {"transcript", v.transcript}, {"speech_tokens", good},
                                 {"plan_path", plan_rel}}
                      .dump() +
                  "\n";
    pref_rows += nlohmann::json{{"id", fmt::format("{}-base", v.id)},
                                {"text", v.transcript},
                                {"hypothesis", v.bad_hypothesis},
                                {"duration", v.bad_duration},
                                {"speech_tokens", bad}}
                     .dump() +
                 "\n";
    pref_rows += nlohmann::json{{"id", fmt::format("{}-sft", v.id)},
                                {"text", v.transcript},
                                {"hypothesis", v.transcript},
                                {"duration", kSeconds},
                                {"speech_tokens", good},
                                {"plan_path", plan_rel}}
                     .dump() +
                 "\n";
    corpus.utterances.push_back(std::move(u));
  }
  write_text(corpus.build_manifest, build_rows);
  write_text(corpus.pref_manifest, pref_rows);
  return corpus;
}

}  // namespace vocalplan::demo
