// SPDX-License-Identifier: Apache-2.0
//
// Three short synthetic utterances with word timestamps and the manifests
// the CLI consumes. Used by the end-to-end tests and `make_demo_corpus`.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vocalplan::demo {

struct Utterance {
  std::string id;
  std::string transcript;
  std::filesystem::path wav;
  std::filesystem::path words;
  /// Where `vocalplan extract` is expected to write this utterance's plan.
  std::filesystem::path plan;
};

struct Corpus {
  std::filesystem::path root;
  std::vector<Utterance> utterances;
  std::filesystem::path build_manifest;
  std::filesystem::path pref_manifest;
};

/// Toy speech tokenizer: one code in [0, 32) per 40 ms block. Manifests
/// carry these raw codes under "speech_tokens".
std::vector<std::uint32_t> quantize_speech(const std::vector<double>& samples, int sample_rate);

/// Writes the corpus under `root` (created if needed). Paths inside the
/// manifests are relative to `root`.
Corpus write_demo_corpus(const std::filesystem::path& root, std::uint64_t seed = 7);

}  // namespace vocalplan::demo
