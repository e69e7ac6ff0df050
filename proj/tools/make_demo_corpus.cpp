// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "demo_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled synthetic three-utterance corpus"};
  std::string out = "demo_corpus";
  std::uint64_t seed = 7;
  app.add_option("out", out, "Output directory");
  app.add_option("--seed", seed, "Noise seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = vocalplan::demo::write_demo_corpus(out, seed);
    fmt::print("{}\n{}\n", corpus.build_manifest.string(), corpus.pref_manifest.string());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
