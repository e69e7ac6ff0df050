// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "vocalplan/apo.hpp"
#include "vocalplan/dataset.hpp"
#include "vocalplan/dsp.hpp"
#include "vocalplan/mcd.hpp"
#include "vocalplan/vocal_features.hpp"

namespace vocalplan::cli {

/// 0 ok, 1 input/IO, 2 transport, 3 protocol, 4 schema.
int exit_code_for(const std::exception& e);

struct GlobalOptions {
  int jobs = 1;
  std::uint64_t seed = 1234;
};

struct ExtractOptions {
  std::filesystem::path audio;
  std::filesystem::path words;
  std::filesystem::path out;
  AnalysisConfig analysis;
  double merge_threshold = 1.0;
};

struct PlanOptions {
  std::string text;
  std::string instruction;
  std::filesystem::path batch;
  std::string endpoint;
  std::string model = "default";
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_s = 0.5;
  std::optional<double> temperature;
  std::optional<double> top_p;
  bool dry_run = false;
  SpeakerBaseline baseline;
};

struct BuildOptions {
  std::filesystem::path manifest;
  std::string stage = "sft";
  std::size_t chunk_len = kDefaultChunkLength;
  std::filesystem::path out;
  bool mask_prompt = false;
};

struct PrefOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  Thresholds thresholds;
};

struct ApoOptions {
  std::filesystem::path tuples;
  ApoConfig config;
  std::size_t context = 1;
  std::size_t sft_steps = 0;
  double sft_lr = 0.5;
  double init_scale = 0.1;
  std::filesystem::path trace;
};

struct McdOptions {
  std::filesystem::path a;
  std::filesystem::path b;
  std::filesystem::path pairs;
  CepstrumConfig cepstrum;
};

int run_extract(const GlobalOptions& g, const ExtractOptions& o);
int run_plan(const GlobalOptions& g, const PlanOptions& o);
int run_build(const GlobalOptions& g, const BuildOptions& o);
int run_pref(const GlobalOptions& g, const PrefOptions& o);
int run_apo(const GlobalOptions& g, const ApoOptions& o);
int run_mcd(const GlobalOptions& g, const McdOptions& o);

}  // namespace vocalplan::cli
