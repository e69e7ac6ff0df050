// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "manifest.hpp"
#include "vocalplan/audio_io.hpp"
#include "vocalplan/conductor.hpp"
#include "vocalplan/errors.hpp"
#include "vocalplan/segmenter.hpp"

namespace vocalplan::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return 4;
  if (dynamic_cast<const ProtocolError*>(&e)) return 3;
  if (dynamic_cast<const TransportError*>(&e)) return 2;
  return 1;
}

namespace {

void log(const std::string& message) { fmt::print(stderr, "vocalplan: {}\n", message); }

template <class F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(fmt::format("{} stage failed: {}", name, e.what()));
  }
}

/// Runs body(i) for i in [0, n) across OpenMP threads and rethrows the
/// lowest-index failure once all iterations are done.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<TokenId> plan_tokens(const VocalPlan& plan) { return encode_text(serialize_plan(plan)); }

std::string compact_plan(const VocalPlan& plan) { return nlohmann::json::parse(serialize_plan(plan)).dump(); }

}  // namespace

// --- extract ---------------------------------------------------------------

int run_extract(const GlobalOptions&, const ExtractOptions& o) {
  const AudioBuffer audio = stage("load audio", [&] { return load_wav(o.audio); });
  const auto words = stage("read word timestamps", [&] { return read_word_timestamps(o.words); });
  const FrameTrack track = stage("analyze", [&] { return analyze(audio, o.analysis); });
  const auto segments = stage("segment", [&] { return merge_words(words, o.merge_threshold); });
  const VocalPlan plan = stage("features", [&] { return extract_plan(track, segments); });
  stage("write", [&] {
    emit(o.out, serialize_plan(plan) + "\n");
    return 0;
  });
  log(fmt::format("extract: {} frames, {} segments", track.size(), plan.segments.size()));
  return 0;
}

// --- plan ------------------------------------------------------------------

namespace {

EndpointConfig endpoint_config(const PlanOptions& o) {
  if (o.endpoint.empty()) throw InputError("--endpoint is required unless --dry-run is given");
  EndpointConfig config;
  config.base_url = o.endpoint;
  config.model_name = o.model;
  if (const char* key = std::getenv(kApiKeyEnv)) config.api_key = key;
  config.timeout = std::chrono::milliseconds(std::llround(o.timeout_s * 1000.0));
  config.max_retries = o.max_retries;
  config.backoff_base = std::chrono::milliseconds(std::llround(o.backoff_s * 1000.0));
  config.temperature = o.temperature;
  config.top_p = o.top_p;
  config.validate();
  return config;
}

}  // namespace

int run_plan(const GlobalOptions& g, const PlanOptions& o) {
  o.baseline.validate();
  if (o.batch.empty()) {
    const ConductorRequest request{o.text, o.instruction, o.baseline};
    if (o.dry_run) {
      emit({}, render_prompt(request) + "\n");
      return 0;
    }
    const VocalPlan plan = request_plan(endpoint_config(o), request);
    emit({}, serialize_plan(plan) + "\n");
    return 0;
  }

  const Manifest manifest = read_manifest(o.batch);
  std::vector<ConductorRequest> requests;
  for (const auto& row : manifest.rows) {
    requests.push_back({manifest.text(row, "text"), manifest.text(row, "instruction"), o.baseline});
  }
  std::string out;
  if (o.dry_run) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      out += nlohmann::json{{"index", i}, {"prompt", render_prompt(requests[i])}}.dump() + "\n";
    }
    emit({}, out);
    return 0;
  }
  const auto outcomes = request_plans(endpoint_config(o), requests, static_cast<std::size_t>(g.jobs));
  int status = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (const auto* plan = std::get_if<VocalPlan>(&outcomes[i])) {
      out += fmt::format("{{\"index\":{},\"plan\":{}}}\n", i, compact_plan(*plan));
      continue;
    }
    try {
      std::rethrow_exception(std::get<std::exception_ptr>(outcomes[i]));
    } catch (const std::exception& e) {
      const int code = exit_code_for(e);
      if (status == 0) status = code;
      out += nlohmann::json{{"index", i}, {"error", e.what()}, {"exit_code", code}}.dump() + "\n";
      log(fmt::format("plan: request {} failed: {}", i, e.what()));
    }
  }
  emit({}, out);
  return status;
}

// --- build -----------------------------------------------------------------

int run_build(const GlobalOptions&, const BuildOptions& o) {
  if (o.stage != "pretrain" && o.stage != "sft") {
    throw InputError(fmt::format("--stage must be pretrain or sft, got '{}'", o.stage));
  }
  if (o.chunk_len == 0) throw InputError("--chunk-len must be positive");
  if (o.out.empty()) throw InputError("--out is required");
  const bool sft = o.stage == "sft";
  const Manifest manifest = read_manifest(o.manifest);
  if (manifest.rows.empty()) throw InputError(fmt::format("manifest '{}' has no rows", o.manifest.string()));

  struct Parts {
    std::vector<TokenId> text, plan, speech;
  };
  std::vector<Parts> parts(manifest.rows.size());
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    parts[i].text = encode_text(manifest.text(row, "transcript"));
    parts[i].speech = encode_speech(manifest.codes(row, "speech_tokens"));
    if (sft) {
      const auto plan = manifest.plan(row);
      if (!plan) {
        throw InputError(fmt::format("{}: missing field 'plan' (or 'plan_path'), required for --stage sft",
                                     manifest.where(row)));
      }
      parts[i].plan = plan_tokens(*plan);
    }
  }

  const LossMasking masking = o.mask_prompt ? LossMasking::SpeechOnly : LossMasking::AllPositions;
  std::vector<TokenSequence> sequences(parts.size());
  parallel_for(parts.size(), [&](std::size_t i) {
    try {
      sequences[i] = sft ? assemble_sft_sequence(parts[i].text, parts[i].plan, parts[i].speech, {}, masking)
                         : assemble_pretrain_sequence(parts[i].text, parts[i].speech, {}, masking);
    } catch (const Error& e) {
      throw InputError(fmt::format("{}: {}", manifest.where(manifest.rows[i]), e.what()));
    }
  });

  std::vector<TokenSequence> kept;
  nlohmann::json skipped = nlohmann::json::array();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].size() > o.chunk_len) {
      skipped.push_back({{"line", manifest.rows[i].line}, {"length", sequences[i].size()}});
      log(fmt::format("build: {}: sequence of {} tokens exceeds chunk length {}, skipped",
                      manifest.where(manifest.rows[i]), sequences[i].size(), o.chunk_len));
      continue;
    }
    kept.push_back(std::move(sequences[i]));
  }

  const auto chunks = pack_sequences(kept, o.chunk_len, vocab::kPad);
  {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write '{}'", o.out.string()));
    write_chunks(out, chunks);
    if (!out) throw InputError(fmt::format("write to '{}' failed", o.out.string()));
  }

  std::size_t padding = 0;
  for (const auto& c : chunks) padding += c.padding;
  const std::size_t capacity = chunks.size() * o.chunk_len;
  const nlohmann::json stats = {
      {"stage", o.stage},
      {"sequences", manifest.rows.size()},
      {"packed_sequences", kept.size()},
      {"chunk_len", o.chunk_len},
      {"chunk_count", chunks.size()},
      {"tokens", capacity - padding},
      {"padding", padding},
      {"padding_fraction", capacity == 0 ? 0.0 : static_cast<double>(padding) / static_cast<double>(capacity)},
      {"skip_count", skipped.size()},
      {"skipped", skipped},
  };
  emit({}, stats.dump(2) + "\n");
  return 0;
}

// --- pref ------------------------------------------------------------------

int run_pref(const GlobalOptions&, const PrefOptions& o) {
  o.thresholds.validate();
  if (o.out.empty()) throw InputError("--out is required");
  const Manifest manifest = read_manifest(o.manifest);

  struct Row {
    std::string text;
    std::string hypothesis;
    double duration = 0.0;
    std::vector<TokenId> speech;
    std::optional<VocalPlan> plan;
    SampleQuality quality;
  };
  std::vector<Row> rows(manifest.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& src = manifest.rows[i];
    rows[i].text = manifest.text(src, "text");
    rows[i].hypothesis = manifest.text(src, "hypothesis");
    rows[i].duration = manifest.number(src, "duration");
    rows[i].speech = encode_speech(manifest.codes(src, "speech_tokens"));
    rows[i].plan = manifest.plan(src);
  }
  parallel_for(rows.size(), [&](std::size_t i) {
    try {
      const double wer = compute_wer(rows[i].text, rows[i].hypothesis);
      const double sr = speaking_rate(rows[i].hypothesis, rows[i].duration);
      rows[i].quality = classify_sample(wer, sr, o.thresholds);
    } catch (const Error& e) {
      throw InputError(fmt::format("{}: {}", manifest.where(manifest.rows[i]), e.what()));
    }
  });

  std::vector<RejectedSample> rejected;
  std::vector<ChosenSample> chosen;
  std::size_t unplanned = 0, high_wer = 0, slow = 0, both = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    switch (r.quality.reason) {
      case RejectReason::HighWer: ++high_wer; break;
      case RejectReason::SlowRate: ++slow; break;
      case RejectReason::Both: ++both; break;
      case RejectReason::None: break;
    }
    if (r.quality.verdict == Verdict::Rejected) {
      rejected.push_back({r.text, std::move(r.speech)});
    } else if (r.plan) {
      chosen.push_back({r.text, plan_tokens(*r.plan), std::move(r.speech)});
    } else {
      ++unplanned;
      log(fmt::format("pref: {}: chosen sample has no plan, left out of the chosen pool",
                      manifest.where(manifest.rows[i])));
    }
  }

  const PreferenceBuild build = build_pref_tuples(rejected, chosen);
  {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write '{}'", o.out.string()));
    for (const auto& t : build.tuples) write_pref_tuple(out, t);
    if (!out) throw InputError(fmt::format("write to '{}' failed", o.out.string()));
  }
  const nlohmann::json summary = {
      {"rows", rows.size()},
      {"chosen", chosen.size() + unplanned},
      {"rejected", rejected.size()},
      {"chosen_without_plan", unplanned},
      {"paired", build.tuples.size()},
      {"skipped", build.skipped},
      {"duplicates", build.duplicates},
      {"reasons", {{"high_wer", high_wer}, {"slow_rate", slow}, {"both", both}}},
      {"tau_wer_high", o.thresholds.tau_wer_high},
      {"tau_sr", o.thresholds.tau_sr},
  };
  emit({}, summary.dump(2) + "\n");
  return 0;
}

// --- apo -------------------------------------------------------------------

int run_apo(const GlobalOptions& g, const ApoOptions& o) {
  o.config.validate();
  const auto tuples = read_pref_tuples(o.tuples);
  if (tuples.empty()) throw InputError(fmt::format("'{}' holds no preference tuples", o.tuples.string()));

  TokenId max_token = 1;
  for (const auto& t : tuples) {
    for (const auto* part : {&t.text_tokens, &t.plan, &t.chosen, &t.rejected}) {
      for (TokenId id : *part) max_token = std::max(max_token, id);
    }
  }
  const std::size_t vocab_size = static_cast<std::size_t>(max_token) + 1;

  ToyPolicy ref = ToyPolicy::random(vocab_size, o.context, g.seed, o.init_scale);
  if (o.sft_steps > 0) {
    std::vector<TokenSequence> sft;
    for (const auto& t : tuples) sft.push_back(assemble_sft_sequence(t.text_tokens, t.plan, t.chosen));
    const auto losses = train_nll(ref, sft, o.sft_lr, o.sft_steps);
    log(fmt::format("apo: reference NLL {:.6f} -> {:.6f} over {} steps", losses.front(), losses.back(),
                    o.sft_steps));
  }

  const double initial_margin = preference_margin(ref, tuples);
  const ApoTrainResult result = train_apo(ref, ref, tuples, o.config);
  const double final_margin = preference_margin(result.policy, tuples);

  if (!o.trace.empty()) {
    std::string csv = "step,loss\n";
    for (std::size_t k = 0; k < result.losses.size(); ++k) csv += fmt::format("{},{:.17g}\n", k, result.losses[k]);
    emit(o.trace, csv);
  }
  const nlohmann::json metrics = {
      {"tuples", tuples.size()},
      {"vocab_size", vocab_size},
      {"context_length", o.context},
      {"epochs", o.config.epochs},
      {"beta", o.config.beta},
      {"learning_rate", o.config.learning_rate},
      {"initial_loss", result.losses.front()},
      {"final_loss", result.losses.back()},
      {"initial_margin", initial_margin},
      {"final_margin", final_margin},
      {"margin_delta", final_margin - initial_margin},
  };
  emit({}, metrics.dump(2) + "\n");
  return 0;
}

// --- mcd -------------------------------------------------------------------

namespace {

CepstralTrack load_track(const std::filesystem::path& path, const CepstrumConfig& config) {
  if (path.extension() == ".csv") return read_track_csv(path);
  return mel_cepstrum(load_wav(path), config);
}

}  // namespace

int run_mcd(const GlobalOptions&, const McdOptions& o) {
  o.cepstrum.validate();
  if (o.pairs.empty()) {
    if (o.a.empty() || o.b.empty()) throw InputError("mcd needs two input paths or --pairs");
    const double value = mcd(load_track(o.a, o.cepstrum), load_track(o.b, o.cepstrum));
    emit({}, fmt::format("{:.3f}\n", value));
    return 0;
  }

  const Manifest manifest = read_manifest(o.pairs);
  std::vector<std::filesystem::path> as, bs;
  for (const auto& row : manifest.rows) {
    as.push_back(manifest.resolve(manifest.text(row, "a")));
    bs.push_back(manifest.resolve(manifest.text(row, "b")));
  }
  std::vector<double> values(as.size());
  parallel_for(as.size(), [&](std::size_t i) {
    values[i] = mcd(load_track(as[i], o.cepstrum), load_track(bs[i], o.cepstrum));
  });
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += fmt::format("{{\"a\":{},\"b\":{},\"mcd\":{:.3f}}}\n", nlohmann::json(as[i].string()).dump(),
                       nlohmann::json(bs[i].string()).dump(), values[i]);
  }
  emit({}, out);
  return 0;
}

}  // namespace vocalplan::cli
