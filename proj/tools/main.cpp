// SPDX-License-Identifier: Apache-2.0
#include <exception>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"

using namespace vocalplan;

int main(int argc, char** argv) {
  CLI::App app{"Vocal plan extraction, data pipeline and evaluation tools", "vocalplan"};
  app.set_config("--config", "", "Configuration file (key=value; [subcommand] sections)");
  app.require_subcommand(1);

  cli::GlobalOptions global;
  app.add_option("--jobs", global.jobs, "Parallelism cap (threads and in-flight requests)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", global.seed, "Random seed");

  cli::ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Audio + word timestamps -> vocal plan JSON");
  extract->add_option("audio", ex.audio, "WAV file")->required();
  extract->add_option("words", ex.words, "Word timestamps (JSON lines)")->required();
  extract->add_option("-o,--out", ex.out, "Output file (default stdout)");
  extract->add_option("--frame-ms", ex.analysis.frame_ms);
  extract->add_option("--hop-ms", ex.analysis.hop_ms);
  extract->add_option("--f-min", ex.analysis.f_min);
  extract->add_option("--f-max", ex.analysis.f_max);
  extract->add_option("--voicing-threshold", ex.analysis.voicing_threshold);
  extract->add_option("--threshold", ex.merge_threshold, "Segment merge threshold in seconds");

  cli::PlanOptions pl;
  auto* plan = app.add_subcommand("plan", "Ask the conductor endpoint for a vocal plan");
  plan->add_option("--text", pl.text);
  plan->add_option("--instruction", pl.instruction);
  plan->add_option("--batch", pl.batch, "JSON lines of {text, instruction}");
  plan->add_option("--endpoint", pl.endpoint, "Base URL, e.g. https://host/v1");
  plan->add_option("--model", pl.model);
  plan->add_option("--timeout", pl.timeout_s, "Seconds")->check(CLI::PositiveNumber);
  plan->add_option("--max-retries", pl.max_retries)->check(CLI::NonNegativeNumber);
  plan->add_option("--backoff", pl.backoff_s, "Initial retry delay in seconds")->check(CLI::NonNegativeNumber);
  plan->add_option("--temperature", pl.temperature);
  plan->add_option("--top-p", pl.top_p);
  plan->add_option("--baseline-pitch", pl.baseline.pitch_hz);
  plan->add_option("--baseline-energy", pl.baseline.energy_rms);
  plan->add_option("--baseline-centroid", pl.baseline.spectral_centroid_hz);
  plan->add_flag("--dry-run", pl.dry_run, "Print the rendered prompt only");

  cli::BuildOptions bu;
  auto* build = app.add_subcommand("build", "Assemble and pack training sequences");
  build->add_option("manifest", bu.manifest)->required();
  build->add_option("--stage", bu.stage, "pretrain or sft");
  build->add_option("--chunk-len", bu.chunk_len);
  build->add_option("-o,--out", bu.out, "Packed chunk file")->required();
  build->add_flag("--mask-prompt", bu.mask_prompt, "Only speech tokens are loss targets");

  cli::PrefOptions pr;
  auto* pref = app.add_subcommand("pref", "Rejection sampling into preference tuples");
  pref->add_option("manifest", pr.manifest)->required();
  pref->add_option("-o,--out", pr.out, "Tuples (JSON lines)")->required();
  pref->add_option("--tau-wer", pr.thresholds.tau_wer_high);
  pref->add_option("--tau-sr", pr.thresholds.tau_sr);

  cli::ApoOptions ap;
  auto* apo = app.add_subcommand("apo", "Train the toy policy with APO-down");
  apo->add_option("tuples", ap.tuples)->required();
  apo->add_option("--beta", ap.config.beta);
  apo->add_option("--lr", ap.config.learning_rate);
  apo->add_option("--epochs", ap.config.epochs);
  apo->add_option("--context", ap.context, "Context length of the toy policy");
  apo->add_option("--sft-steps", ap.sft_steps, "NLL steps on chosen sequences for the reference");
  apo->add_option("--sft-lr", ap.sft_lr);
  apo->add_option("--init-scale", ap.init_scale);
  apo->add_option("--trace", ap.trace, "Loss trace CSV");

  cli::McdOptions mc;
  auto* mcd = app.add_subcommand("mcd", "Mel-cepstral distortion between two recordings");
  mcd->add_option("a", mc.a, "WAV or cepstral-track CSV");
  mcd->add_option("b", mc.b, "WAV or cepstral-track CSV");
  mcd->add_option("--pairs", mc.pairs, "JSON lines of {a, b}");
  mcd->add_option("--n-coeffs", mc.cepstrum.n_coeffs);
  mcd->add_option("--n-filters", mc.cepstrum.n_filters);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  omp_set_num_threads(global.jobs);
  const char* name = app.get_subcommands().front()->get_name().c_str();
  try {
    if (extract->parsed()) return cli::run_extract(global, ex);
    if (plan->parsed()) return cli::run_plan(global, pl);
    if (build->parsed()) return cli::run_build(global, bu);
    if (pref->parsed()) return cli::run_pref(global, pr);
    if (apo->parsed()) return cli::run_apo(global, ap);
    if (mcd->parsed()) return cli::run_mcd(global, mc);
  } catch (const std::exception& e) {
    fmt::print(stderr, "vocalplan {}: error: {}\n", name, e.what());
    return cli::exit_code_for(e);
  }
  return 1;
}
