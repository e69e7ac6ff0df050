// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "demo_corpus.hpp"
#include "mock_endpoint.hpp"
#include "oracles.hpp"
#include "process.hpp"
#include "signals.hpp"
#include "temp_dir.hpp"
#include "vocalplan/apo.hpp"
#include "vocalplan/conductor.hpp"
#include "vocalplan/dataset.hpp"
#include "vocalplan/dsp.hpp"
#include "vocalplan/mcd.hpp"
#include "vocalplan/segmenter.hpp"
#include "vocalplan/vocal_features.hpp"

using namespace vocalplan;
namespace vt = vocalplan::testing;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects failed checks for one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    if (ok()) return fmt::format("{} checks", count_);
    std::string s = fmt::format("{} of {} checks failed", failed_, count_);
    for (const auto& f : failures_) s += "; " + f;
    return s;
  }
  std::size_t count_ = 0;

 private:
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr int kSr = 16000;

Segment whole(double start, double end) { return Segment{{WordTimestamp{"seg", start, end}}, start, end}; }

// --- 1 ----------------------------------------------------------------------
void dsp_fidelity(Checks& c, std::string& note) {
  const auto t0 = Clock::now();
  const auto tone = analyze(AudioBuffer(vt::sine(1000.0, 0.3, 1.0, kSr), kSr));
  const auto centroid = segment_features(tone, whole(0.0, 1.0)).spectral_centroid;
  c.expect(std::abs(centroid - 1000) <= 20, fmt::format("1 kHz centroid {}", centroid));

  const auto a220 = segment_features(analyze(AudioBuffer(vt::sine(220.0, 0.2, 1.0, kSr), kSr)), whole(0.0, 1.0));
  c.expect(std::abs(a220.pitch_mean - 220) <= 2, fmt::format("220 Hz F0 {}", a220.pitch_mean));
  c.expect(a220.energy_rms == 0.141, fmt::format("energy_rms {:.3f}", a220.energy_rms));

  const auto sweep = segment_features(analyze(AudioBuffer(vt::chirp(200.0, 240.0, 0.3, 1.0, kSr), kSr)),
                                      whole(0.0, 1.0));
  c.expect(std::abs(sweep.pitch_slope - 40) <= 5, fmt::format("chirp slope {}", sweep.pitch_slope));

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, fmt::format("runtime {:.2f} s", elapsed));
  note = fmt::format("centroid {} Hz, F0 {} Hz, slope {} Hz/s, rms {:.3f}, {:.2f} s", centroid, a220.pitch_mean,
                     sweep.pitch_slope, a220.energy_rms, elapsed);
}

// --- 2 ----------------------------------------------------------------------
void spectrum_oracle(Checks& c, std::string& note) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 512)(rng);
    const auto frame = vt::white_noise(n, 1.0, rng());
    const auto fast = magnitude_spectrum(frame);
    const auto slow = vt::direct_dft_magnitude(frame);
    c.expect(fast.size() == slow.size(), "bin count");
    for (std::size_t k = 0; k < std::min(fast.size(), slow.size()); ++k) {
      const double rel = std::abs(fast[k] - slow[k]) / std::max(slow[k], 1e-300);
      worst = std::max(worst, rel);
      c.expect(std::abs(fast[k] - slow[k]) <= 1e-6 * slow[k], fmt::format("frame {} bin {}", trial, k));
    }
  }
  note = fmt::format("100 frames, worst relative error {:.2e}", worst);
}

// --- 3 ----------------------------------------------------------------------
void segmenter(Checks& c, std::string& note) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_real_distribution<double> gap(0.0, 0.6), len(0.02, 1.4), thr(0.1, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<WordTimestamp> words;
    double t = gap(rng);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double start = t, end = start + len(rng);
      words.push_back({"w" + std::to_string(i), start, end});
      t = end + gap(rng);
    }
    const double threshold = thr(rng);
    const auto segs = merge_words(words, threshold);
    std::vector<WordTimestamp> joined;
    for (const auto& s : segs) {
      c.expect(!s.words.empty() && s.start == s.words.front().start && s.end == s.words.back().end, "segment span");
      joined.insert(joined.end(), s.words.begin(), s.words.end());
      if (segs.size() > 1) c.expect(s.duration() > threshold, fmt::format("list {} short segment", trial));
    }
    c.expect(joined == words, fmt::format("list {} partition", trial));
  }
  const std::vector<WordTimestamp> example = {{"w1", 0.0, 0.4}, {"w2", 0.5, 0.8}, {"w3", 0.9, 1.3}, {"w4", 1.4, 2.6}};
  const auto segs = merge_words(example, 1.0);
  c.expect(segs.size() == 2, fmt::format("worked example gave {} segments", segs.size()));
  if (segs.size() == 2) {
    c.expect(segs[0].words.size() == 3 && segs[0].start == 0.0 && segs[0].end == 1.3, "first segment");
    c.expect(segs[1].words.size() == 1 && segs[1].start == 1.4 && segs[1].end == 2.6, "second segment");
  }
  note = fmt::format("1000 random lists, worked example -> {} segments", segs.size());
}

// --- 4 ----------------------------------------------------------------------
VocalPlan random_plan(std::mt19937_64& rng) {
  static const std::vector<std::string> vocab = {"hello", "world", "caf\xc3\xa9", "\"q\"", "a\\b", "tab\tx", "Z"};
  std::uniform_int_distribution<int> nseg(1, 8), nword(1, 4), pick(0, static_cast<int>(vocab.size()) - 1);
  VocalPlan plan;
  for (int i = nseg(rng); i > 0; --i) {
    SegmentFeatures s;
    for (int w = nword(rng); w > 0; --w) s.word += (s.word.empty() ? "" : " ") + vocab[pick(rng)];
    s.pitch_mean = std::uniform_int_distribution<int>(0, 600)(rng);
    s.pitch_slope = std::uniform_int_distribution<int>(-400, 400)(rng);
    s.energy_rms = std::uniform_int_distribution<int>(0, 999)(rng) / 1000.0;
    s.energy_slope = std::uniform_int_distribution<int>(-5000, 5000)(rng);
    s.spectral_centroid = std::uniform_int_distribution<int>(0, 8000)(rng);
    plan.segments.push_back(s);
  }
  return plan;
}

void plan_schema(Checks& c, std::string& note) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const VocalPlan plan = random_plan(rng);
    const std::string text = serialize_plan(plan);
    c.expect(parse_plan(text) == plan, fmt::format("plan {} round trip", trial));
    // energy_rms always carries exactly three decimals.
    std::size_t pos = 0;
    while ((pos = text.find("\"energy_rms\": ", pos)) != std::string::npos) {
      pos += 14;
      const auto end = text.find_first_of(",\n}", pos);
      const std::string value = text.substr(pos, end - pos);
      const auto dot = value.find('.');
      c.expect(dot != std::string::npos && value.size() - dot - 1 == 3, "energy_rms decimals: " + value);
    }
  }
  const std::vector<std::string> texts = {"Hello there", "", "a \"quoted\" line\nsecond", "caf\xc3\xa9"};
  for (const auto& text : texts) {
    if (text.empty()) continue;
    const std::string prompt = render_prompt({text, "speak softly", {}});
    for (const char* baseline : {"226", "0.008", "1885"}) {
      c.expect(prompt.find(baseline) != std::string::npos, fmt::format("prompt lacks {}", baseline));
    }
  }
  note = "1000 plans, baselines 226 / 0.008 / 1885 rendered";
}

// --- 5 ----------------------------------------------------------------------
void conductor_protocol(Checks& c, std::string& note) {
  const std::string body =
      R"([{"word": "hi", "pitch_mean": 230, "pitch_slope": 5, "energy_rms": 0.009, "energy_slope": -2, "spectral_centroid": 1800}])";
  c.expect(extract_plan_block("prose\n```json\n" + body + "\n```\nmore prose") == body, "single fence round trip");
  auto is_protocol = [](const std::string& text) {
    try {
      extract_plan_block(text);
    } catch (const ProtocolError&) {
      return true;
    } catch (...) {
    }
    return false;
  };
  c.expect(is_protocol("no fence " + body), "zero fences");
  c.expect(is_protocol("```json\n" + body + "\n```\n```json\n" + body + "\n```"), "two fences");

  vt::MockEndpoint mock({vt::fail_with(503), vt::fail_with(503), vt::reply_with(vt::fenced(body))});
  EndpointConfig config;
  config.base_url = mock.url();
  config.max_retries = 3;
  config.backoff_base = std::chrono::milliseconds(5);
  const VocalPlan plan = request_plan(config, {"hi", "warmly", {}});
  c.expect(plan.segments.size() == 1 && plan.segments[0].pitch_mean == 230, "plan from mock");
  c.expect(mock.calls() == 3, fmt::format("{} calls", mock.calls()));
  note = fmt::format("2 transient failures then success in {} calls", mock.calls());
}

// --- 6 ----------------------------------------------------------------------
void wer_oracle(Checks& c, std::string& note) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> vocab = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 10000; ++trial) {
    auto words = [&](int lo) {
      std::vector<std::string> w(std::uniform_int_distribution<std::size_t>(lo, 12)(rng));
      for (auto& x : w) x = vocab[rng() % vocab.size()];
      return w;
    };
    const auto ref = words(1), hyp = words(0);
    std::string r, h;
    for (const auto& w : ref) r += (r.empty() ? "" : " ") + w;
    for (const auto& w : hyp) h += (h.empty() ? "" : " ") + w;
    const double expected = static_cast<double>(vt::edit_distance(ref, hyp)) / static_cast<double>(ref.size());
    c.expect(compute_wer(r, h) == expected, fmt::format("'{}' vs '{}'", r, h));
  }
  const double example = compute_wer("the cat sat", "the bat");
  c.expect(example == 2.0 / 3.0, fmt::format("example {}", example));
  note = "10000 pairs, WER(\"the cat sat\", \"the bat\") = 2/3";
}

// --- 7 ----------------------------------------------------------------------
void rejection_rules(Checks& c, std::string& note) {
  const Thresholds tau;
  c.expect(tau.tau_wer_high == 0.1 && tau.tau_sr == 1.5, "default thresholds");
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double wer = i / 100.0, sr = 3.0 * j / 20.0;
      const auto q = classify_sample(wer, sr, tau);
      const bool rejected = wer > tau.tau_wer_high || sr < tau.tau_sr;
      c.expect((q.verdict == Verdict::Rejected) == rejected, fmt::format("({}, {})", wer, sr));
      c.expect((q.verdict == Verdict::Chosen) == !rejected, fmt::format("({}, {}) complement", wer, sr));
    }
  }
  c.expect(classify_sample(0.1, 1.5, tau).verdict == Verdict::Chosen, "boundary (0.1, 1.5)");
  note = "21x21 grid, (0.1, 1.5) chosen";
}

// --- 8 ----------------------------------------------------------------------
TokenSequence filled(std::size_t n, TokenId first) {
  TokenSequence s;
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens.push_back(first + static_cast<TokenId>(i % 97));
    s.loss_mask.push_back(i > 0);
  }
  return s;
}

void packing(Checks& c, std::string& note) {
  std::mt19937_64 rng(8);
  for (int corpus = 0; corpus < 500; ++corpus) {
    std::vector<TokenSequence> seqs;
    const std::size_t count = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    std::size_t total = 0;
    for (std::size_t i = 0; i < count; ++i) {
      seqs.push_back(filled(std::uniform_int_distribution<std::size_t>(1, kDefaultChunkLength)(rng), 4 + static_cast<TokenId>(i)));
      total += seqs.back().size();
    }
    const auto chunks = pack_sequences(seqs);
    std::size_t next = 0, packed = 0;
    for (const auto& chunk : chunks) {
      c.expect(chunk.data.size() == 4096, "chunk length");
      std::size_t offset = 0;
      for (std::size_t src : chunk.sources) {
        c.expect(src == next++, "source order");
        const auto& s = seqs[src];
        c.expect(std::equal(s.tokens.begin(), s.tokens.end(),
                            chunk.data.tokens.begin() + static_cast<std::ptrdiff_t>(offset)),
                 "sequence kept whole");
        offset += s.size();
      }
      packed += offset;
      c.expect(chunk.padding == chunk.data.size() - offset, "padding count");
    }
    c.expect(next == seqs.size() && packed == total, fmt::format("corpus {} conservation", corpus));
  }
  std::vector<TokenSequence> example;
  for (std::size_t n : {2048u, 2048u, 4096u, 1000u}) example.push_back(filled(n, 4));
  const auto chunks = pack_sequences(example);
  c.expect(chunks.size() == 3, fmt::format("worked example gave {} chunks", chunks.size()));
  note = fmt::format("500 corpora, worked example -> {} chunks", chunks.size());
}

// --- 9 ----------------------------------------------------------------------
std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t vocab, std::size_t lo, std::size_t hi) {
  std::vector<TokenId> out(std::uniform_int_distribution<std::size_t>(lo, hi)(rng));
  for (auto& t : out) t = static_cast<TokenId>(rng() % vocab);
  return out;
}

PreferenceTuple random_tuple(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
  return PreferenceTuple{"toy", random_tokens(rng, vocab, 1, 2), random_tokens(rng, vocab, 1, 2),
                         random_tokens(rng, vocab, 1, max_len), random_tokens(rng, vocab, 1, max_len)};
}

void apo(Checks& c, std::string& note) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 125; ++trial) {
    // The last 25 batches use huge logits. There both sigmoids saturate and
    // the nearest double to the loss can be exactly +-1, so only the closed
    // interval is checked.
    const bool extreme = trial >= 100;
    const std::size_t v = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
    const double scale = extreme ? 30.0 : 1.0;
    const ToyPolicy theta = ToyPolicy::random(v, 1, rng(), scale), ref = ToyPolicy::random(v, 1, rng(), scale);
    std::vector<PreferenceTuple> batch;
    for (int j = std::uniform_int_distribution<int>(1, 8)(rng); j > 0; --j) batch.push_back(random_tuple(rng, v, 6));
    const double beta = std::uniform_real_distribution<double>(0.01, 5.0)(rng);
    const double loss = apo_down_loss(theta, ref, batch, beta);
    if (extreme) {
      c.expect(std::isfinite(loss) && loss >= -1.0 && loss <= 1.0, fmt::format("saturated loss {}", loss));
    } else {
      c.expect(loss > -1.0 && loss < 1.0, fmt::format("loss {} out of bounds", loss));
    }
    c.expect(apo_down_loss(ref, ref, batch, beta) == 0.0, "nonzero loss at the reference");
  }

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = std::uniform_int_distribution<std::size_t>(3, 5)(rng);
    const ToyPolicy ref = ToyPolicy::random(v, 1, rng(), 1.0);
    const ToyPolicy theta = trial % 5 == 0 ? ref : ToyPolicy::random(v, 1, rng(), 1.0);
    std::vector<PreferenceTuple> batch;
    for (int j = std::uniform_int_distribution<int>(1, 3)(rng); j > 0; --j) batch.push_back(random_tuple(rng, v, 6));
    const double beta = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
    const auto grad = apo_down_grad(theta, ref, batch, beta);
    const auto fd = vt::central_difference(
        [&](const std::vector<double>& x) {
          ToyPolicy q = theta;
          q.parameters() = x;
          return apo_down_loss(q, ref, batch, beta);
        },
        theta.parameters(), 1e-5);
    for (std::size_t k = 0; k < grad.size(); ++k) worst = std::max(worst, std::abs(grad[k] - fd[k]));
  }
  c.expect(worst < 1e-6, fmt::format("gradient error {:.2e}", worst));

  // Uniform reference over 4 tokens; theta's SEP row puts the rewards at
  // r_w = 0.2 and r_l = -0.1 with beta 1.
  const ToyPolicy uniform(4, 1);
  ToyPolicy theta(4, 1);
  const double p3 = 0.25 * std::exp(0.2), p0 = 0.25 * std::exp(-0.1), rest = (1.0 - p3 - p0) / 2.0;
  const std::vector<double> probs = {p0, rest, rest, p3};
  for (std::size_t k = 0; k < 4; ++k) theta.logits(vocab::kSep)[k] = std::log(probs[k]);
  const std::vector<PreferenceTuple> one = {PreferenceTuple{"x", {}, {}, {3}, {0}}};
  const double closed = apo_down_loss(theta, uniform, one, 1.0);
  c.expect(std::abs(closed - (-0.024609)) <= 1e-6, fmt::format("closed form {:.7f}", closed));

  std::mt19937_64 suite_rng(2024);
  std::vector<PreferenceTuple> suite;
  for (int j = 0; j < 6; ++j) {
    auto t = random_tuple(suite_rng, 8, 5);
    while (t.rejected == t.chosen) t.rejected = random_tokens(suite_rng, 8, 1, 5);
    suite.push_back(t);
  }
  const ToyPolicy start = ToyPolicy::random(8, 1, 77, 0.5);
  const auto trained = train_apo(start, start, suite, {0.1, 0.5, 25});
  const double before = preference_margin(start, suite), after = preference_margin(trained.policy, suite);
  c.expect(after > before, fmt::format("margin {} -> {}", before, after));
  note = fmt::format("grad error {:.1e}, closed form {:.6f}, margin {:+.3f}", worst, closed, after - before);
}

// --- 10 ---------------------------------------------------------------------
CepstralTrack random_track(std::mt19937_64& rng, std::size_t frames, std::size_t dim) {
  CepstralTrack t;
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < frames; ++i) {
    std::vector<double> f(dim);
    for (auto& x : f) x = normal(rng);
    t.frames.push_back(f);
    t.frame_times.push_back(0.01 * static_cast<double>(i));
  }
  return t;
}

void mcd_checks(Checks& c, std::string& note) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_track(rng, 1 + rng() % 30, 13), b = random_track(rng, 1 + rng() % 30, 13);
    c.expect(mcd(a, a) == 0.0, "self distance");
    c.expect(std::abs(mcd(a, b) - mcd(b, a)) <= 1e-12 * std::max(1.0, mcd(a, b)), "symmetry");
  }
  CepstralTrack base, shifted;
  for (int i = 0; i < 50; ++i) {
    base.frames.push_back({0.3, -1.2, 2.0});
    shifted.frames.push_back({0.3, -0.2, 2.0});
    base.frame_times.push_back(0.01 * i);
    shifted.frame_times.push_back(0.01 * i);
  }
  const double offset = mcd(base, shifted);
  c.expect(std::abs(offset - 6.142) <= 1e-3, fmt::format("offset fixture {:.4f}", offset));
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % (trial < 5 ? 10 : 7), m = 1 + rng() % (trial < 5 ? 8 : 7);
    const auto a = random_track(rng, n, 2), b = random_track(rng, m, 2);
    const auto brute = vt::brute_force_alignment(a.frames, b.frames);
    const auto dp = dtw_align(a, b);
    c.expect(std::abs(dp.total_cost - brute.cost) <= 1e-12 * std::max(1.0, brute.cost), "DTW cost");
    c.expect(dp.path.size() == brute.length, "DTW path length");
  }
  note = fmt::format("offset fixture {:.3f} dB", offset);
}

// --- 11 ---------------------------------------------------------------------
std::string pipeline(const std::filesystem::path& root, Checks& c) {
  const auto corpus = demo::write_demo_corpus(root);
  auto run = [&](const std::vector<std::string>& args) {
    const auto r = vt::run_program(VOCALPLAN_CLI_PATH, args);
    c.expect(r.exit_code == 0, fmt::format("{} exited {}: {}", args.front(), r.exit_code, r.err));
    return r.out;
  };
  std::string bytes;
  for (const auto& u : corpus.utterances) {
    run({"--seed", "1234", "extract", u.wav.string(), u.words.string(), "-o", u.plan.string()});
    bytes += vt::slurp(u.plan);
  }
  bytes += run({"--seed", "1234", "build", corpus.build_manifest.string(), "--stage", "sft", "-o",
                (root / "chunks.bin").string()});
  bytes += vt::slurp(root / "chunks.bin");
  bytes += run({"--seed", "1234", "pref", corpus.pref_manifest.string(), "-o", (root / "tuples.jsonl").string()});
  bytes += vt::slurp(root / "tuples.jsonl");
  bytes += run({"--seed", "1234", "apo", (root / "tuples.jsonl").string(), "--epochs", "50", "--trace",
                (root / "trace.csv").string()});
  bytes += vt::slurp(root / "trace.csv");
  return bytes;
}

void end_to_end(Checks& c, std::string& note) {
  const auto t0 = Clock::now();
  vt::TempDir first, second;
  const std::string a = pipeline(first.path(), c);
  const std::string b = pipeline(second.path(), c);
  const double elapsed = seconds_since(t0);
  c.expect(!a.empty() && a == b, "outputs differ between runs");
  c.expect(a.find("\"paired\": 3") != std::string::npos, "expected 3 preference tuples");
  c.expect(elapsed < 60.0, fmt::format("runtime {:.1f} s", elapsed));
  note = fmt::format("{} bytes identical across two runs, {:.2f} s", a.size(), elapsed);
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<void(Checks&, std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "DSP fidelity", dsp_fidelity},
      {"AC2", "magnitude spectrum vs direct DFT", spectrum_oracle},
      {"AC3", "segmenter partition and threshold", segmenter},
      {"AC4", "plan schema round trip and prompt baselines", plan_schema},
      {"AC5", "conductor protocol", conductor_protocol},
      {"AC6", "WER vs edit-distance oracle", wer_oracle},
      {"AC7", "rejection rules", rejection_rules},
      {"AC8", "sequence packing", packing},
      {"AC9", "APO-down loss and gradient", apo},
      {"AC10", "mel-cepstral distortion", mcd_checks},
      {"AC11", "end-to-end CLI determinism", end_to_end},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Checks checks;
    std::string note;
    try {
      criterion.run(checks, note);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = checks.ok();
    if (!ok) ++failed;
    std::printf("%s %s: %s (%s)\n", ok ? "PASS" : "FAIL", criterion.id, criterion.title,
                ok ? note.c_str() : checks.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
