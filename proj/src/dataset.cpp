// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

std::vector<TokenId> encode_text(std::string_view text) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(vocab::kTextBase + c);
  return out;
}

std::string decode_text(std::span<const TokenId> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab::is_text(tokens[i])) {
      throw InputError(fmt::format("token {} at position {} is not a text token", tokens[i], i));
    }
    out.push_back(static_cast<char>(tokens[i] - vocab::kTextBase));
  }
  return out;
}

std::vector<TokenId> encode_speech(std::span<const std::uint32_t> codes) {
  std::vector<TokenId> out;
  out.reserve(codes.size());
  for (auto c : codes) {
    if (c > UINT32_MAX - vocab::kSpeechBase) throw InputError(fmt::format("speech code {} too large", c));
    out.push_back(vocab::kSpeechBase + c);
  }
  return out;
}

std::vector<std::uint32_t> decode_speech(std::span<const TokenId> tokens) {
  std::vector<std::uint32_t> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab::is_speech(tokens[i])) {
      throw InputError(fmt::format("token {} at position {} is not a speech token", tokens[i], i));
    }
    out.push_back(tokens[i] - vocab::kSpeechBase);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string normalize_transcript(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && std::ispunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  return out;
}

std::vector<std::string> transcript_words(std::string_view text) {
  const std::string norm = normalize_transcript(text);
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < norm.size()) {
    const auto space = norm.find(' ', pos);
    const auto end = space == std::string::npos ? norm.size() : space;
    words.emplace_back(norm.substr(pos, end - pos));
    pos = end + 1;
  }
  return words;
}

double compute_wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = transcript_words(reference);
  const auto hyp = transcript_words(hypothesis);
  if (ref.empty()) throw InputError("compute_wer: reference is empty after normalization");

  // Single-row Levenshtein over words.
  std::vector<std::size_t> row(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return static_cast<double>(row[hyp.size()]) / static_cast<double>(ref.size());
}

double speaking_rate(std::string_view transcript, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw InputError(fmt::format("speaking_rate: duration must be positive, got {}", duration_s));
  }
  return static_cast<double>(transcript_words(transcript).size()) / duration_s;
}

void Thresholds::validate() const {
  if (!(tau_wer_high > 0.0) || !(tau_sr > 0.0)) {
    throw InputError(fmt::format("thresholds must be positive (tau_wer_high {}, tau_sr {})",
                                 tau_wer_high, tau_sr));
  }
}

SampleQuality classify_sample(double wer, double sr, const Thresholds& thresholds) {
  const bool high_wer = wer > thresholds.tau_wer_high;
  const bool slow = sr < thresholds.tau_sr;
  SampleQuality q;
  q.wer = wer;
  q.speaking_rate = sr;
  q.verdict = high_wer || slow ? Verdict::Rejected : Verdict::Chosen;
  if (high_wer && slow) {
    q.reason = RejectReason::Both;
  } else if (high_wer) {
    q.reason = RejectReason::HighWer;
  } else if (slow) {
    q.reason = RejectReason::SlowRate;
  }
  return q;
}

std::string_view to_string(Verdict v) { return v == Verdict::Chosen ? "chosen" : "rejected"; }

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::HighWer: return "high_wer";
    case RejectReason::SlowRate: return "slow_rate";
    case RejectReason::Both: return "both";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

std::vector<TokenId> PreferenceTuple::prefix() const {
  std::vector<TokenId> out;
  out.reserve(text_tokens.size() + plan.size() + 3);
  out.push_back(vocab::kBos);
  out.insert(out.end(), text_tokens.begin(), text_tokens.end());
  out.push_back(vocab::kSep);
  out.insert(out.end(), plan.begin(), plan.end());
  out.push_back(vocab::kSep);
  return out;
}

PreferenceBuild build_pref_tuples(std::span<const RejectedSample> rejected_pool,
                                  std::span<const ChosenSample> chosen_pool) {
  PreferenceBuild result;
  std::unordered_map<std::string, const ChosenSample*> chosen;
  for (const auto& c : chosen_pool) {
    if (!chosen.emplace(normalize_transcript(c.text), &c).second) ++result.duplicates;
  }
  std::unordered_set<std::string> rejected_keys;
  std::unordered_set<std::string> matched;
  for (const auto& r : rejected_pool) {
    auto key = normalize_transcript(r.text);
    if (!rejected_keys.insert(key).second) {
      ++result.duplicates;
      continue;
    }
    const auto it = chosen.find(key);
    if (it == chosen.end()) {
      ++result.skipped;
      continue;
    }
    const ChosenSample& c = *it->second;
    result.tuples.push_back({r.text, encode_text(r.text), c.plan, c.speech, r.speech});
    matched.insert(std::move(key));
  }
  result.skipped += chosen.size() - matched.size();
  return result;
}

namespace {

nlohmann::json tokens_json(const std::vector<TokenId>& t) { return nlohmann::json(t); }

std::vector<TokenId> tokens_from(const nlohmann::json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw InputError(fmt::format("'{}' must be an array of token ids", key));
  std::vector<TokenId> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_unsigned() || e.get<std::uint64_t>() > UINT32_MAX) {
      throw InputError(fmt::format("'{}' holds a non-token value {}", key, e.dump()));
    }
    out.push_back(static_cast<TokenId>(e.get<std::uint64_t>()));
  }
  return out;
}

}  // namespace

void write_pref_tuple(std::ostream& out, const PreferenceTuple& tuple) {
  const nlohmann::json obj = {
      {"text", tuple.text},
      {"text_tokens", tokens_json(tuple.text_tokens)},
      {"plan", tokens_json(tuple.plan)},
      {"chosen", tokens_json(tuple.chosen)},
      {"rejected", tokens_json(tuple.rejected)},
  };
  out << obj.dump() << '\n';
}

std::vector<PreferenceTuple> read_pref_tuples(std::istream& in) {
  std::vector<PreferenceTuple> tuples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      PreferenceTuple t;
      t.text = obj.value("text", std::string{});
      t.text_tokens = tokens_from(obj, "text_tokens");
      t.plan = tokens_from(obj, "plan");
      t.chosen = tokens_from(obj, "chosen");
      t.rejected = tokens_from(obj, "rejected");
      if (t.text_tokens.empty() || t.plan.empty() || t.chosen.empty() || t.rejected.empty()) {
        throw InputError("all four token sequences must be non-empty");
      }
      tuples.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("preference tuples line {}: {}", line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("preference tuples line {}: {}", line_no, e.what()));
    }
  }
  return tuples;
}

std::vector<PreferenceTuple> read_pref_tuples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open preference file '{}'", path.string()));
  return read_pref_tuples(in);
}

// ---------------------------------------------------------------------------

namespace {

void require_content(std::span<const TokenId> part, const char* name, const Separators& s) {
  if (part.empty()) throw InputError(fmt::format("{} tokens are empty", name));
  for (std::size_t i = 0; i < part.size(); ++i) {
    const TokenId t = part[i];
    if (t == s.bos || t == s.sep || t == s.eos) {
      throw InputError(fmt::format("{} token {} at position {} collides with a separator", name, t, i));
    }
  }
}

TokenSequence join_parts(std::initializer_list<std::span<const TokenId>> parts, const Separators& s,
                         LossMasking masking) {
  TokenSequence seq;
  seq.tokens.push_back(s.bos);
  std::size_t index = 0;
  for (const auto& part : parts) {
    if (index++ > 0) seq.tokens.push_back(s.sep);
    seq.tokens.insert(seq.tokens.end(), part.begin(), part.end());
  }
  seq.tokens.push_back(s.eos);

  seq.loss_mask.assign(seq.tokens.size(), true);
  seq.loss_mask[0] = false;
  if (masking == LossMasking::SpeechOnly) {
    const std::size_t speech_start = seq.tokens.size() - 1 - std::data(parts)[parts.size() - 1].size();
    for (std::size_t i = 0; i < speech_start; ++i) seq.loss_mask[i] = false;
  }
  return seq;
}

std::vector<std::size_t> separator_positions(const TokenSequence& seq, const Separators& s,
                                             std::size_t expected) {
  if (seq.tokens.size() < 2 || seq.tokens.front() != s.bos || seq.tokens.back() != s.eos) {
    throw InputError("sequence is not framed by BOS ... EOS");
  }
  std::vector<std::size_t> seps;
  for (std::size_t i = 1; i + 1 < seq.tokens.size(); ++i) {
    if (seq.tokens[i] == s.sep) seps.push_back(i);
  }
  if (seps.size() != expected) {
    throw InputError(fmt::format("expected {} separators, found {}", expected, seps.size()));
  }
  return seps;
}

}  // namespace

TokenSequence assemble_pretrain_sequence(std::span<const TokenId> text_tokens,
                                         std::span<const TokenId> speech_tokens,
                                         const Separators& separators, LossMasking masking) {
  require_content(text_tokens, "text", separators);
  require_content(speech_tokens, "speech", separators);
  return join_parts({text_tokens, speech_tokens}, separators, masking);
}

TokenSequence assemble_sft_sequence(std::span<const TokenId> text_tokens,
                                    std::span<const TokenId> plan_tokens,
                                    std::span<const TokenId> speech_tokens,
                                    const Separators& separators, LossMasking masking) {
  require_content(text_tokens, "text", separators);
  require_content(plan_tokens, "plan", separators);
  require_content(speech_tokens, "speech", separators);
  return join_parts({text_tokens, plan_tokens, speech_tokens}, separators, masking);
}

PretrainParts split_pretrain_sequence(const TokenSequence& sequence, const Separators& separators) {
  const auto seps = separator_positions(sequence, separators, 1);
  const auto& t = sequence.tokens;
  return {{t.begin() + 1, t.begin() + static_cast<std::ptrdiff_t>(seps[0])},
          {t.begin() + static_cast<std::ptrdiff_t>(seps[0]) + 1, t.end() - 1}};
}

SftParts split_sft_sequence(const TokenSequence& sequence, const Separators& separators) {
  const auto seps = separator_positions(sequence, separators, 2);
  const auto& t = sequence.tokens;
  const auto a = static_cast<std::ptrdiff_t>(seps[0]);
  const auto b = static_cast<std::ptrdiff_t>(seps[1]);
  return {{t.begin() + 1, t.begin() + a}, {t.begin() + a + 1, t.begin() + b}, {t.begin() + b + 1, t.end() - 1}};
}

std::vector<PackedChunk> pack_sequences(std::span<const TokenSequence> sequences,
                                        std::size_t chunk_len, TokenId pad_id) {
  if (chunk_len == 0) throw InputError("pack_sequences: chunk length must be positive");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].tokens.size() != sequences[i].loss_mask.size()) {
      throw InputError(fmt::format("sequence {}: token and mask lengths differ", i));
    }
    if (sequences[i].size() > chunk_len) {
      throw InputError(fmt::format("sequence {} has length {} > chunk length {}", i,
                                   sequences[i].size(), chunk_len));
    }
  }

  std::vector<PackedChunk> chunks;
  auto seal = [&](PackedChunk& chunk) {
    chunk.padding = chunk_len - chunk.data.size();
    chunk.data.tokens.resize(chunk_len, pad_id);
    chunk.data.loss_mask.resize(chunk_len, false);
    chunks.push_back(std::move(chunk));
    chunk = PackedChunk{};
  };

  PackedChunk open;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    if (!open.sources.empty() && open.data.size() + seq.size() > chunk_len) seal(open);
    open.data.tokens.insert(open.data.tokens.end(), seq.tokens.begin(), seq.tokens.end());
    open.data.loss_mask.insert(open.data.loss_mask.end(), seq.loss_mask.begin(), seq.loss_mask.end());
    open.sources.push_back(i);
  }
  if (!open.sources.empty()) seal(open);
  return chunks;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    if (in.gcount() != 0) throw InputError("truncated chunk file (length prefix)");
    return false;
  }
  v = bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

}  // namespace

void write_chunks(std::ostream& out, std::span<const PackedChunk> chunks) {
  for (const auto& chunk : chunks) {
    const auto& seq = chunk.data;
    put_u32(out, static_cast<std::uint32_t>(seq.size()));
    for (TokenId t : seq.tokens) put_u32(out, t);
    std::vector<char> bitmap((seq.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq.loss_mask[i]) bitmap[i / 8] = static_cast<char>(bitmap[i / 8] | (1 << (i % 8)));
    }
    out.write(bitmap.data(), static_cast<std::streamsize>(bitmap.size()));
  }
}

std::vector<TokenSequence> read_chunks(std::istream& in) {
  std::vector<TokenSequence> out;
  std::uint32_t len = 0;
  while (get_u32(in, len)) {
    TokenSequence seq;
    seq.tokens.resize(len);
    for (auto& t : seq.tokens) {
      if (!get_u32(in, t)) throw InputError("truncated chunk file (tokens)");
    }
    std::vector<char> bitmap((len + 7) / 8);
    if (!in.read(bitmap.data(), static_cast<std::streamsize>(bitmap.size()))) {
      throw InputError("truncated chunk file (mask)");
    }
    seq.loss_mask.resize(len);
    for (std::size_t i = 0; i < len; ++i) seq.loss_mask[i] = (bitmap[i / 8] >> (i % 8)) & 1;
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace vocalplan
