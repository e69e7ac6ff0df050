// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vocalplan {

using TokenId = std::uint32_t;

/// Desk-scale vocabulary: four specials, 256 byte tokens for text (and
/// verbalized plans), then speech codes from an external tokenizer.
namespace vocab {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kSep = 2;
inline constexpr TokenId kEos = 3;
inline constexpr TokenId kTextBase = 4;
inline constexpr TokenId kSpeechBase = kTextBase + 256;

inline constexpr bool is_special(TokenId t) { return t < kTextBase; }
inline constexpr bool is_text(TokenId t) { return t >= kTextBase && t < kSpeechBase; }
inline constexpr bool is_speech(TokenId t) { return t >= kSpeechBase; }
}  // namespace vocab

std::vector<TokenId> encode_text(std::string_view text);
/// Inverse of encode_text; throws InputError on non-text tokens.
std::string decode_text(std::span<const TokenId> tokens);
std::vector<TokenId> encode_speech(std::span<const std::uint32_t> codes);
std::vector<std::uint32_t> decode_speech(std::span<const TokenId> tokens);

struct TokenSequence {
  std::vector<TokenId> tokens;
  /// loss_mask[i] marks token i as a prediction target.
  std::vector<bool> loss_mask;

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const TokenSequence&) const = default;
};

// --- transcript quality --------------------------------------------------

/// Lowercase, ASCII punctuation removed, whitespace collapsed to single spaces.
std::string normalize_transcript(std::string_view text);
std::vector<std::string> transcript_words(std::string_view text);

/// Word-level Levenshtein distance over the reference word count.
double compute_wer(std::string_view reference, std::string_view hypothesis);

/// Normalized word count per second of audio.
double speaking_rate(std::string_view transcript, double duration_s);

struct Thresholds {
  double tau_wer_high = 0.1;
  double tau_sr = 1.5;  ///< words per second
  void validate() const;
};

enum class Verdict { Chosen, Rejected };
enum class RejectReason { None, HighWer, SlowRate, Both };

struct SampleQuality {
  double wer = 0.0;
  double speaking_rate = 0.0;
  Verdict verdict = Verdict::Chosen;
  RejectReason reason = RejectReason::None;
};

/// Rejected iff wer > tau_wer_high or sr < tau_sr.
SampleQuality classify_sample(double wer, double sr, const Thresholds& thresholds = {});

std::string_view to_string(Verdict v);
std::string_view to_string(RejectReason r);

// --- preference tuples ---------------------------------------------------

struct RejectedSample {
  std::string text;
  std::vector<TokenId> speech;  ///< S_l
};

struct ChosenSample {
  std::string text;
  std::vector<TokenId> plan;    ///< F_v,w tokens
  std::vector<TokenId> speech;  ///< S_w
};

struct PreferenceTuple {
  std::string text;
  std::vector<TokenId> text_tokens;
  std::vector<TokenId> plan;
  std::vector<TokenId> chosen;
  std::vector<TokenId> rejected;

  /// Shared conditioning prefix x ⊕ F_v,w.
  std::vector<TokenId> prefix() const;
  bool operator==(const PreferenceTuple&) const = default;
};

struct PreferenceBuild {
  std::vector<PreferenceTuple> tuples;
  std::size_t skipped = 0;     ///< texts present in only one pool
  std::size_t duplicates = 0;  ///< repeated texts within a pool (first kept)
};

/// Joins the pools on normalized text. Tuples follow the rejected pool order.
PreferenceBuild build_pref_tuples(std::span<const RejectedSample> rejected_pool,
                                  std::span<const ChosenSample> chosen_pool);

void write_pref_tuple(std::ostream& out, const PreferenceTuple& tuple);
std::vector<PreferenceTuple> read_pref_tuples(std::istream& in);
std::vector<PreferenceTuple> read_pref_tuples(const std::filesystem::path& path);

// --- sequence assembly and packing ---------------------------------------

struct Separators {
  TokenId bos = vocab::kBos;
  TokenId sep = vocab::kSep;
  TokenId eos = vocab::kEos;
};

enum class LossMasking {
  AllPositions,  ///< every position with a predecessor is a target
  SpeechOnly,    ///< only speech tokens and EOS are targets
};

/// [BOS, x, SEP, S, EOS]
TokenSequence assemble_pretrain_sequence(std::span<const TokenId> text_tokens,
                                         std::span<const TokenId> speech_tokens,
                                         const Separators& separators = {},
                                         LossMasking masking = LossMasking::AllPositions);

/// [BOS, x, SEP, F_v, SEP, S, EOS]
TokenSequence assemble_sft_sequence(std::span<const TokenId> text_tokens,
                                    std::span<const TokenId> plan_tokens,
                                    std::span<const TokenId> speech_tokens,
                                    const Separators& separators = {},
                                    LossMasking masking = LossMasking::AllPositions);

struct PretrainParts {
  std::vector<TokenId> text;
  std::vector<TokenId> speech;
};
struct SftParts {
  std::vector<TokenId> text;
  std::vector<TokenId> plan;
  std::vector<TokenId> speech;
};

PretrainParts split_pretrain_sequence(const TokenSequence& sequence, const Separators& separators = {});
SftParts split_sft_sequence(const TokenSequence& sequence, const Separators& separators = {});

struct PackedChunk {
  TokenSequence data;                ///< exactly chunk_len long
  std::vector<std::size_t> sources;  ///< input indices, in order
  std::size_t padding = 0;
};

inline constexpr std::size_t kDefaultChunkLength = 4096;

/// In-order first fit: sequences are appended to the open chunk while they
/// fit, never split, and each chunk is padded (mask off) to chunk_len.
/// Throws InputError naming the first sequence longer than chunk_len.
std::vector<PackedChunk> pack_sequences(std::span<const TokenSequence> sequences,
                                        std::size_t chunk_len = kDefaultChunkLength,
                                        TokenId pad_id = vocab::kPad);

/// Each chunk is written as: u32 length L, L x u32 token ids, ceil(L/8)
/// mask bytes (bit i%8 of byte i/8 is position i). All integers little-endian.
void write_chunks(std::ostream& out, std::span<const PackedChunk> chunks);
std::vector<TokenSequence> read_chunks(std::istream& in);

}  // namespace vocalplan
