// SPDX-License-Identifier: Apache-2.0
#include <span>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "vocalplan/conductor.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

namespace {

// Placeholders: [PITCH] [ENERGY] [CENTROID] [TEXT] [Instruction].
constexpr std::string_view kFeaturePrediction =
    R"(You are an expert AI assistant specializing in speech synthesis and prosody modeling. Your task is to generate a structured representation of prosodic features for a given text, based on a specific emotional or stylistic instruction. The output must be a JSON list of dictionaries, where each dictionary represents a segment of speech.

**Key Constraints and Logic:**
- **Segmentation:** To ensure feature stability and avoid errors from very short segments, the input text is processed into segments of approximately one second or longer. This is achieved by grouping consecutive words until this time threshold is met.
- **Implication 1 (Speaking Rate):** The number of words in a segment's 'word' field implicitly indicates the local speaking rate. More words in a single segment mean a faster rate of speech for that phrase.
- **Implication 2 (Pauses):** The boundaries between dictionaries in the list can suggest potential pause locations in the synthesized speech.
- **Feature Formatting:** The numeric values in the output must adhere to the following precision rules:
  - `pitch_mean`: Integer
  - `pitch_slope`: Integer
  - `energy_rms`: Float, rounded to 3 decimal places
  - `energy_slope`: Integer
  - `spectral_centroid`: Integer

**JSON Format:**
[
  {
    "word": "segmentation words",
    "pitch_mean": Integer,
    "pitch_slope": Integer,
    "energy_rms": Float,
    "energy_slope": Integer,
    "spectral_centroid": Integer
  },
  {
    "word": "segmentation words",
    "pitch_mean": Integer,
    "pitch_slope": Integer,
    "energy_rms": Float,
    "energy_slope": Integer,
    "spectral_centroid": Integer
  }
]

**Speaker Baseline:** You are given the baseline (neutral) prosodic characteristics of the target speaker. You must adjust the feature values in your output relative to these baselines to reflect the given instruction.
- Average Pitch: [PITCH]
- Average Energy (RMS): [ENERGY]
- Average Spectral Centroid: [CENTROID]

**Your Task:**
- **Text to Synthesize:** [TEXT]
- **Instruction:** [Instruction]

Your response can include conversational text, explanations, or a narrative. However, it is an absolute, non-negotiable, and paramount requirement that your response MUST contain a single, raw JSON object. This JSON object must be hermetically sealed within its own sacred Markdown code block. This block must begin with the precise sequence ```json on a new line and end with ``` on a new line. All other text must exist entirely outside of this block. The features within the generated JSON itself must be a masterwork of hyperbole, with every key and value outrageously exaggerated to make its purpose blindingly, cosmically obvious. Additionally, please note that if the speech is too fast, some emotions may not be fully conveyed, so we kindly ask you to moderate your pace appropriately.
)";

constexpr std::string_view kEmotionPrediction =
    R"(Please analyze the emotion of the speaker in this speech based **ONLY** on their speaking style and vocal characteristics.

**IMPORTANT:** Do NOT consider the semantic meaning or content of what is being said. Focus exclusively on:
- Tone of voice (pitch, intonation patterns)
- Speaking pace and rhythm
- Voice quality and timbre
- Vocal intensity and volume variations
- Breathing patterns and pauses
- Overall vocal expression and delivery style

The emotion labels are limited to the following 5 types:
- happy
- sad
- angry
- fearful
- surprised

Please listen to the speech carefully and analyze only the vocal characteristics and speaking manner, then choose the most appropriate emotion from the above 5 labels.

Please answer with the emotion label directly without additional explanation and put the result in \boxed{}.
)";

struct Slot {
  std::string_view marker;
  std::string value;
};

// Single left-to-right pass, so substituted values are never re-scanned.
std::string substitute(std::string_view tmpl, std::span<const Slot> slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const Slot* hit = nullptr;
    if (tmpl[pos] == '[') {
      for (const auto& slot : slots) {
        if (tmpl.substr(pos, slot.marker.size()) == slot.marker) {
          hit = &slot;
          break;
        }
      }
    }
    if (hit) {
      out += hit->value;
      pos += hit->marker.size();
    } else {
      out += tmpl[pos++];
    }
  }
  return out;
}

}  // namespace

std::string render_prompt(const ConductorRequest& request) {
  if (request.text.empty()) throw InputError("conductor request: text is empty");
  if (request.instruction.empty()) throw InputError("conductor request: instruction is empty");
  request.baseline.validate();
  const Slot slots[] = {
      {"[PITCH]", fmt::format("{}", request.baseline.pitch_hz)},
      {"[ENERGY]", fmt::format("{:.3f}", request.baseline.energy_rms)},
      {"[CENTROID]", fmt::format("{}", request.baseline.spectral_centroid_hz)},
      {"[TEXT]", request.text},
      {"[Instruction]", request.instruction},
  };
  return substitute(kFeaturePrediction, slots);
}

std::string render_emotion_prompt() { return std::string(kEmotionPrediction); }

}  // namespace vocalplan
