// SPDX-License-Identifier: Apache-2.0
//
// Conductor side: render the feature-prediction prompt, send it to a
// chat-completion endpoint, and pull a validated VocalPlan out of the
// single ```json fenced block in the reply.
//
// Failures are split into TransportError (retryable when transient),
// ProtocolError (reply not in the fenced contract) and SchemaError (the
// fenced JSON is not a valid plan).
#pragma once

#include <chrono>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vocalplan/vocal_features.hpp"

namespace vocalplan {

struct ConductorRequest {
  std::string text;         ///< text to synthesize
  std::string instruction;  ///< stylistic instruction
  SpeakerBaseline baseline;
};

struct EndpointConfig {
  /// e.g. "https://api.example.com/v1"; "/chat/completions" is appended.
  std::string base_url;
  std::string model_name;
  std::string api_key;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  /// Delay before retry k (1-based) is backoff_base * 2^(k-1).
  std::chrono::milliseconds backoff_base{500};
  std::optional<double> temperature;
  std::optional<double> top_p;

  void validate() const;
};

/// Environment variable holding the bearer token for the endpoint.
inline constexpr const char* kApiKeyEnv = "VOCALPLAN_API_KEY";

std::string render_prompt(const ConductorRequest& request);

/// Emotion-judging prompt. Rendered only; responses are not interpreted.
std::string render_emotion_prompt();

/// Inner text of the unique block opened by a line "```json" and closed by
/// a line "```". Throws ProtocolError on zero, multiple or unterminated blocks.
std::string extract_plan_block(std::string_view response);

/// One chat-completion round trip; returns the first choice's message text.
/// Throws TransportError or ProtocolError. No retries.
std::string chat_completion(const EndpointConfig& config, const std::string& prompt);

VocalPlan request_plan(const EndpointConfig& config, const ConductorRequest& request);

using PlanOutcome = std::variant<VocalPlan, std::exception_ptr>;

/// Runs request_plan for every request with at most `max_in_flight` calls
/// outstanding. Results are in request order.
std::vector<PlanOutcome> request_plans(const EndpointConfig& config,
                                       std::span<const ConductorRequest> requests,
                                       std::size_t max_in_flight);

}  // namespace vocalplan
