// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/conductor.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

void EndpointConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw InputError(fmt::format("endpoint '{}' must start with http:// or https://", base_url));
  }
  if (timeout.count() <= 0) throw InputError("endpoint timeout must be positive");
  if (max_retries < 0) throw InputError("max_retries must be non-negative");
  if (backoff_base.count() < 0) throw InputError("backoff must be non-negative");
}

std::string extract_plan_block(std::string_view response) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    const std::size_t nl = response.find('\n', pos);
    std::string_view line = response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  std::optional<std::string> block;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i] != "```json") continue;
    std::size_t close = i + 1;
    while (close < lines.size() && lines[close] != "```") ++close;
    if (close == lines.size()) {
      throw ProtocolError(fmt::format("unterminated ```json block opened on line {}", i + 1));
    }
    if (block) throw ProtocolError("response contains more than one ```json block");
    std::string inner;
    for (std::size_t k = i + 1; k < close; ++k) {
      if (k > i + 1) inner += '\n';
      inner += lines[k];
    }
    block = std::move(inner);
    i = close;
  }
  if (!block) throw ProtocolError("response contains no ```json block");
  return *block;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // no trailing slash
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string chat_completion(const EndpointConfig& config, const std::string& prompt) {
  config.validate();
  const auto url = split_url(config.base_url);

  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config.api_key.empty()) client.set_bearer_token_auth(config.api_key);

  nlohmann::json body = {
      {"model", config.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
  };
  if (config.temperature) body["temperature"] = *config.temperature;
  if (config.top_p) body["top_p"] = *config.top_p;

  const auto result = client.Post(url.path + "/chat/completions", body.dump(), "application/json");
  if (!result) {
    throw TransportError(fmt::format("request to {} failed: {}", config.base_url,
                                     httplib::to_string(result.error())),
                         true);
  }
  if (result->status != 200) {
    throw TransportError(fmt::format("endpoint {} answered HTTP {}", config.base_url, result->status),
                         transient_status(result->status));
  }

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(fmt::format("chat-completion reply is not JSON: {}", e.what()));
  }
  const auto* content = [&]() -> const nlohmann::json* {
    if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
      return nullptr;
    }
    const auto& choice = reply["choices"][0];
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
      return nullptr;
    }
    const auto& message = choice["message"];
    if (!message.contains("content") || !message["content"].is_string()) return nullptr;
    return &message["content"];
  }();
  if (!content) throw ProtocolError("chat-completion reply lacks choices[0].message.content");
  return content->get<std::string>();
}

VocalPlan request_plan(const EndpointConfig& config, const ConductorRequest& request) {
  config.validate();
  const std::string prompt = render_prompt(request);
  for (int attempt = 0;; ++attempt) {
    try {
      const std::string reply = chat_completion(config, prompt);
      return parse_plan(extract_plan_block(reply));
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= config.max_retries) {
        throw TransportError(fmt::format("{} (after {} attempt{})", e.what(), attempt + 1,
                                         attempt == 0 ? "" : "s"),
                             e.transient());
      }
      std::this_thread::sleep_for(config.backoff_base * (1LL << std::min(attempt, 20)));
    }
  }
}

std::vector<PlanOutcome> request_plans(const EndpointConfig& config,
                                       std::span<const ConductorRequest> requests,
                                       std::size_t max_in_flight) {
  if (max_in_flight == 0) throw InputError("max_in_flight must be at least 1");
  std::vector<PlanOutcome> results(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i] = request_plan(config, requests[i]);
      } catch (...) {
        results[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(max_in_flight, requests.size());
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  return results;
}

}  // namespace vocalplan
