#pragma once

#include "popsynth/genpipe/generation_spec.h"

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

namespace popsynth {

/// One structured-output request.
struct CompletionRequest {
    std::string prompt;
    nlohmann::json schema;
    SamplingParams sampling;
    std::size_t batch_index = 0;
    std::size_t requested_rows = 0;
};

/// A provider response, kept verbatim even when malformed.
struct RawBatch {
    /// The model's generated text (the JSON document it was asked for).
    std::string payload;
    /// model id, token usage, timestamp and similar.
    std::map<std::string, std::string> provider_meta;
};

/// @brief A chat-completion backend.
///
/// complete() may be called concurrently from several threads. Errors are
/// reported as ProviderError subclasses; only TransportError is retried.
class ProviderClient {
  public:
    virtual ~ProviderClient() = default;

    virtual RawBatch complete(const CompletionRequest &request) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

struct RetryPolicy {
    /// Retries after the first attempt; cap + 1 attempts in total.
    std::size_t max_retries = 5;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30000};
};

using SleepFunction = std::function<void(std::chrono::milliseconds)>;

/// Backoff before retry number @p retry (1-based).
std::chrono::milliseconds backoff_delay(const RetryPolicy &policy, std::size_t retry);

/// @brief Issues one request, retrying transport errors with exponential backoff.
///
/// Every error that escapes carries the request's batch index. An empty
/// @p sleep uses std::this_thread::sleep_for.
RawBatch request_batch(ProviderClient &provider, const CompletionRequest &request, const RetryPolicy &policy,
                       const SleepFunction &sleep = {});

} // namespace popsynth
