#pragma once

#include "popsynth/genpipe/provider.h"

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace popsynth {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal POST transport; throws TransportError when no response arrives.
///
/// Provider adapters raise errors without a batch index; request_batch attaches it.
class HttpTransport {
  public:
    virtual ~HttpTransport() = default;

    virtual HttpResponse post(const std::string &url, const HttpHeaders &headers, const std::string &body,
                              std::chrono::seconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::unique_ptr<HttpTransport> make_http_transport();

/// Endpoint settings shared by the HTTP adapters.
struct HttpProviderSettings {
    /// Base URL, e.g. https://api.openai.com/v1
    std::string endpoint;
    std::string model_id;
    std::chrono::seconds timeout{600};
};

/// @brief Reads an API key from the environment.
///
/// Throws ValidationError naming the variable when it is unset or empty.
std::string resolve_credentials(const std::string &env_name);

/// Raises the ProviderError subclass matching a non-2xx status.
void raise_for_status(const HttpResponse &response);

/// POST {endpoint}/chat/completions with a strict json_schema response format.
class OpenAiCompatibleProvider : public ProviderClient {
  public:
    OpenAiCompatibleProvider(HttpProviderSettings settings, std::string api_key,
                             std::shared_ptr<HttpTransport> transport);

    RawBatch complete(const CompletionRequest &request) override;
    [[nodiscard]] std::string name() const override { return "openai-compatible:" + settings_.model_id; }

    [[nodiscard]] nlohmann::json request_body(const CompletionRequest &request) const;
    /// Extracts the message content; refusals and content filtering raise RefusalError.
    static RawBatch parse_response(const std::string &body);

  private:
    HttpProviderSettings settings_;
    std::string api_key_;
    std::shared_ptr<HttpTransport> transport_;
};

/// POST {endpoint}/models/{model}:generateContent with responseSchema.
class GeminiCompatibleProvider : public ProviderClient {
  public:
    GeminiCompatibleProvider(HttpProviderSettings settings, std::string api_key,
                             std::shared_ptr<HttpTransport> transport);

    RawBatch complete(const CompletionRequest &request) override;
    [[nodiscard]] std::string name() const override { return "gemini-compatible:" + settings_.model_id; }

    [[nodiscard]] nlohmann::json request_body(const CompletionRequest &request) const;
    /// Concatenates candidate text parts; prompt or candidate safety blocks raise RefusalError.
    static RawBatch parse_response(const std::string &body);

    /// The schema with keywords Gemini rejects (additionalProperties) removed.
    static nlohmann::json gemini_schema(const nlohmann::json &schema);

  private:
    HttpProviderSettings settings_;
    std::string api_key_;
    std::shared_ptr<HttpTransport> transport_;
};

} // namespace popsynth
