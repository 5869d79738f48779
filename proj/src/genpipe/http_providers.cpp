#include "popsynth/genpipe/http_providers.h"
#include "popsynth/core/error.h"

#include <cstdlib>
#include <ctime>

#include <fmt/format.h>
#include <httplib.h>

namespace popsynth {

namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string &url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError(fmt::format("endpoint '{}' must start with http:// or https://", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public HttpTransport {
  public:
    HttpResponse post(const std::string &url, const HttpHeaders &headers, const std::string &body,
                      std::chrono::seconds timeout) override {
        const auto [origin, path] = split_url(url);
        httplib::Client client{origin};
        client.set_connection_timeout(std::chrono::seconds{30});
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers request_headers;
        for (const auto &[key, value] : headers) {
            request_headers.emplace(key, value);
        }
        auto result = client.Post(path, request_headers, body, "application/json");
        if (!result) {
            throw TransportError(fmt::format("POST {}: {}", origin + path, httplib::to_string(result.error())));
        }
        return {result->status, result->body};
    }
};

std::string trim_slash(std::string endpoint) {
    while (!endpoint.empty() && endpoint.back() == '/') {
        endpoint.pop_back();
    }
    return endpoint;
}

nlohmann::json parse_body(const std::string &body, std::string_view what) {
    auto document = nlohmann::json::parse(body, nullptr, false);
    if (document.is_discarded() || !document.is_object()) {
        throw TransportError(fmt::format("{}: response body is not a JSON object", what));
    }
    return document;
}

std::string timestamp_utc() {
    const auto now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

std::string error_detail(const std::string &body) {
    const auto document = nlohmann::json::parse(body, nullptr, false);
    if (!document.is_discarded() && document.is_object() && document.contains("error")) {
        const auto &error = document["error"];
        if (error.is_object() && error.contains("message") && error["message"].is_string()) {
            return error["message"].get<std::string>();
        }
        if (error.is_string()) {
            return error.get<std::string>();
        }
    }
    return body.size() > 200 ? body.substr(0, 200) + "..." : body;
}

} // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

std::string resolve_credentials(const std::string &env_name) {
    const char *value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw ValidationError(fmt::format("provider credentials: environment variable {} is not set", env_name));
    }
    return value;
}

void raise_for_status(const HttpResponse &response) {
    if (response.status >= 200 && response.status < 300) {
        return;
    }
    const auto message = fmt::format("HTTP {}: {}", response.status, error_detail(response.body));
    if (response.status == 401 || response.status == 403) {
        throw AuthenticationError(message);
    }
    if (response.status == 408 || response.status == 429 || response.status >= 500) {
        throw TransportError(message);
    }
    throw ProviderError(message);
}

OpenAiCompatibleProvider::OpenAiCompatibleProvider(HttpProviderSettings settings, std::string api_key,
                                                   std::shared_ptr<HttpTransport> transport)
    : settings_{std::move(settings)}, api_key_{std::move(api_key)}, transport_{std::move(transport)} {
    settings_.endpoint = trim_slash(settings_.endpoint);
}

nlohmann::json OpenAiCompatibleProvider::request_body(const CompletionRequest &request) const {
    return nlohmann::json{
        {"model", settings_.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.sampling.temperature},
        {"top_p", request.sampling.top_p},
        {"frequency_penalty", request.sampling.frequency_penalty},
        {"presence_penalty", request.sampling.presence_penalty},
        {"max_completion_tokens", request.sampling.max_output_tokens},
        {"response_format",
         {{"type", "json_schema"},
          {"json_schema", {{"name", "survey_records"}, {"strict", true}, {"schema", request.schema}}}}}};
}

RawBatch OpenAiCompatibleProvider::parse_response(const std::string &body) {
    const auto document = parse_body(body, "chat completion");
    const auto &choices = document.value("choices", nlohmann::json::array());
    if (!choices.is_array() || choices.empty()) {
        throw TransportError("chat completion: response has no choices");
    }
    const auto &choice = choices.front();
    const auto finish = choice.value("finish_reason", std::string{});
    const auto &message = choice.value("message", nlohmann::json::object());
    if (message.contains("refusal") && message["refusal"].is_string()) {
        throw RefusalError("model refused: " + message["refusal"].get<std::string>());
    }
    if (finish == "content_filter") {
        throw RefusalError("response blocked by the provider's content filter");
    }
    RawBatch raw;
    if (message.contains("content") && message["content"].is_string()) {
        raw.payload = message["content"].get<std::string>();
    }
    raw.provider_meta["finish_reason"] = finish;
    raw.provider_meta["model"] = document.value("model", std::string{});
    if (const auto usage = document.find("usage"); usage != document.end() && usage->is_object()) {
        for (const auto *key : {"prompt_tokens", "completion_tokens", "total_tokens"}) {
            if (usage->contains(key)) {
                raw.provider_meta[key] = (*usage)[key].dump();
            }
        }
    }
    return raw;
}

RawBatch OpenAiCompatibleProvider::complete(const CompletionRequest &request) {
    const HttpHeaders headers{{"Authorization", "Bearer " + api_key_}};
    const auto response = transport_->post(settings_.endpoint + "/chat/completions", headers,
                                           request_body(request).dump(), settings_.timeout);
    raise_for_status(response);
    auto raw = parse_response(response.body);
    raw.provider_meta["timestamp"] = timestamp_utc();
    return raw;
}

GeminiCompatibleProvider::GeminiCompatibleProvider(HttpProviderSettings settings, std::string api_key,
                                                   std::shared_ptr<HttpTransport> transport)
    : settings_{std::move(settings)}, api_key_{std::move(api_key)}, transport_{std::move(transport)} {
    settings_.endpoint = trim_slash(settings_.endpoint);
}

nlohmann::json GeminiCompatibleProvider::gemini_schema(const nlohmann::json &schema) {
    if (schema.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto &[key, value] : schema.items()) {
            if (key != "additionalProperties") {
                out[key] = gemini_schema(value);
            }
        }
        return out;
    }
    if (schema.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto &item : schema) {
            out.push_back(gemini_schema(item));
        }
        return out;
    }
    return schema;
}

nlohmann::json GeminiCompatibleProvider::request_body(const CompletionRequest &request) const {
    return nlohmann::json{
        {"contents", nlohmann::json::array({{{"role", "user"}, {"parts", {{{"text", request.prompt}}}}}})},
        {"generationConfig",
         {{"temperature", request.sampling.temperature},
          {"topP", request.sampling.top_p},
          {"frequencyPenalty", request.sampling.frequency_penalty},
          {"presencePenalty", request.sampling.presence_penalty},
          {"maxOutputTokens", request.sampling.max_output_tokens},
          {"responseMimeType", "application/json"},
          {"responseSchema", gemini_schema(request.schema)}}}};
}

RawBatch GeminiCompatibleProvider::parse_response(const std::string &body) {
    const auto document = parse_body(body, "generateContent");
    if (const auto feedback = document.find("promptFeedback"); feedback != document.end() && feedback->is_object()) {
        if (feedback->contains("blockReason")) {
            throw RefusalError("prompt blocked: " + (*feedback)["blockReason"].dump());
        }
    }
    const auto &candidates = document.value("candidates", nlohmann::json::array());
    if (!candidates.is_array() || candidates.empty()) {
        throw TransportError("generateContent: response has no candidates");
    }
    const auto &candidate = candidates.front();
    const auto finish = candidate.value("finishReason", std::string{});
    if (finish == "SAFETY" || finish == "PROHIBITED_CONTENT" || finish == "BLOCKLIST" || finish == "SPII" ||
        finish == "RECITATION") {
        throw RefusalError("candidate blocked: " + finish);
    }
    RawBatch raw;
    const auto &content = candidate.value("content", nlohmann::json::object());
    for (const auto &part : content.value("parts", nlohmann::json::array())) {
        if (part.contains("text") && part["text"].is_string()) {
            raw.payload += part["text"].get<std::string>();
        }
    }
    raw.provider_meta["finish_reason"] = finish;
    raw.provider_meta["model"] = document.value("modelVersion", std::string{});
    if (const auto usage = document.find("usageMetadata"); usage != document.end() && usage->is_object()) {
        for (const auto *key : {"promptTokenCount", "candidatesTokenCount", "totalTokenCount"}) {
            if (usage->contains(key)) {
                raw.provider_meta[key] = (*usage)[key].dump();
            }
        }
    }
    return raw;
}

RawBatch GeminiCompatibleProvider::complete(const CompletionRequest &request) {
    const HttpHeaders headers{{"x-goog-api-key", api_key_}};
    const auto url = fmt::format("{}/models/{}:generateContent", settings_.endpoint, settings_.model_id);
    const auto response = transport_->post(url, headers, request_body(request).dump(), settings_.timeout);
    raise_for_status(response);
    auto raw = parse_response(response.body);
    raw.provider_meta["timestamp"] = timestamp_utc();
    return raw;
}

} // namespace popsynth
