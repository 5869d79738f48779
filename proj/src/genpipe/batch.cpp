#include "popsynth/genpipe/batch.h"

#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

namespace popsynth {

nlohmann::json record_schema(const Codebook &codebook) {
    nlohmann::json properties = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto &variable : codebook.variables()) {
        properties[variable.name] = {{"type", "integer"}};
        required.push_back(variable.name);
    }
    const nlohmann::json record{{"type", "object"},
                                {"properties", properties},
                                {"required", required},
                                {"additionalProperties", false}};
    return nlohmann::json{{"type", "object"},
                          {"properties", {{"records", {{"type", "array"}, {"items", record}}}}},
                          {"required", {"records"}},
                          {"additionalProperties", false}};
}

namespace {

constexpr std::size_t max_rejection_samples = 5;

/// Position just past the '}' matching the '{' at @p open, or npos when the object is cut off.
std::size_t match_object(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) {
                return i + 1;
            }
        }
    }
    return std::string_view::npos;
}

std::size_t skip_space(std::string_view text, std::size_t i) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\n' || text[i] == '\r' || text[i] == '\t')) {
        ++i;
    }
    return i;
}

/// Rows from a truncated or otherwise malformed payload: the leading run of complete objects.
std::optional<std::vector<nlohmann::json>> salvage_rows(std::string_view text) {
    std::size_t start = std::string_view::npos;
    if (const auto key = text.find("\"records\""); key != std::string_view::npos) {
        start = text.find('[', key);
    } else {
        start = text.find('[');
    }
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    std::vector<nlohmann::json> rows;
    std::size_t i = start + 1;
    while (true) {
        i = skip_space(text, i);
        if (i >= text.size() || text[i] != '{') {
            break;
        }
        const auto end = match_object(text, i);
        if (end == std::string_view::npos) {
            break;
        }
        auto row = nlohmann::json::parse(text.substr(i, end - i), nullptr, false);
        if (row.is_discarded()) {
            break;
        }
        rows.push_back(std::move(row));
        i = skip_space(text, end);
        if (i < text.size() && text[i] == ',') {
            ++i;
            continue;
        }
        break;
    }
    return rows;
}

/// Converts a parsed row to a record, or explains why it cannot be one.
std::optional<SurveyRecord> to_record(const nlohmann::json &row, const Codebook &codebook, std::string &reason) {
    if (!row.is_object()) {
        reason = "row is not an object";
        return std::nullopt;
    }
    SurveyRecord record;
    for (const auto &[key, value] : row.items()) {
        if (!codebook.find(key)) {
            reason = fmt::format("{}: not a codebook variable", key);
            return std::nullopt;
        }
        if (value.is_number_integer()) {
            const auto v = value.get<long long>();
            if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
                reason = fmt::format("{}: code {} out of range", key, value.dump());
                return std::nullopt;
            }
            record.values[key] = static_cast<int>(v);
        } else {
            reason = fmt::format("{}: value {} is not an integer", key, value.dump());
            return std::nullopt;
        }
    }
    return record;
}

} // namespace

BatchOutcome parse_and_validate_batch(const RawBatch &raw, const Codebook &codebook) {
    BatchOutcome outcome;
    std::vector<nlohmann::json> rows;

    const auto document = nlohmann::json::parse(raw.payload, nullptr, false);
    if (!document.is_discarded()) {
        const nlohmann::json *array = nullptr;
        if (document.is_array()) {
            array = &document;
        } else if (document.is_object() && document.contains("records") && document["records"].is_array()) {
            array = &document["records"];
        }
        if (array == nullptr) {
            outcome.dead = true;
            return outcome;
        }
        rows.assign(array->begin(), array->end());
    } else {
        auto salvaged = salvage_rows(raw.payload);
        if (!salvaged) {
            outcome.dead = true;
            return outcome;
        }
        rows = std::move(*salvaged);
        outcome.salvaged = true;
    }
    if (rows.empty()) {
        outcome.dead = true;
        return outcome;
    }

    for (const auto &row : rows) {
        ++outcome.parsed;
        std::string reason;
        auto record = to_record(row, codebook, reason);
        if (record) {
            const auto verdict = validate_record(*record, codebook);
            if (verdict.accepted) {
                outcome.accepted.push_back(std::move(*record));
                continue;
            }
            reason = verdict.reasons.empty() ? "invalid" : verdict.reasons.front();
        }
        ++outcome.rejected;
        if (outcome.rejection_samples.size() < max_rejection_samples) {
            outcome.rejection_samples.push_back(std::move(reason));
        }
    }
    return outcome;
}

} // namespace popsynth
