#pragma once

#include "popsynth/codebook/codebook.h"

#include <cstddef>
#include <memory>
#include <string>

#include <json.hpp>

namespace popsynth {

struct SamplingParams {
    double temperature = 1.0;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    int max_output_tokens = 32768;

    /// Throws ValidationError unless temperature >= 0, 0 < top_p <= 1 and max_output_tokens > 0.
    void validate() const;
};

/// @brief Everything that determines what a generation run asks for.
///
/// The final batch may overshoot target_n; the pipeline truncates.
struct GenerationSpec {
    std::string state_name;
    int year = 2023;
    std::size_t target_n = 0;
    std::size_t batch_size = 75;
    std::shared_ptr<const Codebook> codebook;
    SamplingParams sampling;
    std::string prompt_template;

    /// Checks the fields and the prompt template (see validate_prompt_template).
    void validate() const;
};

/// Shipped zero-shot template; uses {state}, {year}, {n_records} and {variables}.
std::string_view default_prompt_template() noexcept;

/// Canonical JSON form; keys are sorted so equal specs dump to equal text.
nlohmann::json to_json(const GenerationSpec &spec);

/// SHA-256 hex of the canonical JSON form.
std::string spec_digest(const GenerationSpec &spec);

} // namespace popsynth
