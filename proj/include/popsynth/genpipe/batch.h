#pragma once

#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/genpipe/provider.h"

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace popsynth {

/// @brief Structured-output schema for a batch.
///
/// An object with a "records" array; each item is an object whose keys are
/// exactly the codebook variables, each an integer.
nlohmann::json record_schema(const Codebook &codebook);

struct BatchOutcome {
    std::vector<SurveyRecord> accepted;
    std::size_t rejected = 0;
    /// Rows recovered from the payload; accepted + rejected.
    std::size_t parsed = 0;
    /// No record array could be recovered.
    bool dead = false;
    /// The payload was not valid JSON and a leading prefix of rows was kept.
    bool salvaged = false;
    /// Reasons for the first rejected rows, for logging.
    std::vector<std::string> rejection_samples;
};

/// @brief Leniently parses a payload and validates every row.
///
/// A well-formed document may be {"records": [...]} or a bare array. A
/// malformed one keeps the longest leading run of complete, well-formed row
/// objects. Rows with non-integer values or fields the codebook does not
/// declare are rejected; nothing is ever corrected.
BatchOutcome parse_and_validate_batch(const RawBatch &raw, const Codebook &codebook);

} // namespace popsynth
