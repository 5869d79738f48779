#pragma once

#include "popsynth/codebook/survey_dataset.h"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

namespace popsynth {

/// Name of the optional trailing design-weight column.
inline constexpr std::string_view weight_column = "_WEIGHT";

/// @brief Reads a survey CSV: header of codebook variable names in codebook
/// order, optionally followed by `_WEIGHT`, then integer code cells.
///
/// Any malformed or out-of-range row is a ValidationError naming the source
/// and line; files are linted, never repaired.
SurveyDataset read_survey_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                              const std::string &source_name = "<survey>");
SurveyDataset read_survey_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook);

/// Writes the header row and one row per record; weights use round-trip precision.
void write_survey_csv(std::ostream &out, const SurveyDataset &dataset);
void write_survey_csv(const std::filesystem::path &path, const SurveyDataset &dataset);

/// Header line (without newline) that write_survey_csv emits for @p dataset.
std::string survey_csv_header(const Codebook &codebook, bool weighted);

/// Appends rows [first, size) of @p dataset without a header.
void write_survey_rows(std::ostream &out, const SurveyDataset &dataset, std::size_t first = 0);

} // namespace popsynth
