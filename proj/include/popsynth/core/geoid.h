#pragma once

#include <string>
#include <string_view>

namespace popsynth {

/// Census tract identifiers are 11-digit strings (state, county, tract FIPS).
inline constexpr std::size_t tract_geoid_length = 11;

/// @brief Normalises a tract geoid to its canonical 11-digit form.
///
/// Surrounding whitespace is removed and leading zeros lost by spreadsheet
/// round-trips are restored. Anything that is not 1-11 decimal digits is a
/// ValidationError.
std::string normalize_geoid(std::string_view raw);

} // namespace popsynth
