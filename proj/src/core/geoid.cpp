#include "popsynth/core/geoid.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cctype>

namespace popsynth {

std::string normalize_geoid(std::string_view raw) {
    const auto text = csv::trim(raw);
    const bool digits = !text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
    if (!digits || text.size() > tract_geoid_length) {
        throw ValidationError("invalid tract geoid '" + std::string{raw} +
                              "' (expected up to 11 decimal digits)");
    }
    std::string out(tract_geoid_length - text.size(), '0');
    out.append(text);
    return out;
}

} // namespace popsynth
