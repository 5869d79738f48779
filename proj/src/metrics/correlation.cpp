#include "popsynth/metrics/correlation.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace popsynth {

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError(fmt::format("pearson_r: length mismatch ({} vs {})", x.size(), y.size()));
    }
    if (x.size() < 2) {
        throw ValidationError("pearson_r: at least two paired observations are required");
    }
    const auto n = static_cast<double>(x.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;

    // Two-pass centred sums.
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw ValidationError("pearson_r: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace popsynth
