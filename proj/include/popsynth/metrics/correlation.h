#pragma once

#include <span>

namespace popsynth {

/// @brief Pearson product-moment correlation of paired samples.
///
/// Requires equal lengths of at least two and nonzero variance on both
/// sides; throws ValidationError otherwise. The result is clamped to [-1, 1].
double pearson_r(std::span<const double> x, std::span<const double> y);

} // namespace popsynth
