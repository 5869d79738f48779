#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace popsynth {

/// Generator used for every random draw in synthesis.
using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1) from 53 random bits; identical on every platform.
double uniform_open01(Rng &rng);

/// Round to nearest integer, ties to even.
double round_half_even(double value);

/// @brief Truncate-replicate-sample integerisation of fractional weights.
///
/// Every record first receives floor(w_i) copies. The shortfall
/// D = round(sum w) - sum floor(w_i) is then filled by drawing D distinct
/// records without replacement, each draw proportional to the remaining
/// fractional parts; records with no fractional part never gain a copy.
/// Throws ValidationError on negative or non-finite weights.
std::vector<std::uint32_t> integerize_trs(std::span<const double> weights, Rng &rng);

} // namespace popsynth
