#include "popsynth/ipf/integerize.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace popsynth {

double uniform_open01(Rng &rng) {
    // (k + 0.5) / 2^53 for a 53-bit k never hits 0 or 1.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double round_half_even(double value) {
    const double lower = std::floor(value);
    const double diff = value - lower;
    if (diff < 0.5) {
        return lower;
    }
    if (diff > 0.5) {
        return lower + 1.0;
    }
    return std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
}

std::vector<std::uint32_t> integerize_trs(std::span<const double> weights, Rng &rng) {
    std::vector<std::uint32_t> counts(weights.size(), 0);
    std::uint64_t floor_total = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (!std::isfinite(w) || w < 0.0) {
            throw ValidationError(fmt::format("integerize_trs: weight {} at index {} is negative or non-finite", w, i));
        }
        if (w >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
            throw ValidationError(fmt::format("integerize_trs: weight {} at index {} is too large", w, i));
        }
        counts[i] = static_cast<std::uint32_t>(std::floor(w));
        floor_total += counts[i];
        total += w;
    }

    const auto target = static_cast<std::uint64_t>(round_half_even(total));
    std::uint64_t shortfall = target > floor_total ? target - floor_total : 0;

    // Weighted sampling without replacement (Efraimidis-Spirakis): the D
    // largest keys log(u)/frac reproduce sequential draws proportional to the
    // fractional parts of the records not yet chosen.
    struct Keyed {
        double key;
        std::size_t index;
    };
    std::vector<Keyed> candidates;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double frac = weights[i] - std::floor(weights[i]);
        if (frac > 0.0) {
            candidates.push_back({std::log(uniform_open01(rng)) / frac, i});
        }
    }
    shortfall = std::min<std::uint64_t>(shortfall, candidates.size());
    if (shortfall == 0) {
        return counts;
    }
    const auto before = [](const Keyed &a, const Keyed &b) {
        return a.key > b.key || (a.key == b.key && a.index < b.index);
    };
    const auto cut = candidates.begin() + static_cast<std::ptrdiff_t>(shortfall);
    std::nth_element(candidates.begin(), cut - 1, candidates.end(), before);
    for (auto it = candidates.begin(); it != cut; ++it) {
        ++counts[it->index];
    }
    return counts;
}

} // namespace popsynth
