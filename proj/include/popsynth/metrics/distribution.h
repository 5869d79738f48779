#pragma once

#include <string>
#include <vector>

namespace popsynth {

/// @brief Probability vector over one variable's codes, in codebook code order.
struct CategoricalDistribution {
    std::string variable;
    std::vector<int> codes;
    std::vector<double> probs;

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
};

} // namespace popsynth
