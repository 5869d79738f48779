#pragma once

#include "popsynth/core/error.h"
#include "popsynth/ipf/constraints.h"
#include "popsynth/ipf/ipf.h"
#include "popsynth/ipf/population.h"

#include <cstdint>
#include <vector>

namespace popsynth {

struct SynthesisConfig {
    IpfConfig ipf;
    /// Worker threads for tract fits; 0 or 1 runs sequentially.
    unsigned threads = 1;
};

/// A tract failed; carries the diagnostics of every tract completed before it.
class SynthesisError : public ValidationError {
  public:
    SynthesisError(const std::string &what, std::vector<TractDiagnostics> completed)
        : ValidationError(what), completed_{std::move(completed)} {}

    [[nodiscard]] const std::vector<TractDiagnostics> &completed() const noexcept { return completed_; }

  private:
    std::vector<TractDiagnostics> completed_;
};

/// Per-tract outcome before concatenation.
struct TractResult {
    TractDiagnostics diagnostics;
    std::vector<std::uint32_t> counts;
};

/// @brief Fits, integerises and counts one tract.
///
/// The integerisation generator is seeded with derive_seed(master_seed, geoid).
TractResult synthesize_tract(const SurveyDataset &survey, const TractMarginals &marginals,
                             const std::vector<std::string> &fitting_variables, const IpfConfig &config,
                             std::uint64_t master_seed);

/// @brief Builds the synthetic population tract by tract in ascending geoid order.
///
/// Constraints must already be harmonised. Output is identical for any thread
/// count. A failing tract raises SynthesisError.
SyntheticPopulation synthesize_population(const SurveyDataset &survey, const ConstraintSet &constraints,
                                          const SynthesisConfig &config, std::uint64_t master_seed);

} // namespace popsynth
