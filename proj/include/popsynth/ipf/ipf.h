#pragma once

#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/ipf/constraints.h"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace popsynth {

struct IpfConfig {
    std::size_t max_sweeps = 100;
    /// Stop once every reachable category's |fitted - target| / target is at or below this.
    double rel_tolerance = 1e-6;
};

/// A (variable, code) pair with positive target and no weighted survey support.
struct UnreachableCategory {
    std::string variable;
    int code = 0;
    double target = 0.0;
};

/// @brief Result of fitting survey weights to one tract.
struct FittedWeights {
    std::string geoid;
    std::vector<double> weights;
    std::size_t iterations_used = 0;
    bool converged = false;
    /// Sum over fitting variables and categories of |fitted - target|.
    double tae = 0.0;
    /// Largest relative marginal error over reachable categories after the last sweep.
    double max_rel_error = 0.0;
    /// Target mass on categories with zero survey support.
    double unreachable_mass = 0.0;
    std::vector<UnreachableCategory> unreachable;
    std::vector<std::string> warnings;
};

/// @brief Starting weights: the survey's design weights, else 1.0 per record.
///
/// Throws ValidationError for an empty survey.
std::vector<double> initial_weights(const SurveyDataset &survey);

/// @brief Iterative proportional fitting of record weights to tract marginals.
///
/// Sweeps the fitting variables in declared order. For each variable every
/// category's records are multiplied by target / current weighted count;
/// categories with zero current weight are skipped and their target counted
/// once in unreachable_mass. Stops when the largest relative marginal error is
/// within config.rel_tolerance or after config.max_sweeps sweeps.
/// Non-convergence is reported in the result, never thrown. Deterministic.
FittedWeights ipf_fit(const SurveyDataset &survey, const TractMarginals &marginals,
                      const std::vector<std::string> &fitting_variables, const IpfConfig &config = {});

/// ipf_fit starting from explicit weights instead of initial_weights(survey).
FittedWeights ipf_fit(const SurveyDataset &survey, const TractMarginals &marginals,
                      const std::vector<std::string> &fitting_variables, const IpfConfig &config,
                      std::span<const double> start_weights);

} // namespace popsynth
