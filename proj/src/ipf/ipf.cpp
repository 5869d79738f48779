#include "popsynth/ipf/ipf.h"
#include "popsynth/core/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace popsynth {

std::vector<double> initial_weights(const SurveyDataset &survey) {
    if (survey.empty()) {
        throw ValidationError("initial_weights: survey has no records");
    }
    if (survey.has_weights()) {
        return *survey.weights();
    }
    return std::vector<double>(survey.size(), 1.0);
}

namespace {

struct FittingColumn {
    std::string variable;
    std::vector<int> codes;
    /// Category index (position in the code list) of every record.
    std::vector<std::size_t> category;
    std::vector<double> targets;
    std::vector<bool> unreachable;
};

std::vector<FittingColumn> prepare_columns(const SurveyDataset &survey, const TractMarginals &marginals,
                                           const std::vector<std::string> &fitting_variables) {
    const auto &codebook = survey.codebook();
    std::vector<FittingColumn> columns;
    columns.reserve(fitting_variables.size());
    for (const auto &variable : fitting_variables) {
        const auto var_index = codebook.require_index(variable);
        const auto &spec = codebook.variables()[var_index];
        const auto it = marginals.counts.find(variable);
        if (it == marginals.counts.end() || it->second.size() != spec.codes.size()) {
            throw ValidationError(
                fmt::format("tract {}: marginals do not cover fitting variable '{}'", marginals.geoid, variable));
        }
        FittingColumn column{variable, spec.codes, {}, it->second, std::vector<bool>(spec.codes.size(), false)};
        column.category.reserve(survey.size());
        for (std::size_t i = 0; i < survey.size(); ++i) {
            column.category.push_back(*spec.index_of(survey.value(i, var_index)));
        }
        columns.push_back(std::move(column));
    }
    return columns;
}

std::vector<double> category_sums(const FittingColumn &column, const std::vector<double> &weights) {
    std::vector<double> sums(column.codes.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        sums[column.category[i]] += weights[i];
    }
    return sums;
}

} // namespace

FittedWeights ipf_fit(const SurveyDataset &survey, const TractMarginals &marginals,
                      const std::vector<std::string> &fitting_variables, const IpfConfig &config) {
    const auto start = initial_weights(survey);
    return ipf_fit(survey, marginals, fitting_variables, config, start);
}

FittedWeights ipf_fit(const SurveyDataset &survey, const TractMarginals &marginals,
                      const std::vector<std::string> &fitting_variables, const IpfConfig &config,
                      std::span<const double> start_weights) {
    if (survey.empty()) {
        throw ValidationError("ipf_fit: survey has no records");
    }
    if (start_weights.size() != survey.size()) {
        throw ValidationError(fmt::format("ipf_fit: {} start weights for {} records", start_weights.size(),
                                          survey.size()));
    }
    for (const auto w : start_weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ValidationError("ipf_fit: start weights must be finite and non-negative");
        }
    }

    auto columns = prepare_columns(survey, marginals, fitting_variables);
    FittedWeights fit;
    fit.geoid = marginals.geoid;
    fit.weights.assign(start_weights.begin(), start_weights.end());

    std::vector<double> factor;
    for (std::size_t sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        for (auto &column : columns) {
            const auto sums = category_sums(column, fit.weights);
            factor.assign(sums.size(), 1.0);
            for (std::size_t k = 0; k < sums.size(); ++k) {
                if (sums[k] > 0.0) {
                    factor[k] = column.targets[k] / sums[k];
                } else if (column.targets[k] > 0.0 && !column.unreachable[k]) {
                    // Support only ever shrinks, so a category is recorded once.
                    column.unreachable[k] = true;
                    fit.unreachable.push_back({column.variable, column.codes[k], column.targets[k]});
                    fit.unreachable_mass += column.targets[k];
                }
            }
            for (std::size_t i = 0; i < fit.weights.size(); ++i) {
                fit.weights[i] *= factor[column.category[i]];
            }
        }
        fit.iterations_used = sweep;

        double max_rel = 0.0;
        for (const auto &column : columns) {
            const auto sums = category_sums(column, fit.weights);
            for (std::size_t k = 0; k < sums.size(); ++k) {
                if (column.unreachable[k]) {
                    continue;
                }
                const double target = column.targets[k];
                const double rel = target > 0.0 ? std::abs(sums[k] - target) / target
                                                : (sums[k] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
                max_rel = std::max(max_rel, rel);
            }
        }
        fit.max_rel_error = max_rel;
        if (max_rel <= config.rel_tolerance) {
            fit.converged = true;
            break;
        }
    }

    for (const auto &column : columns) {
        const auto sums = category_sums(column, fit.weights);
        for (std::size_t k = 0; k < sums.size(); ++k) {
            fit.tae += std::abs(sums[k] - column.targets[k]);
        }
    }
    for (const auto &u : fit.unreachable) {
        fit.warnings.push_back(fmt::format("tract {}: no survey support for {}={} (target {})", fit.geoid,
                                           u.variable, u.code, u.target));
    }
    if (!fit.converged) {
        fit.warnings.push_back(fmt::format("tract {}: not converged after {} sweeps (max relative error {:.3g})",
                                           fit.geoid, fit.iterations_used, fit.max_rel_error));
    }
    return fit;
}

} // namespace popsynth
