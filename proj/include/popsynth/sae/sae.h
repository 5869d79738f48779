#pragma once

#include "popsynth/ipf/population.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace popsynth {

/// A binary outcome: individuals whose @p variable takes one of @p positive_codes.
struct OutcomePredicate {
    std::string variable;
    std::set<int> positive_codes;
    std::string label;

    /// Throws ValidationError unless the variable exists and positive_codes is a non-empty subset of its codes.
    void validate(const Codebook &codebook) const;
};

/// Per-tract outcome proportions, keyed by geoid.
struct TractEstimates {
    std::string label;
    std::map<std::string, double> proportions;
    std::map<std::string, std::uint64_t> population_counts;
    std::map<std::string, std::uint64_t> positive_counts;
    /// Declared tracts with no individuals.
    std::vector<std::string> excluded;
};

/// @brief Proportion of each tract's individuals satisfying the predicate.
///
/// Throws ValidationError for an empty population or an invalid predicate.
TractEstimates tract_estimate(const SyntheticPopulation &population, const OutcomePredicate &predicate);

/// External tract-level proportions, keyed by normalised geoid.
struct BenchmarkTable {
    std::string source;
    std::map<std::string, double> proportions;
    /// The input looked like percentages and was divided by 100.
    bool rescaled_from_percent = false;
};

/// @brief Builds a benchmark from raw values.
///
/// When any value exceeds 1 all values are treated as percentages and divided
/// by 100. Negative, non-finite or above-100 values are errors.
BenchmarkTable make_benchmark(std::string source, const std::map<std::string, double> &values);

/// Reads a `geoid,value` CSV; geoids are normalised and must be unique.
BenchmarkTable read_benchmark_csv(std::istream &input, std::string source,
                                  const std::string &source_name = "<benchmark>");
BenchmarkTable read_benchmark_csv(const std::filesystem::path &path, std::string source);

struct ResidualRow {
    std::string geoid;
    double estimate = 0.0;
    double benchmark = 0.0;
    /// benchmark - estimate; negative when the model overestimates.
    double residual = 0.0;
};

struct ResidualMap {
    /// Matched tracts in geoid order.
    std::vector<ResidualRow> rows;
    std::vector<std::string> estimate_only;
    std::vector<std::string> benchmark_only;
};

/// @brief Residuals on the geoid intersection; throws ValidationError when it is empty.
ResidualMap residual_map(const TractEstimates &estimates, const BenchmarkTable &benchmark);

/// Unweighted Pearson r over the geoid intersection, paired by geoid.
double spatial_correlation(const TractEstimates &estimates, const BenchmarkTable &benchmark);

struct SaeSummary {
    double r = 0.0;
    double mean_residual = 0.0;
    double mean_abs_residual = 0.0;
    std::size_t n_tracts = 0;
    std::vector<std::string> exclusions;
};

struct SaeReport {
    OutcomePredicate predicate;
    std::string source;
    TractEstimates estimates;
    ResidualMap residuals;
    SaeSummary summary;
};

/// tract_estimate, residual_map and spatial_correlation for one benchmark.
SaeReport evaluate_benchmark(const SyntheticPopulation &population, const OutcomePredicate &predicate,
                             const BenchmarkTable &benchmark);

/// `geoid,estimate,benchmark,residual` at full precision.
void write_residual_map_csv(std::ostream &out, const ResidualMap &residuals);

nlohmann::json to_json(const SaeReport &report);

} // namespace popsynth
