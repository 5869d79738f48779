#pragma once

#include "popsynth/codebook/codebook.h"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace popsynth {

/// @brief Marginal category counts for one census tract.
///
/// counts[variable][k] is the target for the k-th code of the variable in
/// codebook order.
struct TractMarginals {
    std::string geoid;
    std::map<std::string, std::vector<double>> counts;
    /// Harmonisation target; zero until harmonize_marginals has run.
    double population_total = 0.0;
    /// Fitting variables whose counts were all zero in this tract and could not be rescaled.
    std::vector<std::string> zero_total_variables;

    [[nodiscard]] double count(const Codebook &codebook, const std::string &variable, int code) const;
    [[nodiscard]] double variable_total(const std::string &variable) const;
};

/// @brief Per-tract marginal targets for an ordered list of fitting variables.
struct ConstraintSet {
    std::shared_ptr<const Codebook> codebook;
    std::vector<std::string> fitting_variables;
    /// Keyed by geoid; iteration order is ascending geoid.
    std::map<std::string, TractMarginals> tracts;

    /// @brief Checks the set's invariants.
    ///
    /// Every fitting variable exists in the codebook and every tract carries a
    /// non-negative count for every (fitting variable, code) pair.
    void validate() const;
};

/// @brief Reads a `geoid,variable,code,count` CSV.
///
/// Rows for unknown variables, non-fitting variables, unknown codes, negative
/// or duplicated counts are errors reported with the line number. A tract
/// that omits any (fitting variable, code) pair is an error naming the pair.
ConstraintSet read_marginals_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                                 std::vector<std::string> fitting_variables,
                                 const std::string &source_name = "<marginals>");
ConstraintSet read_marginals_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook,
                                 std::vector<std::string> fitting_variables);

void write_marginals_csv(std::ostream &out, const ConstraintSet &constraints);

/// @brief Reconciles per-variable totals within each tract.
///
/// population_total becomes the total of the first fitting variable; every
/// other fitting variable is rescaled proportionally to that total. Variables
/// with an all-zero total are left as-is and listed in zero_total_variables.
/// A tract whose first variable totals zero is a ValidationError naming it.
ConstraintSet harmonize_marginals(const ConstraintSet &raw);

} // namespace popsynth
