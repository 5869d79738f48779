#pragma once

#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/metrics/distribution.h"

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace popsynth {

/// A dataset to compare against ground truth, under a display label.
struct LabeledDataset {
    std::string label;
    const SurveyDataset *dataset = nullptr;
};

/// @brief JS divergences, one row per variable and one column per candidate.
struct DivergenceTable {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    /// cells[r][c]
    std::vector<std::vector<double>> cells;
    std::vector<double> row_means;
    std::vector<double> column_means;
    /// Mean over every cell.
    double grand_mean = 0.0;

    [[nodiscard]] double cell(std::string_view row, std::string_view column) const;
};

/// Post minus pre divergence, cell by cell.
struct DeltaTable {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> cells;
};

/// @brief Per-category residuals truth - model for one variable.
///
/// Negative means the model overestimates the category.
struct ResidualReport {
    std::string variable;
    std::vector<int> codes;
    std::vector<std::string> labels;
    std::vector<double> truth_shares;
    std::vector<double> model_shares;
    std::vector<double> residuals;
};

/// @brief Builds a table from precomputed cells, filling in the means.
DivergenceTable make_divergence_table(std::vector<std::string> rows, std::vector<std::string> columns,
                                      std::vector<std::vector<double>> cells);

/// cell(v, d) = JS(marginal(truth, v), marginal(d, v)).
DivergenceTable divergence_table(const SurveyDataset &truth, const std::vector<LabeledDataset> &candidates,
                                 const std::vector<std::string> &variables);

/// @brief Restricts a table to the given columns (in the given order), recomputing means.
DivergenceTable select_columns(const DivergenceTable &table, const std::vector<std::string> &columns);

/// Throws ValidationError unless row and column labels are identical.
DeltaTable divergence_delta(const DivergenceTable &before, const DivergenceTable &after);

ResidualReport category_residuals(const CategoricalDistribution &truth, const CategoricalDistribution &model);

/// category_residuals with display labels taken from @p codebook.
ResidualReport category_residuals(const CategoricalDistribution &truth, const CategoricalDistribution &model,
                                  const Codebook &codebook);

/// Display CSV: `variable,<columns...>,row_mean` then a `column_mean` row.
void write_divergence_csv(std::ostream &out, const DivergenceTable &table, int decimals = 3);
void write_delta_csv(std::ostream &out, const DeltaTable &table, int decimals = 3);

struct LabeledResiduals {
    std::string stage;
    std::string candidate;
    ResidualReport report;
};
/// `stage,candidate,variable,code,label,truth_share,model_share,residual` at full precision.
void write_residuals_csv(std::ostream &out, const std::vector<LabeledResiduals> &reports);

nlohmann::json to_json(const DivergenceTable &table);
nlohmann::json to_json(const DeltaTable &table);
nlohmann::json to_json(const ResidualReport &report);

} // namespace popsynth
