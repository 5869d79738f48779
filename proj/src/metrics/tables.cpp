#include "popsynth/metrics/tables.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"
#include "popsynth/metrics/divergence.h"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace popsynth {

namespace {

std::size_t position_of(const std::vector<std::string> &labels, std::string_view label, std::string_view what) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        throw ValidationError(fmt::format("unknown {} '{}'", what, label));
    }
    return static_cast<std::size_t>(it - labels.begin());
}

} // namespace

double DivergenceTable::cell(std::string_view row, std::string_view column) const {
    return cells[position_of(rows, row, "row")][position_of(columns, column, "column")];
}

DivergenceTable make_divergence_table(std::vector<std::string> rows, std::vector<std::string> columns,
                                      std::vector<std::vector<double>> cells) {
    if (cells.size() != rows.size()) {
        throw ValidationError("divergence table: cell rows do not match row labels");
    }
    for (const auto &r : cells) {
        if (r.size() != columns.size()) {
            throw ValidationError("divergence table: cell columns do not match column labels");
        }
    }
    DivergenceTable table;
    table.rows = std::move(rows);
    table.columns = std::move(columns);
    table.cells = std::move(cells);
    table.row_means.assign(table.rows.size(), 0.0);
    table.column_means.assign(table.columns.size(), 0.0);

    double total = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            table.row_means[r] += table.cells[r][c];
            table.column_means[c] += table.cells[r][c];
            total += table.cells[r][c];
        }
    }
    for (auto &m : table.row_means) {
        m = table.columns.empty() ? 0.0 : m / static_cast<double>(table.columns.size());
    }
    for (auto &m : table.column_means) {
        m = table.rows.empty() ? 0.0 : m / static_cast<double>(table.rows.size());
    }
    const auto n_cells = table.rows.size() * table.columns.size();
    table.grand_mean = n_cells == 0 ? 0.0 : total / static_cast<double>(n_cells);
    return table;
}

DivergenceTable divergence_table(const SurveyDataset &truth, const std::vector<LabeledDataset> &candidates,
                                 const std::vector<std::string> &variables) {
    std::vector<std::string> columns;
    for (const auto &candidate : candidates) {
        if (candidate.dataset == nullptr) {
            throw std::invalid_argument("divergence_table: null candidate dataset");
        }
        if (!(candidate.dataset->codebook() == truth.codebook())) {
            throw ValidationError(fmt::format("candidate '{}' does not share the ground-truth codebook",
                                              candidate.label));
        }
        columns.push_back(candidate.label);
    }
    std::vector<std::vector<double>> cells;
    for (const auto &variable : variables) {
        const auto reference = marginal_distribution(truth, variable);
        auto &row = cells.emplace_back();
        for (const auto &candidate : candidates) {
            row.push_back(js_divergence(reference, marginal_distribution(*candidate.dataset, variable)));
        }
    }
    return make_divergence_table(variables, std::move(columns), std::move(cells));
}

DivergenceTable select_columns(const DivergenceTable &table, const std::vector<std::string> &columns) {
    std::vector<std::size_t> picks;
    for (const auto &column : columns) {
        picks.push_back(position_of(table.columns, column, "column"));
    }
    std::vector<std::vector<double>> cells;
    for (const auto &row : table.cells) {
        auto &out = cells.emplace_back();
        for (const auto c : picks) {
            out.push_back(row[c]);
        }
    }
    return make_divergence_table(table.rows, columns, std::move(cells));
}

DeltaTable divergence_delta(const DivergenceTable &before, const DivergenceTable &after) {
    if (before.rows != after.rows || before.columns != after.columns) {
        throw ValidationError("divergence_delta: row/column labels of the two tables differ");
    }
    DeltaTable delta{before.rows, before.columns, {}};
    for (std::size_t r = 0; r < before.rows.size(); ++r) {
        auto &row = delta.cells.emplace_back();
        for (std::size_t c = 0; c < before.columns.size(); ++c) {
            row.push_back(after.cells[r][c] - before.cells[r][c]);
        }
    }
    return delta;
}

ResidualReport category_residuals(const CategoricalDistribution &truth, const CategoricalDistribution &model) {
    require_same_support(truth, model);
    ResidualReport report;
    report.variable = truth.variable;
    report.codes = truth.codes;
    report.truth_shares = truth.probs;
    report.model_shares = model.probs;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        report.labels.push_back(std::to_string(truth.codes[i]));
        report.residuals.push_back(truth.probs[i] - model.probs[i]);
    }
    return report;
}

ResidualReport category_residuals(const CategoricalDistribution &truth, const CategoricalDistribution &model,
                                  const Codebook &codebook) {
    auto report = category_residuals(truth, model);
    const auto &spec = codebook.at(truth.variable);
    for (std::size_t i = 0; i < report.codes.size(); ++i) {
        report.labels[i] = spec.label_for(report.codes[i]);
    }
    return report;
}

void write_divergence_csv(std::ostream &out, const DivergenceTable &table, int decimals) {
    std::vector<std::string> header{"variable"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    header.emplace_back("row_mean");
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> fields{table.rows[r]};
        for (const auto value : table.cells[r]) {
            fields.push_back(csv::format_fixed(value, decimals));
        }
        fields.push_back(csv::format_fixed(table.row_means[r], decimals));
        csv::write_row(out, fields);
    }
    std::vector<std::string> footer{"column_mean"};
    for (const auto value : table.column_means) {
        footer.push_back(csv::format_fixed(value, decimals));
    }
    footer.push_back(csv::format_fixed(table.grand_mean, decimals));
    csv::write_row(out, footer);
}

void write_delta_csv(std::ostream &out, const DeltaTable &table, int decimals) {
    std::vector<std::string> header{"variable"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> fields{table.rows[r]};
        for (const auto value : table.cells[r]) {
            fields.push_back(csv::format_fixed(value, decimals));
        }
        csv::write_row(out, fields);
    }
}

void write_residuals_csv(std::ostream &out, const std::vector<LabeledResiduals> &reports) {
    csv::write_row(out, {"stage", "candidate", "variable", "code", "label", "truth_share", "model_share",
                         "residual"});
    for (const auto &entry : reports) {
        const auto &r = entry.report;
        for (std::size_t i = 0; i < r.codes.size(); ++i) {
            csv::write_row(out, {entry.stage, entry.candidate, r.variable, std::to_string(r.codes[i]),
                                 r.labels[i], csv::format_exact(r.truth_shares[i]),
                                 csv::format_exact(r.model_shares[i]), csv::format_exact(r.residuals[i])});
        }
    }
}

nlohmann::json to_json(const DivergenceTable &table) {
    return nlohmann::json{{"rows", table.rows},
                          {"columns", table.columns},
                          {"cells", table.cells},
                          {"row_means", table.row_means},
                          {"column_means", table.column_means},
                          {"grand_mean", table.grand_mean}};
}

nlohmann::json to_json(const DeltaTable &table) {
    return nlohmann::json{{"rows", table.rows}, {"columns", table.columns}, {"cells", table.cells}};
}

nlohmann::json to_json(const ResidualReport &report) {
    return nlohmann::json{{"variable", report.variable},         {"codes", report.codes},
                          {"labels", report.labels},             {"truth_shares", report.truth_shares},
                          {"model_shares", report.model_shares}, {"residuals", report.residuals}};
}

} // namespace popsynth
