#include "popsynth/sae/sae.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"
#include "popsynth/core/geoid.h"
#include "popsynth/metrics/correlation.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace popsynth {

void OutcomePredicate::validate(const Codebook &codebook) const {
    const auto *spec = codebook.find(variable);
    if (spec == nullptr) {
        throw ValidationError(fmt::format("outcome '{}': unknown variable '{}'", label, variable));
    }
    if (positive_codes.empty()) {
        throw ValidationError(fmt::format("outcome '{}': no positive codes", label));
    }
    for (const auto code : positive_codes) {
        if (!spec->contains(code)) {
            throw ValidationError(
                fmt::format("outcome '{}': code {} is not a valid code of '{}'", label, code, variable));
        }
    }
}

TractEstimates tract_estimate(const SyntheticPopulation &population, const OutcomePredicate &predicate) {
    predicate.validate(population.codebook());
    if (population.empty()) {
        throw ValidationError("tract_estimate: population has no individuals");
    }
    const auto column = population.codebook().require_index(predicate.variable);
    const auto &tracts = population.tracts();
    std::vector<std::uint64_t> totals(tracts.size(), 0);
    std::vector<std::uint64_t> positives(tracts.size(), 0);
    const auto &attributes = population.attributes();
    for (std::size_t i = 0; i < population.size(); ++i) {
        const auto t = population.tract_index(i);
        ++totals[t];
        if (predicate.positive_codes.contains(attributes.value(i, column))) {
            ++positives[t];
        }
    }

    TractEstimates estimates;
    estimates.label = predicate.label;
    for (std::size_t t = 0; t < tracts.size(); ++t) {
        if (totals[t] == 0) {
            estimates.excluded.push_back(tracts[t]);
            continue;
        }
        estimates.population_counts[tracts[t]] = totals[t];
        estimates.positive_counts[tracts[t]] = positives[t];
        estimates.proportions[tracts[t]] = static_cast<double>(positives[t]) / static_cast<double>(totals[t]);
    }
    std::sort(estimates.excluded.begin(), estimates.excluded.end());
    return estimates;
}

BenchmarkTable make_benchmark(std::string source, const std::map<std::string, double> &values) {
    BenchmarkTable table;
    table.source = std::move(source);
    bool percent = false;
    for (const auto &[geoid, value] : values) {
        if (!std::isfinite(value) || value < 0.0 || value > 100.0) {
            throw ValidationError(
                fmt::format("benchmark {}: value {} for tract {} is not a proportion or percentage", table.source,
                            value, geoid));
        }
        percent = percent || value > 1.0;
    }
    for (const auto &[geoid, value] : values) {
        table.proportions[geoid] = percent ? value / 100.0 : value;
    }
    if (percent) {
        table.rescaled_from_percent = true;
        spdlog::info("benchmark {}: values above 1 found; treating all values as percentages", table.source);
    }
    return table;
}

BenchmarkTable read_benchmark_csv(std::istream &input, std::string source, const std::string &source_name) {
    csv::Reader reader{input, source_name};
    const auto header = reader.next();
    if (!header || header->fields.size() != 2 || csv::trim(header->fields[0]) != "geoid" ||
        csv::trim(header->fields[1]) != "value") {
        throw ValidationError(source_name + ": header must be geoid,value");
    }
    std::map<std::string, double> values;
    while (auto row = reader.next()) {
        const auto fail = [&](const std::string &message) {
            return ValidationError(fmt::format("{}: line {}: {}", source_name, row->line, message));
        };
        if (row->fields.size() != 2) {
            throw fail(fmt::format("expected 2 fields, found {}", row->fields.size()));
        }
        std::string geoid;
        try {
            geoid = normalize_geoid(row->fields[0]);
        } catch (const ValidationError &e) {
            throw fail(e.what());
        }
        const auto value = csv::parse_double(row->fields[1]);
        if (!value) {
            throw fail(fmt::format("'{}' is not a number", row->fields[1]));
        }
        if (!values.emplace(geoid, *value).second) {
            throw fail(fmt::format("duplicate tract {}", geoid));
        }
    }
    if (values.empty()) {
        throw ValidationError(source_name + ": no benchmark rows");
    }
    return make_benchmark(std::move(source), values);
}

BenchmarkTable read_benchmark_csv(const std::filesystem::path &path, std::string source) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open benchmark file " + path.string());
    }
    return read_benchmark_csv(input, std::move(source), path.string());
}

ResidualMap residual_map(const TractEstimates &estimates, const BenchmarkTable &benchmark) {
    ResidualMap out;
    for (const auto &[geoid, estimate] : estimates.proportions) {
        const auto it = benchmark.proportions.find(geoid);
        if (it == benchmark.proportions.end()) {
            out.estimate_only.push_back(geoid);
            continue;
        }
        out.rows.push_back({geoid, estimate, it->second, it->second - estimate});
    }
    for (const auto &[geoid, value] : benchmark.proportions) {
        if (!estimates.proportions.contains(geoid)) {
            out.benchmark_only.push_back(geoid);
        }
    }
    if (out.rows.empty()) {
        throw ValidationError(fmt::format("benchmark {}: no tracts in common with the '{}' estimates",
                                          benchmark.source, estimates.label));
    }
    return out;
}

double spatial_correlation(const TractEstimates &estimates, const BenchmarkTable &benchmark) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto &[geoid, estimate] : estimates.proportions) {
        if (const auto it = benchmark.proportions.find(geoid); it != benchmark.proportions.end()) {
            x.push_back(estimate);
            y.push_back(it->second);
        }
    }
    return pearson_r(x, y);
}

SaeReport evaluate_benchmark(const SyntheticPopulation &population, const OutcomePredicate &predicate,
                             const BenchmarkTable &benchmark) {
    SaeReport report;
    report.predicate = predicate;
    report.source = benchmark.source;
    report.estimates = tract_estimate(population, predicate);
    report.residuals = residual_map(report.estimates, benchmark);
    report.summary.r = spatial_correlation(report.estimates, benchmark);
    report.summary.n_tracts = report.residuals.rows.size();
    for (const auto &row : report.residuals.rows) {
        report.summary.mean_residual += row.residual;
        report.summary.mean_abs_residual += std::abs(row.residual);
    }
    report.summary.mean_residual /= static_cast<double>(report.summary.n_tracts);
    report.summary.mean_abs_residual /= static_cast<double>(report.summary.n_tracts);
    report.summary.exclusions = report.estimates.excluded;
    return report;
}

void write_residual_map_csv(std::ostream &out, const ResidualMap &residuals) {
    out << "geoid,estimate,benchmark,residual\n";
    for (const auto &row : residuals.rows) {
        out << row.geoid << ',' << csv::format_exact(row.estimate) << ',' << csv::format_exact(row.benchmark) << ','
            << csv::format_exact(row.residual) << '\n';
    }
}

nlohmann::json to_json(const SaeReport &report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row : report.residuals.rows) {
        rows.push_back({{"geoid", row.geoid},
                        {"estimate", row.estimate},
                        {"benchmark", row.benchmark},
                        {"residual", row.residual},
                        {"population", report.estimates.population_counts.at(row.geoid)}});
    }
    return nlohmann::json{
        {"outcome", report.predicate.label},
        {"variable", report.predicate.variable},
        {"positive_codes", report.predicate.positive_codes},
        {"source", report.source},
        {"correlation", "pearson r over unweighted tract pairs"},
        {"summary",
         {{"r", report.summary.r},
          {"mean_residual", report.summary.mean_residual},
          {"mean_abs_residual", report.summary.mean_abs_residual},
          {"n_tracts", report.summary.n_tracts},
          {"exclusions", report.summary.exclusions}}},
        {"unmatched_estimates", report.residuals.estimate_only},
        {"unmatched_benchmark", report.residuals.benchmark_only},
        {"tracts", rows}};
}

} // namespace popsynth
