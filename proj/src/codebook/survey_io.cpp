#include "popsynth/codebook/survey_io.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"

#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace popsynth {

SurveyDataset read_survey_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                              const std::string &source_name) {
    const auto names = codebook->names();
    csv::Reader reader{input, source_name};
    const auto header = reader.next();
    if (!header) {
        throw ValidationError(source_name + ": empty file (missing header row)");
    }

    auto columns = header->fields;
    for (auto &c : columns) {
        c = std::string{csv::trim(c)};
    }
    bool weighted = false;
    if (!columns.empty() && columns.back() == weight_column) {
        weighted = true;
        columns.pop_back();
    }
    if (columns != names) {
        std::string expected;
        for (const auto &n : names) {
            expected += (expected.empty() ? "" : ",") + n;
        }
        throw ValidationError(fmt::format(
            "{}: line {}: header does not match the codebook (expected '{}' optionally followed by {})",
            source_name, header->line, expected, weight_column));
    }

    SurveyDataset dataset{std::move(codebook)};
    const auto width = names.size();
    std::vector<int> codes(width);
    while (auto row = reader.next()) {
        const auto expected_fields = width + (weighted ? 1 : 0);
        if (row->fields.size() != expected_fields) {
            throw ValidationError(fmt::format("{}: line {}: expected {} fields, found {}", source_name,
                                              row->line, expected_fields, row->fields.size()));
        }
        for (std::size_t j = 0; j < width; ++j) {
            const auto value = csv::parse_int(row->fields[j]);
            if (!value || *value < std::numeric_limits<int>::min() ||
                *value > std::numeric_limits<int>::max()) {
                throw ValidationError(fmt::format("{}: line {}: column '{}': '{}' is not an integer code",
                                                  source_name, row->line, names[j], row->fields[j]));
            }
            codes[j] = static_cast<int>(*value);
        }
        std::optional<double> weight;
        if (weighted) {
            weight = csv::parse_double(row->fields[width]);
            if (!weight) {
                throw ValidationError(fmt::format("{}: line {}: '{}' is not a valid design weight",
                                                  source_name, row->line, row->fields[width]));
            }
        }
        try {
            dataset.add_row(codes, weight);
        } catch (const ValidationError &e) {
            throw ValidationError(fmt::format("{}: line {}: {}", source_name, row->line, e.what()));
        }
    }
    if (weighted && !dataset.empty() && !(dataset.total_weight() > 0.0)) {
        throw ValidationError(source_name + ": all design weights are zero");
    }
    return dataset;
}

SurveyDataset read_survey_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open survey file " + path.string());
    }
    auto dataset = read_survey_csv(input, std::move(codebook), path.string());
    dataset.set_provenance(path.filename().string());
    return dataset;
}

std::string survey_csv_header(const Codebook &codebook, bool weighted) {
    std::string header;
    for (const auto &name : codebook.names()) {
        header += (header.empty() ? "" : ",") + csv::escape(name);
    }
    if (weighted) {
        header += ",";
        header += weight_column;
    }
    return header;
}

void write_survey_rows(std::ostream &out, const SurveyDataset &dataset, std::size_t first) {
    std::string line;
    for (std::size_t i = first; i < dataset.size(); ++i) {
        line.clear();
        const auto values = dataset.row(i);
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (j != 0) {
                line.push_back(',');
            }
            line += std::to_string(values[j]);
        }
        if (dataset.has_weights()) {
            line.push_back(',');
            line += csv::format_exact(dataset.weight(i));
        }
        line.push_back('\n');
        out << line;
    }
}

void write_survey_csv(std::ostream &out, const SurveyDataset &dataset) {
    out << survey_csv_header(dataset.codebook(), dataset.has_weights()) << '\n';
    write_survey_rows(out, dataset);
}

void write_survey_csv(const std::filesystem::path &path, const SurveyDataset &dataset) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) {
        throw ValidationError("cannot write survey file " + path.string());
    }
    write_survey_csv(out, dataset);
    if (!out) {
        throw ValidationError("failed writing survey file " + path.string());
    }
}

} // namespace popsynth
