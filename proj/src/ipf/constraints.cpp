#include "popsynth/ipf/constraints.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"
#include "popsynth/core/geoid.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

namespace popsynth {

double TractMarginals::count(const Codebook &codebook, const std::string &variable, int code) const {
    const auto &spec = codebook.at(variable);
    const auto index = spec.index_of(code);
    const auto it = counts.find(variable);
    if (!index || it == counts.end()) {
        throw ValidationError(fmt::format("tract {}: no count for {}={}", geoid, variable, code));
    }
    return it->second[*index];
}

double TractMarginals::variable_total(const std::string &variable) const {
    const auto it = counts.find(variable);
    if (it == counts.end()) {
        throw ValidationError(fmt::format("tract {}: no counts for variable '{}'", geoid, variable));
    }
    return std::accumulate(it->second.begin(), it->second.end(), 0.0);
}

void ConstraintSet::validate() const {
    if (!codebook) {
        throw ValidationError("constraint set has no codebook");
    }
    if (fitting_variables.empty()) {
        throw ValidationError("constraint set declares no fitting variables");
    }
    std::set<std::string> seen;
    for (const auto &variable : fitting_variables) {
        if (codebook->find(variable) == nullptr) {
            throw ValidationError(fmt::format("fitting variable '{}' is not in the codebook", variable));
        }
        if (!seen.insert(variable).second) {
            throw ValidationError(fmt::format("fitting variable '{}' listed twice", variable));
        }
    }
    for (const auto &[geoid, tract] : tracts) {
        if (tract.geoid != geoid) {
            throw ValidationError(fmt::format("tract keyed '{}' carries geoid '{}'", geoid, tract.geoid));
        }
        for (const auto &variable : fitting_variables) {
            const auto &spec = codebook->at(variable);
            const auto it = tract.counts.find(variable);
            if (it == tract.counts.end() || it->second.size() != spec.codes.size()) {
                throw ValidationError(
                    fmt::format("tract {}: counts for '{}' do not cover its {} codes", geoid, variable,
                                spec.codes.size()));
            }
            for (const auto value : it->second) {
                if (!std::isfinite(value) || value < 0.0) {
                    throw ValidationError(
                        fmt::format("tract {}: '{}' has a negative or non-finite count", geoid, variable));
                }
            }
        }
    }
}

ConstraintSet read_marginals_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                                 std::vector<std::string> fitting_variables, const std::string &source_name) {
    ConstraintSet set{std::move(codebook), std::move(fitting_variables), {}};
    for (const auto &variable : set.fitting_variables) {
        if (set.codebook->find(variable) == nullptr) {
            throw ValidationError(
                fmt::format("{}: fitting variable '{}' is not in the codebook", source_name, variable));
        }
    }

    csv::Reader reader{input, source_name};
    const auto header = reader.next();
    const std::vector<std::string> expected{"geoid", "variable", "code", "count"};
    if (!header) {
        throw ValidationError(source_name + ": empty file (missing header row)");
    }
    auto columns = header->fields;
    for (auto &c : columns) {
        c = std::string{csv::trim(c)};
    }
    if (columns != expected) {
        throw ValidationError(fmt::format("{}: line {}: header must be 'geoid,variable,code,count'",
                                          source_name, header->line));
    }

    constexpr double unset = -1.0;
    while (auto row = reader.next()) {
        const auto fail = [&](const std::string &message) {
            return ValidationError(fmt::format("{}: line {}: {}", source_name, row->line, message));
        };
        if (row->fields.size() != 4) {
            throw fail(fmt::format("expected 4 fields, found {}", row->fields.size()));
        }
        std::string geoid;
        try {
            geoid = normalize_geoid(row->fields[0]);
        } catch (const ValidationError &e) {
            throw fail(e.what());
        }
        const std::string variable{csv::trim(row->fields[1])};
        const auto *spec = set.codebook->find(variable);
        if (spec == nullptr) {
            throw fail(fmt::format("unknown variable '{}'", variable));
        }
        if (std::find(set.fitting_variables.begin(), set.fitting_variables.end(), variable) ==
            set.fitting_variables.end()) {
            throw fail(fmt::format("variable '{}' is not a fitting variable", variable));
        }
        const auto code = csv::parse_int(row->fields[2]);
        if (!code || *code > std::numeric_limits<int>::max() || *code < std::numeric_limits<int>::min()) {
            throw fail(fmt::format("'{}' is not an integer code", row->fields[2]));
        }
        const auto index = spec->index_of(static_cast<int>(*code));
        if (!index) {
            throw fail(fmt::format("code {} is not valid for variable '{}'", *code, variable));
        }
        const auto value = csv::parse_double(row->fields[3]);
        if (!value || *value < 0.0) {
            throw fail(fmt::format("count '{}' must be a non-negative number", row->fields[3]));
        }

        auto &tract = set.tracts[geoid];
        tract.geoid = geoid;
        auto &counts = tract.counts[variable];
        if (counts.empty()) {
            counts.assign(spec->codes.size(), unset);
        }
        if (counts[*index] != unset) {
            throw fail(fmt::format("duplicate count for tract {} {}={}", geoid, variable, *code));
        }
        counts[*index] = *value;
    }

    for (const auto &[geoid, tract] : set.tracts) {
        for (const auto &variable : set.fitting_variables) {
            const auto &spec = set.codebook->at(variable);
            const auto it = tract.counts.find(variable);
            for (std::size_t k = 0; k < spec.codes.size(); ++k) {
                if (it == tract.counts.end() || it->second[k] == unset) {
                    throw ValidationError(fmt::format("{}: tract {} has no count for {}={}", source_name,
                                                      geoid, variable, spec.codes[k]));
                }
            }
        }
    }
    return set;
}

ConstraintSet read_marginals_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook,
                                 std::vector<std::string> fitting_variables) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open marginals file " + path.string());
    }
    return read_marginals_csv(input, std::move(codebook), std::move(fitting_variables), path.string());
}

void write_marginals_csv(std::ostream &out, const ConstraintSet &constraints) {
    csv::write_row(out, {"geoid", "variable", "code", "count"});
    for (const auto &[geoid, tract] : constraints.tracts) {
        for (const auto &variable : constraints.fitting_variables) {
            const auto &spec = constraints.codebook->at(variable);
            const auto &counts = tract.counts.at(variable);
            for (std::size_t k = 0; k < spec.codes.size(); ++k) {
                csv::write_row(out, {geoid, variable, std::to_string(spec.codes[k]), csv::format_exact(counts[k])});
            }
        }
    }
}

ConstraintSet harmonize_marginals(const ConstraintSet &raw) {
    raw.validate();
    ConstraintSet out = raw;
    const auto &first = out.fitting_variables.front();
    for (auto &[geoid, tract] : out.tracts) {
        const double total = tract.variable_total(first);
        if (!(total > 0.0)) {
            throw ValidationError(
                fmt::format("tract {}: first fitting variable '{}' has zero total", geoid, first));
        }
        tract.population_total = total;
        tract.zero_total_variables.clear();
        for (std::size_t v = 1; v < out.fitting_variables.size(); ++v) {
            const auto &variable = out.fitting_variables[v];
            auto &counts = tract.counts.at(variable);
            const double variable_total = std::accumulate(counts.begin(), counts.end(), 0.0);
            if (!(variable_total > 0.0)) {
                tract.zero_total_variables.push_back(variable);
                continue;
            }
            if (variable_total == total) {
                continue;
            }
            const double scale = total / variable_total;
            for (auto &c : counts) {
                c *= scale;
            }
        }
    }
    return out;
}

} // namespace popsynth
