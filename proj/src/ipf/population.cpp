#include "popsynth/ipf/population.h"
#include "popsynth/core/csv.h"
#include "popsynth/core/error.h"
#include "popsynth/core/geoid.h"

#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace popsynth {

std::vector<SyntheticIndividual> expand(const SurveyDataset &survey, std::span<const std::uint32_t> counts,
                                        const std::string &geoid, std::uint64_t id_base) {
    if (counts.size() != survey.size()) {
        throw ValidationError(fmt::format("expand: {} replication counts for {} survey records", counts.size(),
                                          survey.size()));
    }
    std::vector<SyntheticIndividual> out;
    std::uint64_t next_id = id_base;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto values = survey.row(i);
        for (std::uint32_t copy = 0; copy < counts[i]; ++copy) {
            out.push_back({next_id++, geoid, std::vector<int>(values.begin(), values.end()), i});
        }
    }
    return out;
}

nlohmann::json to_json(const TractDiagnostics &d) {
    return nlohmann::json{{"geoid", d.geoid},
                          {"seed", d.seed},
                          {"population_total", d.population_total},
                          {"rounded_total", d.rounded_total},
                          {"individuals", d.individuals},
                          {"iterations", d.iterations},
                          {"converged", d.converged},
                          {"tae", d.tae},
                          {"max_rel_error", d.max_rel_error},
                          {"unreachable_mass", d.unreachable_mass},
                          {"warnings", d.warnings}};
}

SyntheticPopulation::SyntheticPopulation(std::shared_ptr<const Codebook> codebook, std::string source_provenance,
                                         std::uint64_t master_seed)
    : attributes_{std::move(codebook)}, source_provenance_{std::move(source_provenance)},
      master_seed_{master_seed} {}

std::uint32_t SyntheticPopulation::tract_slot(const std::string &geoid) {
    if (const auto it = tract_lookup_.find(geoid); it != tract_lookup_.end()) {
        return it->second;
    }
    const auto slot = static_cast<std::uint32_t>(tracts_.size());
    tracts_.push_back(geoid);
    tract_lookup_.emplace(geoid, slot);
    return slot;
}

void SyntheticPopulation::declare_tract(const std::string &geoid) { tract_slot(geoid); }

void SyntheticPopulation::append_replicas(const SurveyDataset &survey, std::span<const std::uint32_t> counts,
                                          const std::string &geoid) {
    if (counts.size() != survey.size()) {
        throw ValidationError(fmt::format("append_replicas: {} replication counts for {} survey records",
                                          counts.size(), survey.size()));
    }
    if (!(survey.codebook() == attributes_.codebook())) {
        throw ValidationError("append_replicas: survey codebook differs from the population codebook");
    }
    const auto slot = tract_slot(geoid);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto values = survey.row(i);
        for (std::uint32_t copy = 0; copy < counts[i]; ++copy) {
            attributes_.add_row(values);
            person_ids_.push_back(next_person_id_++);
            tract_of_.push_back(slot);
            source_record_.emplace_back(i);
        }
    }
}

void SyntheticPopulation::add_individual(const SyntheticIndividual &individual) {
    attributes_.add_row(individual.values);
    person_ids_.push_back(individual.person_id);
    tract_of_.push_back(tract_slot(individual.geoid));
    source_record_.push_back(individual.source_record);
    next_person_id_ = std::max(next_person_id_, individual.person_id + 1);
}

SyntheticIndividual SyntheticPopulation::individual(std::size_t i) const {
    const auto values = attributes_.row(i);
    return {person_ids_[i], tracts_[tract_of_[i]], std::vector<int>(values.begin(), values.end()),
            source_record_[i]};
}

bool operator==(const SyntheticPopulation &lhs, const SyntheticPopulation &rhs) {
    if (lhs.size() != rhs.size() || lhs.person_ids_ != rhs.person_ids_ ||
        !(lhs.attributes_ == rhs.attributes_)) {
        return false;
    }
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (lhs.geoid(i) != rhs.geoid(i)) {
            return false;
        }
    }
    return true;
}

void write_population_csv(std::ostream &out, const SyntheticPopulation &population) {
    std::string line = "person_id,geoid";
    for (const auto &name : population.codebook().names()) {
        line += "," + csv::escape(name);
    }
    out << line << '\n';
    const auto &attributes = population.attributes();
    for (std::size_t i = 0; i < population.size(); ++i) {
        line = std::to_string(population.person_id(i));
        line.push_back(',');
        line += population.geoid(i);
        for (const auto code : attributes.row(i)) {
            line.push_back(',');
            line += std::to_string(code);
        }
        line.push_back('\n');
        out << line;
    }
}

void write_population_csv(const std::filesystem::path &path, const SyntheticPopulation &population) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) {
        throw ValidationError("cannot write population file " + path.string());
    }
    write_population_csv(out, population);
    if (!out) {
        throw ValidationError("failed writing population file " + path.string());
    }
}

SyntheticPopulation read_population_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                                        const std::string &source_name) {
    const auto names = codebook->names();
    csv::Reader reader{input, source_name};
    const auto header = reader.next();
    if (!header) {
        throw ValidationError(source_name + ": empty file (missing header row)");
    }
    std::vector<std::string> expected{"person_id", "geoid"};
    expected.insert(expected.end(), names.begin(), names.end());
    auto columns = header->fields;
    for (auto &c : columns) {
        c = std::string{csv::trim(c)};
    }
    if (columns != expected) {
        throw ValidationError(fmt::format("{}: line {}: header must be person_id,geoid followed by the "
                                          "codebook variables in order",
                                          source_name, header->line));
    }

    SyntheticPopulation population{std::move(codebook), source_name};
    std::set<std::uint64_t> seen_ids;
    SyntheticIndividual person;
    person.values.resize(names.size());
    while (auto row = reader.next()) {
        const auto fail = [&](const std::string &message) {
            return ValidationError(fmt::format("{}: line {}: {}", source_name, row->line, message));
        };
        if (row->fields.size() != expected.size()) {
            throw fail(fmt::format("expected {} fields, found {}", expected.size(), row->fields.size()));
        }
        const auto id = csv::parse_int(row->fields[0]);
        if (!id || *id < 0) {
            throw fail(fmt::format("'{}' is not a valid person_id", row->fields[0]));
        }
        person.person_id = static_cast<std::uint64_t>(*id);
        if (!seen_ids.insert(person.person_id).second) {
            throw fail(fmt::format("duplicate person_id {}", person.person_id));
        }
        try {
            person.geoid = normalize_geoid(row->fields[1]);
        } catch (const ValidationError &e) {
            throw fail(e.what());
        }
        for (std::size_t j = 0; j < names.size(); ++j) {
            const auto code = csv::parse_int(row->fields[j + 2]);
            if (!code || *code > std::numeric_limits<int>::max() || *code < std::numeric_limits<int>::min()) {
                throw fail(fmt::format("column '{}': '{}' is not an integer code", names[j], row->fields[j + 2]));
            }
            person.values[j] = static_cast<int>(*code);
        }
        try {
            population.add_individual(person);
        } catch (const ValidationError &e) {
            throw fail(e.what());
        }
    }
    return population;
}

SyntheticPopulation read_population_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open population file " + path.string());
    }
    return read_population_csv(input, std::move(codebook), path.string());
}

} // namespace popsynth
