#pragma once

#include "popsynth/codebook/survey_dataset.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace popsynth {

/// One synthetic person: a verbatim copy of a survey record placed in a tract.
struct SyntheticIndividual {
    std::uint64_t person_id = 0;
    std::string geoid;
    /// All codebook variables, in codebook order.
    std::vector<int> values;
    /// Row of the source survey record, when known.
    std::optional<std::size_t> source_record;

    friend bool operator==(const SyntheticIndividual &, const SyntheticIndividual &) = default;
};

/// @brief Emits counts[i] verbatim copies of survey record i.
///
/// Copies are placed in @p geoid with consecutive person ids from @p id_base,
/// ordered by (record index, copy index). Throws ValidationError when the
/// counts do not match the survey length.
std::vector<SyntheticIndividual> expand(const SurveyDataset &survey, std::span<const std::uint32_t> counts,
                                        const std::string &geoid, std::uint64_t id_base);

/// Fit and integerisation diagnostics for one tract.
struct TractDiagnostics {
    std::string geoid;
    std::uint64_t seed = 0;
    double population_total = 0.0;
    std::uint64_t rounded_total = 0;
    std::uint64_t individuals = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double tae = 0.0;
    double max_rel_error = 0.0;
    double unreachable_mass = 0.0;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const TractDiagnostics &diagnostics);

/// @brief A geographically explicit synthetic population.
///
/// Individuals are stored column-wise: their attribute codes form an
/// unweighted SurveyDataset (so every marginal/divergence routine applies
/// directly), alongside parallel person-id and tract columns.
class SyntheticPopulation {
  public:
    explicit SyntheticPopulation(std::shared_ptr<const Codebook> codebook, std::string source_provenance = {},
                                 std::uint64_t master_seed = 0);

    /// Appends counts[i] copies of survey record i to tract @p geoid, ids continuing from next_person_id().
    void append_replicas(const SurveyDataset &survey, std::span<const std::uint32_t> counts,
                         const std::string &geoid);

    void add_individual(const SyntheticIndividual &individual);

    /// Declares a tract even if it ends up with no individuals.
    void declare_tract(const std::string &geoid);

    [[nodiscard]] std::size_t size() const noexcept { return person_ids_.size(); }
    [[nodiscard]] bool empty() const noexcept { return person_ids_.empty(); }

    [[nodiscard]] SyntheticIndividual individual(std::size_t i) const;
    [[nodiscard]] std::uint64_t person_id(std::size_t i) const { return person_ids_[i]; }
    [[nodiscard]] const std::string &geoid(std::size_t i) const { return tracts_[tract_of_[i]]; }
    [[nodiscard]] std::size_t tract_index(std::size_t i) const { return tract_of_[i]; }
    [[nodiscard]] std::uint64_t next_person_id() const noexcept { return next_person_id_; }

    /// Every declared tract, in declaration order.
    [[nodiscard]] const std::vector<std::string> &tracts() const noexcept { return tracts_; }

    /// The individuals' attributes as an unweighted dataset.
    [[nodiscard]] const SurveyDataset &attributes() const noexcept { return attributes_; }
    [[nodiscard]] const Codebook &codebook() const noexcept { return attributes_.codebook(); }

    [[nodiscard]] const std::string &source_provenance() const noexcept { return source_provenance_; }
    [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }

    [[nodiscard]] const std::vector<TractDiagnostics> &diagnostics() const noexcept { return diagnostics_; }
    void add_diagnostics(TractDiagnostics diagnostics) { diagnostics_.push_back(std::move(diagnostics)); }

    /// Same individuals (ids, tracts, attributes) in the same order.
    friend bool operator==(const SyntheticPopulation &lhs, const SyntheticPopulation &rhs);

  private:
    std::uint32_t tract_slot(const std::string &geoid);

    SurveyDataset attributes_;
    std::vector<std::uint64_t> person_ids_;
    std::vector<std::uint32_t> tract_of_;
    std::vector<std::optional<std::size_t>> source_record_;
    std::vector<std::string> tracts_;
    std::map<std::string, std::uint32_t, std::less<>> tract_lookup_;
    std::string source_provenance_;
    std::uint64_t master_seed_ = 0;
    std::uint64_t next_person_id_ = 1;
    std::vector<TractDiagnostics> diagnostics_;
};

/// `person_id,geoid,<codebook variables>`, one row per individual in stored order.
void write_population_csv(std::ostream &out, const SyntheticPopulation &population);
void write_population_csv(const std::filesystem::path &path, const SyntheticPopulation &population);

/// Inverse of write_population_csv; validates every code and person-id uniqueness.
SyntheticPopulation read_population_csv(std::istream &input, std::shared_ptr<const Codebook> codebook,
                                        const std::string &source_name = "<population>");
SyntheticPopulation read_population_csv(const std::filesystem::path &path, std::shared_ptr<const Codebook> codebook);

} // namespace popsynth
