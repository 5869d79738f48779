#pragma once

#include "popsynth/codebook/codebook.h"
#include "popsynth/metrics/distribution.h"

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popsynth {

/// A raw survey response keyed by variable name. May be invalid.
struct SurveyRecord {
    std::map<std::string, int> values;

    friend bool operator==(const SurveyRecord &, const SurveyRecord &) = default;
};

/// Outcome of checking a record against a codebook. Never mutates the record.
struct ValidationVerdict {
    bool accepted = false;
    /// Variables that are missing or carry a code outside their code set, in codebook order.
    std::vector<std::string> offending_variables;
    std::vector<std::string> reasons;
};

/// @brief Accepts iff every codebook variable is present with a valid code.
///
/// Values for names the codebook does not declare are ignored.
ValidationVerdict validate_record(const SurveyRecord &record, const Codebook &codebook);

/// @brief A collection of validated, integer-coded survey records.
///
/// Records are stored densely in codebook variable order. Every row is
/// validated on insertion; the dataset therefore never holds an invalid
/// record. Optional design weights are non-negative.
class SurveyDataset {
  public:
    explicit SurveyDataset(std::shared_ptr<const Codebook> codebook, std::string provenance = {});

    /// Throws ValidationError listing the verdict's reasons when invalid.
    void add(const SurveyRecord &record, std::optional<double> weight = std::nullopt);

    /// @p codes must be in codebook order; each code is range-checked.
    void add_row(std::span<const int> codes, std::optional<double> weight = std::nullopt);

    /// Appends every row of @p other (codebooks must match).
    void append(const SurveyDataset &other);

    /// Keeps the first @p n rows.
    void truncate(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return weights_or_empty_size(); }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }
    [[nodiscard]] std::size_t width() const noexcept { return codebook_->size(); }

    [[nodiscard]] std::span<const int> row(std::size_t i) const;
    [[nodiscard]] int value(std::size_t row, std::size_t variable_index) const;
    [[nodiscard]] SurveyRecord record(std::size_t i) const;

    [[nodiscard]] bool has_weights() const noexcept { return weights_.has_value(); }
    [[nodiscard]] const std::optional<std::vector<double>> &weights() const noexcept { return weights_; }
    /// Design weight of row @p i, or 1.0 when the dataset is unweighted.
    [[nodiscard]] double weight(std::size_t i) const;
    [[nodiscard]] double total_weight() const;

    [[nodiscard]] const Codebook &codebook() const noexcept { return *codebook_; }
    [[nodiscard]] const std::shared_ptr<const Codebook> &codebook_ptr() const noexcept { return codebook_; }

    [[nodiscard]] const std::string &provenance() const noexcept { return provenance_; }
    void set_provenance(std::string provenance) { provenance_ = std::move(provenance); }

    [[nodiscard]] const std::vector<int> &codes() const noexcept { return codes_; }

    friend bool operator==(const SurveyDataset &lhs, const SurveyDataset &rhs);

  private:
    [[nodiscard]] std::size_t weights_or_empty_size() const noexcept {
        return codebook_->size() == 0 ? 0 : codes_.size() / codebook_->size();
    }
    void push_weight(std::optional<double> weight);

    std::shared_ptr<const Codebook> codebook_;
    std::string provenance_;
    std::vector<int> codes_;
    std::optional<std::vector<double>> weights_;
};

/// @brief Weighted share of each code of @p variable, in codebook code order.
///
/// Uses design weights when present and uniform weights otherwise. Throws
/// ValidationError for an unknown variable or zero total weight.
CategoricalDistribution marginal_distribution(const SurveyDataset &dataset, std::string_view variable);

} // namespace popsynth
