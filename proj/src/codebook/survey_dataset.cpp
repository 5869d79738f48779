#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/core/error.h"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace popsynth {

ValidationVerdict validate_record(const SurveyRecord &record, const Codebook &codebook) {
    ValidationVerdict verdict;
    for (const auto &var : codebook.variables()) {
        const auto it = record.values.find(var.name);
        if (it == record.values.end()) {
            verdict.offending_variables.push_back(var.name);
            verdict.reasons.push_back(fmt::format("{}: missing", var.name));
        } else if (!var.contains(it->second)) {
            verdict.offending_variables.push_back(var.name);
            verdict.reasons.push_back(
                fmt::format("{}: code {} is not a valid response code", var.name, it->second));
        }
    }
    verdict.accepted = verdict.offending_variables.empty();
    return verdict;
}

SurveyDataset::SurveyDataset(std::shared_ptr<const Codebook> codebook, std::string provenance)
    : codebook_{std::move(codebook)}, provenance_{std::move(provenance)} {
    if (!codebook_) {
        throw std::invalid_argument("SurveyDataset requires a codebook");
    }
}

void SurveyDataset::push_weight(std::optional<double> weight) {
    const auto rows_before = size();
    if (weight.has_value()) {
        if (!std::isfinite(*weight) || *weight < 0.0) {
            throw ValidationError(fmt::format("design weight {} must be finite and non-negative", *weight));
        }
        if (!weights_.has_value()) {
            if (rows_before != 0) {
                throw ValidationError("cannot add a weighted record to an unweighted dataset");
            }
            weights_.emplace();
        }
        weights_->push_back(*weight);
    } else if (weights_.has_value()) {
        throw ValidationError("record without a design weight added to a weighted dataset");
    }
}

void SurveyDataset::add(const SurveyRecord &record, std::optional<double> weight) {
    const auto verdict = validate_record(record, *codebook_);
    if (!verdict.accepted) {
        std::string message = "invalid record:";
        for (const auto &reason : verdict.reasons) {
            message += " " + reason + ";";
        }
        throw ValidationError(message);
    }
    push_weight(weight);
    for (const auto &var : codebook_->variables()) {
        codes_.push_back(record.values.at(var.name));
    }
}

void SurveyDataset::add_row(std::span<const int> codes, std::optional<double> weight) {
    const auto &vars = codebook_->variables();
    if (codes.size() != vars.size()) {
        throw ValidationError(
            fmt::format("row has {} values, codebook has {} variables", codes.size(), vars.size()));
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (!vars[j].contains(codes[j])) {
            throw ValidationError(fmt::format("invalid record: {}: code {} is not a valid response code",
                                              vars[j].name, codes[j]));
        }
    }
    push_weight(weight);
    codes_.insert(codes_.end(), codes.begin(), codes.end());
}

void SurveyDataset::append(const SurveyDataset &other) {
    if (!(other.codebook() == *codebook_)) {
        throw ValidationError("cannot concatenate datasets with different codebooks");
    }
    const auto rows_before = size();
    if (other.has_weights() && !has_weights()) {
        weights_.emplace(rows_before, 1.0);
    }
    if (has_weights()) {
        for (std::size_t i = 0; i < other.size(); ++i) {
            weights_->push_back(other.weight(i));
        }
    }
    codes_.insert(codes_.end(), other.codes_.begin(), other.codes_.end());
}

void SurveyDataset::truncate(std::size_t n) {
    if (n >= size()) {
        return;
    }
    codes_.resize(n * width());
    if (weights_) {
        weights_->resize(n);
    }
}

std::span<const int> SurveyDataset::row(std::size_t i) const {
    if (i >= size()) {
        throw std::out_of_range("SurveyDataset::row index out of range");
    }
    return std::span<const int>{codes_}.subspan(i * width(), width());
}

int SurveyDataset::value(std::size_t row, std::size_t variable_index) const {
    return codes_[row * width() + variable_index];
}

SurveyRecord SurveyDataset::record(std::size_t i) const {
    SurveyRecord out;
    const auto values = row(i);
    const auto &vars = codebook_->variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        out.values.emplace(vars[j].name, values[j]);
    }
    return out;
}

double SurveyDataset::weight(std::size_t i) const { return weights_ ? (*weights_)[i] : 1.0; }

double SurveyDataset::total_weight() const {
    if (!weights_) {
        return static_cast<double>(size());
    }
    return std::accumulate(weights_->begin(), weights_->end(), 0.0);
}

bool operator==(const SurveyDataset &lhs, const SurveyDataset &rhs) {
    return *lhs.codebook_ == *rhs.codebook_ && lhs.codes_ == rhs.codes_ && lhs.weights_ == rhs.weights_;
}

CategoricalDistribution marginal_distribution(const SurveyDataset &dataset, std::string_view variable) {
    const auto &codebook = dataset.codebook();
    const auto var_index = codebook.require_index(variable);
    const auto &spec = codebook.variables()[var_index];

    std::vector<double> mass(spec.codes.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto w = dataset.weight(i);
        // Codes were range-checked on insertion.
        mass[*spec.index_of(dataset.value(i, var_index))] += w;
        total += w;
    }
    if (!(total > 0.0)) {
        throw ValidationError(
            fmt::format("marginal of '{}': dataset has zero total weight", spec.name));
    }
    for (auto &m : mass) {
        m /= total;
    }
    return CategoricalDistribution{spec.name, spec.codes, std::move(mass)};
}

} // namespace popsynth
