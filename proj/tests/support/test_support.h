#pragma once

#include "oracles.h"
#include "popsynth/codebook/survey_dataset.h"
#include "popsynth/ipf/constraints.h"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace popsynth::test {

/// Directory removed (recursively) on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const std::filesystem::path &path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

std::filesystem::path fixture_path(const std::string &name);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, const std::string &content);

/// Codebook of variables v0, v1, ... with codes 1..n_codes[j].
std::shared_ptr<const Codebook> numbered_codebook(const std::vector<std::size_t> &n_codes);

/// A random point of the simplex; with @p sparse, some entries are exactly zero.
std::vector<double> random_simplex(std::mt19937_64 &rng, std::size_t dim, bool sparse = false);

/// @brief Random consistent fitting problem together with its oracle form.
///
/// Targets are the category totals of a random positive reweighting of the
/// records, so every target is reachable.
struct FitProblem {
    SurveyDataset survey;
    TractMarginals marginals;
    std::vector<std::string> fitting;
    oracle::IpfInstance instance;
};

FitProblem random_fit_problem(std::mt19937_64 &rng, std::size_t max_records, std::size_t n_vars,
                              std::size_t max_categories, bool design_weights);

/// @brief Consistent, fully reachable tract marginals for @p survey.
///
/// Each tract's targets are the category totals of a random positive
/// reweighting of the survey records, scaled so every variable sums to the
/// tract's total.
ConstraintSet tilted_constraints(const SurveyDataset &survey, const std::vector<std::string> &fitting,
                                 const std::vector<std::pair<std::string, double>> &tracts, std::mt19937_64 &rng);

/// Default-codebook survey from the synthetic mock generator.
SurveyDataset mock_survey(std::uint64_t seed, std::size_t n);

} // namespace popsynth::test
