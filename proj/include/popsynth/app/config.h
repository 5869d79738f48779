#pragma once

#include "popsynth/genpipe/generation_spec.h"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace popsynth {

struct MockConfig {
    std::optional<std::uint64_t> seed;
    std::vector<std::filesystem::path> fixtures;
    std::size_t invalid_every = 0;
    std::optional<std::size_t> truncate_after_rows;
    std::optional<std::size_t> fail_from_batch;
};

struct ProviderConfig {
    /// openai-compatible, gemini-compatible or mock.
    std::string kind = "mock";
    std::string endpoint;
    std::string model_id;
    std::string credentials_env = "POPSYNTH_PROVIDER_KEY";
    long timeout_seconds = 600;
    MockConfig mock;
};

struct GenerationConfig {
    std::string state;
    int year = 2023;
    std::size_t target_n = 0;
    std::size_t batch_size = 75;
    /// Template file; when unset the shipped template is used.
    std::optional<std::filesystem::path> prompt_template;
    std::size_t parallelism = 1;
    std::size_t dead_batch_limit = 10;
    std::size_t max_retries = 5;
    long initial_backoff_ms = 500;
    std::string run_id;
    SamplingParams sampling;
};

struct SynthesisSettings {
    std::optional<std::filesystem::path> survey;
    std::optional<std::filesystem::path> marginals;
    std::vector<std::string> fitting_variables;
    double tolerance = 1e-6;
    std::size_t max_sweeps = 100;
    std::optional<std::uint64_t> master_seed;
    unsigned threads = 1;
};

struct LabeledPath {
    std::string label;
    std::filesystem::path path;
};

struct BenchmarkConfig {
    std::string label;
    std::string source;
    std::string variable;
    std::set<int> positive_codes;
    std::filesystem::path path;
    /// Population label to compare; empty compares every population.
    std::string population;
};

struct EvaluationConfig {
    std::optional<std::filesystem::path> ground_truth;
    /// Empty means every codebook variable.
    std::vector<std::string> variables;
    std::vector<LabeledPath> surveys;
    std::vector<LabeledPath> populations;
    std::vector<BenchmarkConfig> benchmarks;
};

/// @brief A parsed TOML run configuration. Relative paths are resolved against the file's directory.
struct RunConfig {
    std::filesystem::path source;
    std::optional<std::filesystem::path> codebook;
    std::filesystem::path output_dir = ".";
    std::string label = "run";
    ProviderConfig provider;
    GenerationConfig generation;
    SynthesisSettings synthesis;
    EvaluationConfig evaluation;
};

/// Parses configuration text; unknown keys and wrongly typed values are ValidationErrors.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path &base_dir,
                           const std::string &source_name = "<config>");
RunConfig load_run_config(const std::filesystem::path &path);

} // namespace popsynth
