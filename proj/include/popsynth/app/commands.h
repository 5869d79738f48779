#pragma once

#include "popsynth/app/config.h"
#include "popsynth/codebook/codebook.h"
#include "popsynth/genpipe/provider.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace popsynth {

/// Command-line values that take precedence over the config file.
struct CommandOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::string> provider;
    std::optional<std::string> resume;
    /// Replaces the retry backoff sleep (tests).
    SleepFunction sleep;
};

/// Extra files for `validate` beyond those the config references.
struct ValidateTargets {
    std::vector<std::filesystem::path> surveys;
    std::vector<std::filesystem::path> populations;
    std::vector<std::filesystem::path> marginals;
    std::vector<std::filesystem::path> benchmarks;
};

/// The configured codebook, else the shipped default.
std::shared_ptr<const Codebook> resolve_codebook(const RunConfig &config);

/// Builds the configured provider; HTTP kinds need their credentials variable set.
std::unique_ptr<ProviderClient> make_provider(const RunConfig &config, const CommandOptions &options,
                                              std::shared_ptr<const Codebook> codebook);

/// Each command returns a process exit code and throws on fatal errors.
int cmd_generate(const RunConfig &config, const CommandOptions &options, std::ostream &out);
int cmd_synthesize(const RunConfig &config, const CommandOptions &options, std::ostream &out);
int cmd_evaluate(const RunConfig &config, const CommandOptions &options, std::ostream &out);
int cmd_validate(const RunConfig &config, const ValidateTargets &targets, std::ostream &out);

} // namespace popsynth
