#include "popsynth/app/cli.h"
#include "popsynth/app/commands.h"
#include "popsynth/core/error.h"

#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace popsynth {

namespace {

void configure_logging(const std::string &level) {
    static const auto logger = [] {
        auto l = spdlog::stderr_color_mt("popsynth");
        spdlog::set_default_logger(l);
        spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
        return l;
    }();
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && level != "off") {
        throw ValidationError(fmt::format("unknown log level '{}'", level));
    }
    logger->set_level(parsed);
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Synthetic survey generation, IPF population synthesis and evaluation", "popsynth"};
    app.require_subcommand(1);

    std::string config_path;
    std::string log_level = "info";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> provider;
    std::optional<std::string> resume;
    app.add_option("--config", config_path, "TOML run configuration");
    app.add_option("--seed", seed, "master seed (overrides synthesis.master_seed)");
    app.add_option("--output-dir", output_dir, "output directory (overrides output_dir)");
    app.add_option("--provider", provider, "provider kind")
        ->check(CLI::IsMember({"openai-compatible", "gemini-compatible", "mock"}));
    app.add_option("--resume", resume, "resume the checkpointed generation run with this id");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    auto *generate = app.add_subcommand("generate", "generate survey records with a language-model provider");
    auto *synthesize = app.add_subcommand("synthesize", "fit the survey to tract marginals and expand a population");
    auto *evaluate = app.add_subcommand("evaluate", "divergence, residual and small-area reports");
    auto *validate = app.add_subcommand("validate", "lint the codebook and data files");
    ValidateTargets targets;
    std::vector<std::string> surveys, populations, marginals, benchmarks;
    validate->add_option("--survey", surveys, "survey CSV to check");
    validate->add_option("--population", populations, "population CSV to check");
    validate->add_option("--marginals", marginals, "marginals CSV to check");
    validate->add_option("--benchmark", benchmarks, "benchmark CSV to check");
    for (auto *sub : {generate, synthesize, evaluate, validate}) {
        sub->fallthrough();
    }

    std::vector<const char *> argv{"popsynth"};
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::validation_error);
    }

    try {
        configure_logging(log_level);
        RunConfig config;
        if (!config_path.empty()) {
            config = load_run_config(config_path);
        } else if (!validate->parsed()) {
            throw ValidationError("--config is required");
        }
        CommandOptions options;
        options.seed = seed;
        if (output_dir) {
            options.output_dir = *output_dir;
        }
        options.provider = provider;
        options.resume = resume;

        if (generate->parsed()) {
            return cmd_generate(config, options, out);
        }
        if (synthesize->parsed()) {
            return cmd_synthesize(config, options, out);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(config, options, out);
        }
        targets.surveys.assign(surveys.begin(), surveys.end());
        targets.populations.assign(populations.begin(), populations.end());
        targets.marginals.assign(marginals.begin(), marginals.end());
        targets.benchmarks.assign(benchmarks.begin(), benchmarks.end());
        return cmd_validate(config, targets, out);
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(exit_code_for(e));
    }
}

} // namespace popsynth
