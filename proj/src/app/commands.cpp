#include "popsynth/app/commands.h"
#include "popsynth/codebook/survey_io.h"
#include "popsynth/core/error.h"
#include "popsynth/genpipe/http_providers.h"
#include "popsynth/genpipe/mock_provider.h"
#include "popsynth/genpipe/pipeline.h"
#include "popsynth/genpipe/prompt.h"
#include "popsynth/ipf/constraints.h"
#include "popsynth/ipf/synthesis.h"
#include "popsynth/metrics/tables.h"
#include "popsynth/sae/sae.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace popsynth {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const RunConfig &config, const CommandOptions &options) {
    auto dir = options.output_dir.value_or(config.output_dir);
    fs::create_directories(dir);
    return dir;
}

void require_file(const fs::path &path, std::string_view what) {
    if (!fs::is_regular_file(path)) {
        throw ValidationError(fmt::format("{} {} does not exist", what, path.string()));
    }
}

void require_label(const std::string &label, std::string_view what) {
    if (label.empty() || label.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
                             std::string::npos) {
        throw ValidationError(fmt::format("{} '{}' may only contain letters, digits, '_', '.' and '-'", what, label));
    }
}

template <typename Write> void write_text_file(const fs::path &path, Write write) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    write(out);
    if (!out) {
        throw ValidationError("failed writing " + path.string());
    }
}

void write_json_file(const fs::path &path, const nlohmann::json &document) {
    write_text_file(path, [&](std::ostream &out) { out << document.dump(2) << '\n'; });
}

std::string read_text_file(const fs::path &path) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream text;
    text << input.rdbuf();
    return text.str();
}

std::vector<std::string> fitting_variables_of(const RunConfig &config) {
    return config.synthesis.fitting_variables.empty() ? default_fitting_variables()
                                                      : config.synthesis.fitting_variables;
}

GenerationSpec generation_spec(const RunConfig &config, std::shared_ptr<const Codebook> codebook) {
    const auto &g = config.generation;
    GenerationSpec spec;
    spec.state_name = g.state;
    spec.year = g.year;
    spec.target_n = g.target_n;
    spec.batch_size = g.batch_size;
    spec.codebook = std::move(codebook);
    spec.sampling = g.sampling;
    if (g.prompt_template) {
        require_file(*g.prompt_template, "prompt template");
        spec.prompt_template = read_text_file(*g.prompt_template);
    } else {
        spec.prompt_template = std::string{default_prompt_template()};
    }
    spec.validate();
    return spec;
}

std::uint64_t master_seed_of(const RunConfig &config, const CommandOptions &options) {
    if (options.seed) {
        return *options.seed;
    }
    if (config.synthesis.master_seed) {
        return *config.synthesis.master_seed;
    }
    throw ValidationError("no master seed: set synthesis.master_seed in the config or pass --seed");
}

} // namespace

std::shared_ptr<const Codebook> resolve_codebook(const RunConfig &config) {
    if (!config.codebook) {
        return default_codebook();
    }
    require_file(*config.codebook, "codebook");
    return std::make_shared<const Codebook>(load_codebook_file(*config.codebook));
}

std::unique_ptr<ProviderClient> make_provider(const RunConfig &config, const CommandOptions &options,
                                              std::shared_ptr<const Codebook> codebook) {
    const auto kind = options.provider.value_or(config.provider.kind);
    const auto &p = config.provider;
    if (kind == "mock") {
        MockOptions mock;
        for (const auto &fixture : p.mock.fixtures) {
            require_file(fixture, "mock fixture");
        }
        mock.fixtures = load_fixture_files(p.mock.fixtures);
        if (p.mock.seed) {
            mock.seed = *p.mock.seed;
        } else if (mock.fixtures.empty()) {
            mock.seed = master_seed_of(config, options);
        }
        mock.invalid_every = p.mock.invalid_every;
        mock.truncate_after_rows = p.mock.truncate_after_rows;
        mock.fail_from_batch = p.mock.fail_from_batch;
        return std::make_unique<MockProvider>(std::move(codebook), std::move(mock));
    }
    if (kind != "openai-compatible" && kind != "gemini-compatible") {
        throw ValidationError(
            fmt::format("unknown provider '{}' (expected openai-compatible, gemini-compatible or mock)", kind));
    }
    if (p.endpoint.empty() || p.model_id.empty()) {
        throw ValidationError(fmt::format("provider '{}' needs provider.endpoint and provider.model_id", kind));
    }
    auto key = resolve_credentials(p.credentials_env);
    HttpProviderSettings settings{p.endpoint, p.model_id, std::chrono::seconds{p.timeout_seconds}};
    std::shared_ptr<HttpTransport> transport = make_http_transport();
    if (kind == "openai-compatible") {
        return std::make_unique<OpenAiCompatibleProvider>(std::move(settings), std::move(key), std::move(transport));
    }
    return std::make_unique<GeminiCompatibleProvider>(std::move(settings), std::move(key), std::move(transport));
}

int cmd_generate(const RunConfig &config, const CommandOptions &options, std::ostream &out) {
    require_label(config.label, "label");
    const auto codebook = resolve_codebook(config);
    const auto spec = generation_spec(config, codebook);
    auto provider = make_provider(config, options, codebook);
    const auto dir = output_dir(config, options);

    PipelineOptions pipeline;
    pipeline.parallelism = config.generation.parallelism;
    pipeline.dead_batch_limit = config.generation.dead_batch_limit;
    pipeline.retry.max_retries = config.generation.max_retries;
    pipeline.retry.initial_backoff = std::chrono::milliseconds{config.generation.initial_backoff_ms};
    pipeline.sleep = options.sleep;

    GenerationResult result = [&] {
        if (options.resume) {
            require_label(*options.resume, "run id");
            return resume_generation(dir / "checkpoints" / *options.resume, spec, *provider, pipeline);
        }
        auto run_id = config.generation.run_id;
        if (run_id.empty()) {
            run_id = fmt::format("{}-{}", config.label, spec_digest(spec).substr(0, 12));
        }
        require_label(run_id, "run id");
        return run_generation(spec, *provider, dir / "checkpoints" / run_id, pipeline);
    }();

    const auto survey_path = dir / fmt::format("survey_{}.csv", config.label);
    write_survey_csv(survey_path, result.dataset);
    auto summary = to_json(result.summary);
    summary["output"] = survey_path.string();
    write_json_file(dir / fmt::format("generate_summary_{}.json", config.label), summary);
    out << summary.dump(2) << '\n';
    spdlog::info("wrote {} records to {}", result.dataset.size(), survey_path.string());
    return 0;
}

int cmd_synthesize(const RunConfig &config, const CommandOptions &options, std::ostream &out) {
    require_label(config.label, "label");
    const auto &s = config.synthesis;
    if (!s.survey || !s.marginals) {
        throw ValidationError("synthesize needs synthesis.survey and synthesis.marginals");
    }
    require_file(*s.survey, "survey");
    require_file(*s.marginals, "marginals");
    const auto master_seed = master_seed_of(config, options);
    const auto codebook = resolve_codebook(config);
    const auto fitting = fitting_variables_of(config);
    const auto dir = output_dir(config, options);

    const auto survey = read_survey_csv(*s.survey, codebook);
    const auto raw = read_marginals_csv(*s.marginals, codebook, fitting);
    const auto constraints = harmonize_marginals(raw);

    SynthesisConfig synthesis;
    synthesis.ipf.max_sweeps = s.max_sweeps;
    synthesis.ipf.rel_tolerance = s.tolerance;
    synthesis.threads = s.threads;

    const auto population_path = dir / fmt::format("population_{}.csv", config.label);
    const auto diagnostics_path = dir / fmt::format("diagnostics_{}.json", config.label);
    const auto diagnostics_json = [&](const std::vector<TractDiagnostics> &tracts) {
        nlohmann::json list = nlohmann::json::array();
        double unreachable = 0.0;
        std::uint64_t individuals = 0;
        for (const auto &d : tracts) {
            list.push_back(to_json(d));
            unreachable += d.unreachable_mass;
            individuals += d.individuals;
        }
        return nlohmann::json{{"label", config.label},
                              {"survey", survey.provenance()},
                              {"master_seed", master_seed},
                              {"fitting_variables", fitting},
                              {"tolerance", s.tolerance},
                              {"max_sweeps", s.max_sweeps},
                              {"tracts_completed", tracts.size()},
                              {"individuals", individuals},
                              {"unreachable_mass", unreachable},
                              {"tracts", list}};
    };

    try {
        const auto population = synthesize_population(survey, constraints, synthesis, master_seed);
        write_population_csv(population_path, population);
        auto report = diagnostics_json(population.diagnostics());
        report["output"] = population_path.string();
        write_json_file(diagnostics_path, report);
        for (const auto &d : population.diagnostics()) {
            for (const auto &warning : d.warnings) {
                spdlog::warn("{}", warning);
            }
        }
        out << fmt::format("{} individuals in {} tracts written to {}\n", population.size(),
                           population.tracts().size(), population_path.string());
    } catch (const SynthesisError &e) {
        auto report = diagnostics_json(e.completed());
        report["error"] = e.what();
        write_json_file(diagnostics_path, report);
        throw;
    }
    return 0;
}

int cmd_evaluate(const RunConfig &config, const CommandOptions &options, std::ostream &out) {
    const auto &e = config.evaluation;
    if (!e.ground_truth) {
        throw ValidationError("evaluate needs evaluation.ground_truth");
    }
    require_file(*e.ground_truth, "ground truth");
    if (e.surveys.empty() && e.populations.empty()) {
        throw ValidationError("evaluate needs at least one evaluation.surveys or evaluation.populations entry");
    }
    for (const auto &c : e.surveys) {
        require_label(c.label, "candidate label");
        require_file(c.path, "survey");
    }
    for (const auto &c : e.populations) {
        require_label(c.label, "candidate label");
        require_file(c.path, "population");
    }
    for (const auto &b : e.benchmarks) {
        require_label(b.label, "benchmark label");
        require_file(b.path, "benchmark");
    }
    const auto codebook = resolve_codebook(config);
    const auto dir = output_dir(config, options);
    const auto variables = e.variables.empty() ? codebook->names() : e.variables;
    for (const auto &v : variables) {
        static_cast<void>(codebook->require_index(v));
    }

    const auto truth = read_survey_csv(*e.ground_truth, codebook);
    std::vector<SurveyDataset> surveys;
    for (const auto &c : e.surveys) {
        surveys.push_back(read_survey_csv(c.path, codebook));
    }
    std::vector<SyntheticPopulation> populations;
    for (const auto &c : e.populations) {
        populations.push_back(read_population_csv(c.path, codebook));
    }

    nlohmann::json summary{{"ground_truth", e.ground_truth->string()}, {"variables", variables}};
    std::vector<LabeledResiduals> residuals;
    const auto residuals_for = [&](const std::string &stage, const std::string &label, const SurveyDataset &model) {
        for (const auto &v : variables) {
            residuals.push_back({stage, label,
                                 category_residuals(marginal_distribution(truth, v), marginal_distribution(model, v),
                                                    *codebook)});
        }
    };
    const auto emit_table = [&](const std::string &name, const DivergenceTable &table) {
        write_text_file(dir / (name + ".csv"), [&](std::ostream &o) { write_divergence_csv(o, table); });
        write_json_file(dir / (name + ".json"), to_json(table));
        summary[name] = to_json(table);
    };

    std::optional<DivergenceTable> pre;
    std::optional<DivergenceTable> post;
    if (!surveys.empty()) {
        std::vector<LabeledDataset> candidates;
        for (std::size_t i = 0; i < surveys.size(); ++i) {
            candidates.push_back({e.surveys[i].label, &surveys[i]});
            residuals_for("pre", e.surveys[i].label, surveys[i]);
        }
        pre = divergence_table(truth, candidates, variables);
        emit_table("divergence_pre", *pre);
    }
    if (!populations.empty()) {
        std::vector<LabeledDataset> candidates;
        for (std::size_t i = 0; i < populations.size(); ++i) {
            candidates.push_back({e.populations[i].label, &populations[i].attributes()});
            residuals_for("post", e.populations[i].label, populations[i].attributes());
        }
        post = divergence_table(truth, candidates, variables);
        emit_table("divergence_post", *post);
    }
    if (pre && post) {
        std::vector<std::string> common;
        for (const auto &label : pre->columns) {
            if (std::find(post->columns.begin(), post->columns.end(), label) != post->columns.end()) {
                common.push_back(label);
            }
        }
        if (common.empty()) {
            spdlog::warn("no candidate label appears both as a survey and as a population; delta table skipped");
        } else {
            const auto delta = divergence_delta(select_columns(*pre, common), select_columns(*post, common));
            write_text_file(dir / "divergence_delta.csv", [&](std::ostream &o) { write_delta_csv(o, delta); });
            write_json_file(dir / "divergence_delta.json", to_json(delta));
            summary["divergence_delta"] = to_json(delta);
        }
    }
    write_text_file(dir / "residuals.csv", [&](std::ostream &o) { write_residuals_csv(o, residuals); });
    nlohmann::json residual_json = nlohmann::json::array();
    for (const auto &r : residuals) {
        auto item = to_json(r.report);
        item["stage"] = r.stage;
        item["candidate"] = r.candidate;
        residual_json.push_back(std::move(item));
    }
    write_json_file(dir / "residuals.json", residual_json);

    int status = 0;
    nlohmann::json sae = nlohmann::json::array();
    for (const auto &b : e.benchmarks) {
        for (std::size_t i = 0; i < populations.size(); ++i) {
            const auto &population_label = e.populations[i].label;
            if (!b.population.empty() && b.population != population_label) {
                continue;
            }
            const auto name = fmt::format("sae_{}_{}", b.label, population_label);
            try {
                const OutcomePredicate predicate{b.variable, b.positive_codes, b.label};
                const auto benchmark = read_benchmark_csv(b.path, b.source);
                const auto report = evaluate_benchmark(populations[i], predicate, benchmark);
                write_text_file(dir / (name + ".csv"),
                                [&](std::ostream &o) { write_residual_map_csv(o, report.residuals); });
                auto item = to_json(report);
                item["population"] = population_label;
                write_json_file(dir / (name + ".json"), item);
                sae.push_back(std::move(item));
            } catch (const ValidationError &error) {
                spdlog::error("{}: {}", name, error.what());
                sae.push_back({{"outcome", b.label}, {"population", population_label}, {"error", error.what()}});
                status = static_cast<int>(ExitCode::validation_error);
            }
        }
    }
    summary["sae"] = sae;
    write_json_file(dir / "evaluation_summary.json", summary);
    out << fmt::format("evaluation reports written to {}\n", dir.string());
    return status;
}

int cmd_validate(const RunConfig &config, const ValidateTargets &targets, std::ostream &out) {
    const auto codebook = resolve_codebook(config);
    out << fmt::format("ok codebook ({} variables)\n", codebook->size());
    std::size_t checked = 1;

    auto surveys = targets.surveys;
    auto populations = targets.populations;
    auto marginals = targets.marginals;
    auto benchmarks = targets.benchmarks;
    if (config.synthesis.survey) {
        surveys.push_back(*config.synthesis.survey);
    }
    if (config.synthesis.marginals) {
        marginals.push_back(*config.synthesis.marginals);
    }
    if (config.evaluation.ground_truth) {
        surveys.push_back(*config.evaluation.ground_truth);
    }
    for (const auto &c : config.evaluation.surveys) {
        surveys.push_back(c.path);
    }
    for (const auto &c : config.evaluation.populations) {
        populations.push_back(c.path);
    }
    for (const auto &b : config.evaluation.benchmarks) {
        benchmarks.push_back(b.path);
        OutcomePredicate{b.variable, b.positive_codes, b.label}.validate(*codebook);
    }

    for (const auto &path : surveys) {
        const auto ds = read_survey_csv(path, codebook);
        out << fmt::format("ok survey {} ({} records)\n", path.string(), ds.size());
        ++checked;
    }
    for (const auto &path : populations) {
        const auto pop = read_population_csv(path, codebook);
        out << fmt::format("ok population {} ({} individuals)\n", path.string(), pop.size());
        ++checked;
    }
    for (const auto &path : marginals) {
        const auto set = harmonize_marginals(read_marginals_csv(path, codebook, fitting_variables_of(config)));
        out << fmt::format("ok marginals {} ({} tracts)\n", path.string(), set.tracts.size());
        ++checked;
    }
    for (const auto &path : benchmarks) {
        const auto table = read_benchmark_csv(path, path.filename().string());
        out << fmt::format("ok benchmark {} ({} tracts)\n", path.string(), table.proportions.size());
        ++checked;
    }
    if (config.generation.target_n > 0) {
        const auto spec = generation_spec(config, codebook);
        out << fmt::format("ok generation spec (digest {})\n", spec_digest(spec));
        ++checked;
    }
    out << fmt::format("{} item(s) valid\n", checked);
    return 0;
}

} // namespace popsynth
