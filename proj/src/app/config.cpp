#include "popsynth/app/config.h"
#include "popsynth/core/error.h"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace popsynth {

namespace fs = std::filesystem;

namespace {

class Section {
  public:
    Section(const toml::table &table, std::string name, const std::string &source, const fs::path &base)
        : table_{table}, name_{std::move(name)}, source_{source}, base_{base} {}

    void allow(std::initializer_list<std::string_view> keys) const {
        for (const auto &[key, node] : table_) {
            bool known = false;
            for (const auto k : keys) {
                known = known || key.str() == k;
            }
            if (!known) {
                throw error(std::string{key.str()}, "unknown key");
            }
        }
    }

    [[nodiscard]] std::optional<Section> table(std::string_view key) const {
        const auto *node = table_.get(key);
        if (node == nullptr) {
            return std::nullopt;
        }
        const auto *sub = node->as_table();
        if (sub == nullptr) {
            throw error(std::string{key}, "expected a table");
        }
        return Section{*sub, qualified(key), source_, base_};
    }

    [[nodiscard]] std::vector<Section> tables(std::string_view key) const {
        std::vector<Section> out;
        const auto *node = table_.get(key);
        if (node == nullptr) {
            return out;
        }
        const auto *array = node->as_array();
        if (array == nullptr) {
            throw error(std::string{key}, "expected an array of tables");
        }
        for (std::size_t i = 0; i < array->size(); ++i) {
            const auto *sub = array->get(i)->as_table();
            if (sub == nullptr) {
                throw error(std::string{key}, "expected an array of tables");
            }
            out.emplace_back(*sub, fmt::format("{}[{}]", qualified(key), i), source_, base_);
        }
        return out;
    }

    template <typename T> void read(std::string_view key, T &target) const {
        if (auto v = get<T>(key)) {
            target = std::move(*v);
        }
    }

    template <typename T> void read(std::string_view key, std::optional<T> &target) const {
        if (auto v = get<T>(key)) {
            target = std::move(*v);
        }
    }

    void read_path(std::string_view key, std::optional<fs::path> &target) const {
        if (auto v = get<std::string>(key)) {
            target = resolve(*v);
        }
    }

    void read_path(std::string_view key, fs::path &target) const {
        if (auto v = get<std::string>(key)) {
            target = resolve(*v);
        }
    }

    template <typename T> [[nodiscard]] std::optional<T> get(std::string_view key) const {
        const auto *node = table_.get(key);
        if (node == nullptr) {
            return std::nullopt;
        }
        if constexpr (std::is_same_v<T, std::string>) {
            if (const auto v = node->value_exact<std::string>()) {
                return *v;
            }
            throw error(std::string{key}, "expected a string");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (const auto v = node->value_exact<bool>()) {
                return *v;
            }
            throw error(std::string{key}, "expected a boolean");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (node->is_floating_point() || node->is_integer()) {
                return static_cast<T>(*node->value<double>());
            }
            throw error(std::string{key}, "expected a number");
        } else if constexpr (std::is_integral_v<T>) {
            const auto v = node->value_exact<std::int64_t>();
            if (!v) {
                throw error(std::string{key}, "expected an integer");
            }
            if (*v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
                static_cast<std::uint64_t>(*v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()) ||
                (std::is_unsigned_v<T> && *v < 0)) {
                throw error(std::string{key}, fmt::format("value {} out of range", *v));
            }
            return static_cast<T>(*v);
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            const auto *array = node->as_array();
            std::vector<std::string> out;
            if (array != nullptr) {
                for (const auto &item : *array) {
                    if (const auto v = item.value_exact<std::string>()) {
                        out.push_back(*v);
                        continue;
                    }
                    throw error(std::string{key}, "expected an array of strings");
                }
                return out;
            }
            throw error(std::string{key}, "expected an array of strings");
        } else if constexpr (std::is_same_v<T, std::set<int>>) {
            const auto *array = node->as_array();
            std::set<int> out;
            if (array != nullptr) {
                for (const auto &item : *array) {
                    const auto v = item.value_exact<std::int64_t>();
                    if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
                        throw error(std::string{key}, "expected an array of integer codes");
                    }
                    out.insert(static_cast<int>(*v));
                }
                return out;
            }
            throw error(std::string{key}, "expected an array of integer codes");
        } else {
            static_assert(sizeof(T) == 0, "unsupported config value type");
        }
    }

    [[nodiscard]] fs::path resolve(const std::string &value) const {
        const fs::path p{value};
        return p.is_absolute() ? p : base_ / p;
    }

    [[nodiscard]] ValidationError error(const std::string &key, const std::string &message) const {
        return ValidationError(fmt::format("{}: {}: {}", source_, qualified(key), message));
    }

  private:
    [[nodiscard]] std::string qualified(std::string_view key) const {
        return name_.empty() ? std::string{key} : name_ + "." + std::string{key};
    }

    const toml::table &table_;
    std::string name_;
    const std::string &source_;
    const fs::path &base_;
};

void read_provider(const Section &s, ProviderConfig &p) {
    s.allow({"kind", "endpoint", "model_id", "credentials_env", "timeout_seconds", "mock"});
    s.read("kind", p.kind);
    if (p.kind != "mock" && p.kind != "openai-compatible" && p.kind != "gemini-compatible") {
        throw s.error("kind", fmt::format("unknown provider '{}' (expected openai-compatible, gemini-compatible or mock)",
                                          p.kind));
    }
    s.read("endpoint", p.endpoint);
    s.read("model_id", p.model_id);
    s.read("credentials_env", p.credentials_env);
    s.read("timeout_seconds", p.timeout_seconds);
    if (const auto mock = s.table("mock")) {
        mock->allow({"seed", "fixtures", "invalid_every", "truncate_after_rows", "fail_from_batch"});
        mock->read("seed", p.mock.seed);
        if (const auto fixtures = mock->get<std::vector<std::string>>("fixtures")) {
            for (const auto &f : *fixtures) {
                p.mock.fixtures.push_back(mock->resolve(f));
            }
        }
        mock->read("invalid_every", p.mock.invalid_every);
        mock->read("truncate_after_rows", p.mock.truncate_after_rows);
        mock->read("fail_from_batch", p.mock.fail_from_batch);
    }
}

void read_generation(const Section &s, GenerationConfig &g) {
    s.allow({"state", "year", "target_n", "batch_size", "prompt_template", "parallelism", "dead_batch_limit",
             "max_retries", "initial_backoff_ms", "run_id", "sampling"});
    s.read("state", g.state);
    s.read("year", g.year);
    s.read("target_n", g.target_n);
    s.read("batch_size", g.batch_size);
    s.read_path("prompt_template", g.prompt_template);
    s.read("parallelism", g.parallelism);
    s.read("dead_batch_limit", g.dead_batch_limit);
    s.read("max_retries", g.max_retries);
    s.read("initial_backoff_ms", g.initial_backoff_ms);
    s.read("run_id", g.run_id);
    if (const auto sampling = s.table("sampling")) {
        sampling->allow({"temperature", "top_p", "frequency_penalty", "presence_penalty", "max_output_tokens"});
        sampling->read("temperature", g.sampling.temperature);
        sampling->read("top_p", g.sampling.top_p);
        sampling->read("frequency_penalty", g.sampling.frequency_penalty);
        sampling->read("presence_penalty", g.sampling.presence_penalty);
        sampling->read("max_output_tokens", g.sampling.max_output_tokens);
    }
}

void read_synthesis(const Section &s, SynthesisSettings &y) {
    s.allow({"survey", "marginals", "fitting_variables", "tolerance", "max_sweeps", "master_seed", "threads"});
    s.read_path("survey", y.survey);
    s.read_path("marginals", y.marginals);
    s.read("fitting_variables", y.fitting_variables);
    s.read("tolerance", y.tolerance);
    s.read("max_sweeps", y.max_sweeps);
    s.read("master_seed", y.master_seed);
    s.read("threads", y.threads);
}

LabeledPath read_labeled(const Section &s) {
    s.allow({"label", "path"});
    LabeledPath out;
    const auto label = s.get<std::string>("label");
    if (!label || label->empty()) {
        throw s.error("label", "required");
    }
    out.label = *label;
    std::optional<fs::path> path;
    s.read_path("path", path);
    if (!path) {
        throw s.error("path", "required");
    }
    out.path = *path;
    return out;
}

void read_evaluation(const Section &s, EvaluationConfig &e) {
    s.allow({"ground_truth", "variables", "surveys", "populations", "benchmarks"});
    s.read_path("ground_truth", e.ground_truth);
    s.read("variables", e.variables);
    for (const auto &item : s.tables("surveys")) {
        e.surveys.push_back(read_labeled(item));
    }
    for (const auto &item : s.tables("populations")) {
        e.populations.push_back(read_labeled(item));
    }
    for (const auto &item : s.tables("benchmarks")) {
        item.allow({"label", "source", "variable", "positive_codes", "path", "population"});
        BenchmarkConfig b;
        for (const auto *key : {"label", "variable", "path"}) {
            if (!item.get<std::string>(key)) {
                throw item.error(key, "required");
            }
        }
        item.read("label", b.label);
        item.read("source", b.source);
        item.read("variable", b.variable);
        item.read("positive_codes", b.positive_codes);
        item.read_path("path", b.path);
        item.read("population", b.population);
        if (b.source.empty()) {
            b.source = b.label;
        }
        e.benchmarks.push_back(std::move(b));
    }
}

} // namespace

RunConfig parse_run_config(std::string_view text, const fs::path &base_dir, const std::string &source_name) {
    toml::table root;
    try {
        root = toml::parse(text, source_name);
    } catch (const toml::parse_error &e) {
        throw ValidationError(fmt::format("{}: line {}: {}", source_name, e.source().begin.line, e.description()));
    }
    RunConfig config;
    config.source = source_name;
    const Section top{root, "", source_name, base_dir};
    top.allow({"codebook", "output_dir", "label", "provider", "generation", "synthesis", "evaluation"});
    top.read_path("codebook", config.codebook);
    top.read_path("output_dir", config.output_dir);
    if (!root.contains("output_dir")) {
        config.output_dir = base_dir;
    }
    top.read("label", config.label);
    if (const auto s = top.table("provider")) {
        read_provider(*s, config.provider);
    }
    if (const auto s = top.table("generation")) {
        read_generation(*s, config.generation);
    }
    if (const auto s = top.table("synthesis")) {
        read_synthesis(*s, config.synthesis);
    }
    if (const auto s = top.table("evaluation")) {
        read_evaluation(*s, config.evaluation);
    }
    if (config.label.empty()) {
        throw ValidationError(source_name + ": label must not be empty");
    }
    return config;
}

RunConfig load_run_config(const fs::path &path) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw ValidationError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << input.rdbuf();
    auto base = fs::absolute(path).parent_path();
    return parse_run_config(text.str(), base, path.string());
}

} // namespace popsynth
