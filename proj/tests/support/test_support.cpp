#include "test_support.h"

#include "popsynth/genpipe/batch.h"
#include "popsynth/genpipe/mock_provider.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace popsynth::test {

namespace fs = std::filesystem;

TempDir::TempDir() {
    auto pattern = (fs::temp_directory_path() / "popsynth-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path fixture_path(const std::string &name) { return fs::path{POPSYNTH_FIXTURE_DIR} / name; }

std::string read_file(const fs::path &path) {
    std::ifstream input{path, std::ios::binary};
    if (!input) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream text;
    text << input.rdbuf();
    return text.str();
}

void write_file(const fs::path &path, const std::string &content) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    out << content;
}

std::shared_ptr<const Codebook> numbered_codebook(const std::vector<std::size_t> &n_codes) {
    std::vector<VariableSpec> variables;
    for (std::size_t j = 0; j < n_codes.size(); ++j) {
        VariableSpec spec;
        spec.name = "v" + std::to_string(j);
        for (std::size_t k = 1; k <= n_codes[j]; ++k) {
            spec.codes.push_back(static_cast<int>(k));
        }
        variables.push_back(std::move(spec));
    }
    return std::make_shared<const Codebook>(std::move(variables));
}

std::vector<double> random_simplex(std::mt19937_64 &rng, std::size_t dim, bool sparse) {
    std::exponential_distribution<double> draw{1.0};
    std::bernoulli_distribution zero{0.25};
    std::vector<double> p(dim);
    double total = 0.0;
    for (auto &x : p) {
        x = sparse && zero(rng) ? 0.0 : draw(rng);
        total += x;
    }
    if (total == 0.0) {
        p[0] = 1.0;
        total = 1.0;
    }
    for (auto &x : p) {
        x /= total;
    }
    return p;
}

FitProblem random_fit_problem(std::mt19937_64 &rng, std::size_t max_records, std::size_t n_vars,
                              std::size_t max_categories, bool design_weights) {
    std::uniform_int_distribution<std::size_t> n_records_draw{2, max_records};
    std::uniform_int_distribution<std::size_t> n_cat_draw{2, max_categories};
    std::uniform_real_distribution<double> weight_draw{0.5, 3.0};
    std::uniform_real_distribution<double> tilt_draw{0.3, 3.0};
    std::uniform_real_distribution<double> scale_draw{5.0, 500.0};

    std::vector<std::size_t> n_codes(n_vars);
    for (auto &n : n_codes) {
        n = n_cat_draw(rng);
    }
    auto codebook = numbered_codebook(n_codes);
    const auto n_records = n_records_draw(rng);

    FitProblem problem{SurveyDataset{codebook}, {}, {}, {}};
    for (std::size_t j = 0; j < n_vars; ++j) {
        problem.fitting.push_back("v" + std::to_string(j));
    }
    problem.instance.targets.assign(n_vars, {});
    for (std::size_t j = 0; j < n_vars; ++j) {
        problem.instance.targets[j].assign(n_codes[j], 0.0);
    }

    const double scale = scale_draw(rng);
    for (std::size_t i = 0; i < n_records; ++i) {
        std::vector<int> codes(n_vars);
        std::vector<std::size_t> cats(n_vars);
        for (std::size_t j = 0; j < n_vars; ++j) {
            cats[j] = std::uniform_int_distribution<std::size_t>{0, n_codes[j] - 1}(rng);
            codes[j] = static_cast<int>(cats[j] + 1);
        }
        const double w = design_weights ? weight_draw(rng) : 1.0;
        problem.survey.add_row(codes, design_weights ? std::optional<double>{w} : std::nullopt);
        problem.instance.categories.push_back(cats);
        problem.instance.start.push_back(w);
        const double reweighted = w * tilt_draw(rng) * scale;
        for (std::size_t j = 0; j < n_vars; ++j) {
            problem.instance.targets[j][cats[j]] += reweighted;
        }
    }
    problem.marginals.geoid = "00000000001";
    for (std::size_t j = 0; j < n_vars; ++j) {
        problem.marginals.counts[problem.fitting[j]] = problem.instance.targets[j];
    }
    double total = 0.0;
    for (const auto t : problem.instance.targets[0]) {
        total += t;
    }
    problem.marginals.population_total = total;
    return problem;
}

ConstraintSet tilted_constraints(const SurveyDataset &survey, const std::vector<std::string> &fitting,
                                 const std::vector<std::pair<std::string, double>> &tracts, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> tilt{0.3, 3.0};
    ConstraintSet set;
    set.codebook = survey.codebook_ptr();
    set.fitting_variables = fitting;
    for (const auto &[geoid, total] : tracts) {
        std::vector<double> weights(survey.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < survey.size(); ++i) {
            weights[i] = survey.weight(i) * tilt(rng);
            sum += weights[i];
        }
        TractMarginals m;
        m.geoid = geoid;
        for (const auto &variable : fitting) {
            const auto index = survey.codebook().require_index(variable);
            const auto &spec = survey.codebook().variables()[index];
            std::vector<double> counts(spec.codes.size(), 0.0);
            for (std::size_t i = 0; i < survey.size(); ++i) {
                counts[*spec.index_of(survey.value(i, index))] += weights[i] * total / sum;
            }
            m.counts[variable] = counts;
        }
        set.tracts[geoid] = m;
    }
    return harmonize_marginals(set);
}

SurveyDataset mock_survey(std::uint64_t seed, std::size_t n) {
    auto codebook = default_codebook();
    MockOptions options;
    options.seed = seed;
    MockProvider provider{codebook, options};
    CompletionRequest request;
    request.requested_rows = n;
    const auto outcome = parse_and_validate_batch(provider.complete(request), *codebook);
    SurveyDataset survey{codebook, "mock"};
    for (const auto &record : outcome.accepted) {
        survey.add(record);
    }
    return survey;
}

} // namespace popsynth::test
