#include "popsynth/ipf/synthesis.h"
#include "popsynth/core/hash.h"
#include "popsynth/ipf/integerize.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>

#include <fmt/format.h>

namespace popsynth {

TractResult synthesize_tract(const SurveyDataset &survey, const TractMarginals &marginals,
                             const std::vector<std::string> &fitting_variables, const IpfConfig &config,
                             std::uint64_t master_seed) {
    if (!(marginals.population_total > 0.0) || !std::isfinite(marginals.population_total)) {
        throw ValidationError(
            fmt::format("tract {}: population total is not positive (harmonize the marginals first)", marginals.geoid));
    }
    auto fit = ipf_fit(survey, marginals, fitting_variables, config);

    TractResult result;
    auto &d = result.diagnostics;
    d.geoid = marginals.geoid;
    d.seed = derive_seed(master_seed, marginals.geoid);
    d.population_total = marginals.population_total;
    d.rounded_total = static_cast<std::uint64_t>(round_half_even(marginals.population_total));
    d.iterations = fit.iterations_used;
    d.converged = fit.converged;
    d.tae = fit.tae;
    d.max_rel_error = fit.max_rel_error;
    d.unreachable_mass = fit.unreachable_mass;
    d.warnings = std::move(fit.warnings);
    for (const auto &variable : marginals.zero_total_variables) {
        d.warnings.push_back(fmt::format("tract {}: fitting variable '{}' has zero total", d.geoid, variable));
    }

    Rng rng{d.seed};
    result.counts = integerize_trs(fit.weights, rng);
    d.individuals = std::accumulate(result.counts.begin(), result.counts.end(), std::uint64_t{0});
    return result;
}

SyntheticPopulation synthesize_population(const SurveyDataset &survey, const ConstraintSet &constraints,
                                          const SynthesisConfig &config, std::uint64_t master_seed) {
    if (!constraints.codebook || !(*constraints.codebook == survey.codebook())) {
        throw ValidationError("synthesize_population: constraint codebook differs from the survey codebook");
    }
    constraints.validate();

    std::vector<const TractMarginals *> tracts;
    tracts.reserve(constraints.tracts.size());
    for (const auto &[geoid, marginals] : constraints.tracts) {
        tracts.push_back(&marginals);
    }

    std::vector<std::optional<TractResult>> results(tracts.size());
    std::vector<std::exception_ptr> errors(tracts.size());
    const auto work = [&](std::size_t t) {
        try {
            results[t] = synthesize_tract(survey, *tracts[t], constraints.fitting_variables, config.ipf, master_seed);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };

    const auto workers = std::min<std::size_t>(std::max(config.threads, 1U), tracts.size());
    if (workers <= 1) {
        for (std::size_t t = 0; t < tracts.size(); ++t) {
            work(t);
            if (errors[t]) {
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (auto t = next.fetch_add(1); t < tracts.size(); t = next.fetch_add(1)) {
                    work(t);
                }
            });
        }
    }

    SyntheticPopulation population{survey.codebook_ptr(), survey.provenance(), master_seed};
    std::vector<TractDiagnostics> completed;
    for (std::size_t t = 0; t < tracts.size(); ++t) {
        if (errors[t]) {
            try {
                std::rethrow_exception(errors[t]);
            } catch (const std::exception &e) {
                throw SynthesisError(fmt::format("tract {}: {}", tracts[t]->geoid, e.what()), std::move(completed));
            }
        }
        auto &result = *results[t];
        population.append_replicas(survey, result.counts, tracts[t]->geoid);
        completed.push_back(result.diagnostics);
        population.add_diagnostics(std::move(result.diagnostics));
    }
    return population;
}

} // namespace popsynth
