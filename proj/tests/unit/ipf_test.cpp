#include "oracles.h"
#include "popsynth/core/error.h"
#include "popsynth/core/geoid.h"
#include "popsynth/ipf/constraints.h"
#include "popsynth/ipf/ipf.h"
#include "test_support.h"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

using namespace popsynth;
using ::testing::HasSubstr;

namespace {

/// Records {(1,1),(1,2),(2,1),(2,2)} on variables v0, v1.
SurveyDataset four_records(std::optional<std::vector<double>> weights = std::nullopt) {
    SurveyDataset survey{test::numbered_codebook({2, 2})};
    const std::vector<std::vector<int>> rows{{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        survey.add_row(rows[i], weights ? std::optional<double>{(*weights)[i]} : std::nullopt);
    }
    return survey;
}

TractMarginals marginals(std::vector<double> a, std::vector<double> b) {
    TractMarginals m;
    m.geoid = "00000000001";
    m.counts["v0"] = std::move(a);
    m.counts["v1"] = std::move(b);
    return m;
}

const std::vector<std::string> fitting{"v0", "v1"};

double weighted_count(const SurveyDataset &survey, const std::vector<double> &weights, std::size_t var, int code) {
    double sum = 0.0;
    for (std::size_t i = 0; i < survey.size(); ++i) {
        if (survey.value(i, var) == code) {
            sum += weights[i];
        }
    }
    return sum;
}

} // namespace

TEST(InitialWeights, Examples) {
    EXPECT_EQ(initial_weights(four_records()), (std::vector<double>{1, 1, 1, 1}));
    SurveyDataset weighted{test::numbered_codebook({2})};
    weighted.add_row(std::vector<int>{1}, 2.0);
    weighted.add_row(std::vector<int>{2}, 1.0);
    weighted.add_row(std::vector<int>{1}, 1.0);
    EXPECT_EQ(initial_weights(weighted), (std::vector<double>{2, 1, 1}));
    EXPECT_THROW(initial_weights(SurveyDataset{test::numbered_codebook({2})}), ValidationError);
}

TEST(IpfFit, FourRecordExample) {
    const auto fit = ipf_fit(four_records(), marginals({3, 1}, {2, 2}), fitting);
    ASSERT_EQ(fit.weights.size(), 4U);
    const std::vector<double> expected{1.5, 1.5, 0.5, 0.5};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(fit.weights[i], expected[i], 1e-10);
    }
    EXPECT_TRUE(fit.converged);
    EXPECT_LE(fit.iterations_used, 2U);
    EXPECT_EQ(fit.unreachable_mass, 0.0);
    EXPECT_NEAR(fit.tae, 0.0, 1e-12);
}

TEST(IpfFit, FixedPointInOneSweep) {
    const auto survey = four_records(std::vector<double>{2.0, 1.0, 1.0, 3.0});
    const auto fit = ipf_fit(survey, marginals({3, 4}, {3, 4}), fitting);
    EXPECT_EQ(fit.weights, (std::vector<double>{2.0, 1.0, 1.0, 3.0}));
    EXPECT_EQ(fit.iterations_used, 1U);
    EXPECT_TRUE(fit.converged);
}

TEST(IpfFit, UnreachableCategory) {
    SurveyDataset survey{test::numbered_codebook({2, 3})};
    survey.add_row(std::vector<int>{1, 1});
    survey.add_row(std::vector<int>{2, 2});
    survey.add_row(std::vector<int>{1, 2});
    const auto fit = ipf_fit(survey, marginals({20, 20}, {15, 15, 10}), fitting);
    EXPECT_EQ(fit.unreachable_mass, 10.0);
    ASSERT_EQ(fit.unreachable.size(), 1U);
    EXPECT_EQ(fit.unreachable[0].variable, "v1");
    EXPECT_EQ(fit.unreachable[0].code, 3);
    EXPECT_THAT(fit.warnings, ::testing::Contains(HasSubstr("no survey support for v1=3")));
    for (const auto w : fit.weights) {
        EXPECT_TRUE(std::isfinite(w));
    }
}

TEST(IpfFit, NonConvergenceIsReported) {
    // Inconsistent totals cannot be matched simultaneously.
    IpfConfig config;
    config.max_sweeps = 7;
    const auto fit = ipf_fit(four_records(), marginals({3, 1}, {5, 5}), fitting, config);
    EXPECT_FALSE(fit.converged);
    EXPECT_EQ(fit.iterations_used, 7U);
    EXPECT_GT(fit.tae, 0.0);
    EXPECT_THAT(fit.warnings, ::testing::Contains(HasSubstr("not converged after 7 sweeps")));
}

TEST(IpfFit, Errors) {
    EXPECT_THROW(ipf_fit(SurveyDataset{test::numbered_codebook({2, 2})}, marginals({1, 1}, {1, 1}), fitting),
                 ValidationError);
    TractMarginals partial;
    partial.counts["v0"] = {1, 1};
    EXPECT_THROW(ipf_fit(four_records(), partial, fitting), ValidationError);
    const std::vector<double> bad{1.0, -1.0, 1.0, 1.0};
    EXPECT_THROW(ipf_fit(four_records(), marginals({1, 1}, {1, 1}), fitting, {}, bad), ValidationError);
}

TEST(IpfFit, MarginalCorrectAfterEachVariable) {
    // One sweep over the single last variable leaves it exactly on target.
    std::mt19937_64 rng{11};
    for (int trial = 0; trial < 200; ++trial) {
        auto problem = test::random_fit_problem(rng, 12, 3, 4, trial % 2 == 0);
        for (std::size_t v = 0; v < problem.fitting.size(); ++v) {
            IpfConfig config;
            config.max_sweeps = 1;
            const auto fit = ipf_fit(problem.survey, problem.marginals, {problem.fitting[v]}, config);
            const auto &targets = problem.instance.targets[v];
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const double got = weighted_count(problem.survey, fit.weights, v, static_cast<int>(k + 1));
                EXPECT_LE(std::abs(got - targets[k]), 1e-10 * std::max(1.0, targets[k]));
            }
        }
    }
}

TEST(IpfFit, MatchesOracleSweepForSweep) {
    std::mt19937_64 rng{12};
    for (int trial = 0; trial < 300; ++trial) {
        const auto problem = test::random_fit_problem(rng, 6, 2 + trial % 2, 3, trial % 3 == 0);
        for (const std::size_t sweeps : {1U, 2U, 5U}) {
            IpfConfig config;
            config.max_sweeps = sweeps;
            config.rel_tolerance = 0.0;
            const auto fit = ipf_fit(problem.survey, problem.marginals, problem.fitting, config);
            const auto expected = oracle::table_ipf(problem.instance, sweeps);
            for (std::size_t i = 0; i < expected.size(); ++i) {
                EXPECT_NEAR(fit.weights[i], expected[i], 1e-8 * std::max(1.0, expected[i]));
            }
        }
    }
}

TEST(IpfFit, ConvergedMatchesOracleLimit) {
    std::mt19937_64 rng{13};
    for (int trial = 0; trial < 200; ++trial) {
        const auto problem = test::random_fit_problem(rng, 6, 2, 3, trial % 2 == 0);
        IpfConfig config;
        config.max_sweeps = 10000;
        config.rel_tolerance = 1e-13;
        const auto fit = ipf_fit(problem.survey, problem.marginals, problem.fitting, config);
        const auto expected = oracle::table_ipf(problem.instance, 0, 1e-15L);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            EXPECT_NEAR(fit.weights[i], expected[i], 1e-8 * std::max(1.0, expected[i]));
        }
    }
}

TEST(IpfFit, PreservesWithinCellRatios) {
    std::mt19937_64 rng{14};
    for (int trial = 0; trial < 200; ++trial) {
        const auto problem = test::random_fit_problem(rng, 40, 2, 3, true);
        const auto fit = ipf_fit(problem.survey, problem.marginals, problem.fitting);
        const auto &start = problem.instance.start;
        const auto &cats = problem.instance.categories;
        for (std::size_t i = 0; i < cats.size(); ++i) {
            for (std::size_t j = i + 1; j < cats.size(); ++j) {
                if (cats[i] != cats[j]) {
                    continue;
                }
                const double before = start[i] / start[j];
                const double after = fit.weights[i] / fit.weights[j];
                EXPECT_NEAR(after, before, 1e-10 * before);
            }
        }
    }
}

TEST(IpfFit, InvariantToScalingStartWeights) {
    std::mt19937_64 rng{15};
    for (int trial = 0; trial < 200; ++trial) {
        const auto problem = test::random_fit_problem(rng, 20, 3, 3, true);
        const double c = std::uniform_real_distribution<double>{0.01, 100.0}(rng);
        std::vector<double> scaled = problem.instance.start;
        for (auto &w : scaled) {
            w *= c;
        }
        IpfConfig config;
        config.rel_tolerance = 1e-12;
        config.max_sweeps = 2000;
        const auto a = ipf_fit(problem.survey, problem.marginals, problem.fitting, config);
        const auto b = ipf_fit(problem.survey, problem.marginals, problem.fitting, config, scaled);
        for (std::size_t i = 0; i < a.weights.size(); ++i) {
            EXPECT_NEAR(a.weights[i], b.weights[i], 1e-8 * std::max(1.0, a.weights[i]));
        }
    }
}

TEST(IpfFit, DefaultToleranceMeetsMarginals) {
    std::mt19937_64 rng{16};
    IpfConfig config;
    // Sparse random tables can need more than the default sweep budget.
    config.max_sweeps = 5000;
    for (int trial = 0; trial < 200; ++trial) {
        const auto problem = test::random_fit_problem(rng, 30, 3, 5, trial % 2 == 0);
        const auto fit = ipf_fit(problem.survey, problem.marginals, problem.fitting, config);
        ASSERT_TRUE(fit.converged);
        EXPECT_LE(fit.max_rel_error, 1e-6);
        for (std::size_t v = 0; v < problem.fitting.size(); ++v) {
            const auto &targets = problem.instance.targets[v];
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const double got = weighted_count(problem.survey, fit.weights, v, static_cast<int>(k + 1));
                if (targets[k] > 0.0) {
                    EXPECT_LE(std::abs(got - targets[k]) / targets[k], 1e-6);
                } else {
                    EXPECT_EQ(got, 0.0);
                }
            }
        }
    }
}

TEST(IpfFit, Deterministic) {
    std::mt19937_64 rng{17};
    const auto problem = test::random_fit_problem(rng, 30, 3, 4, true);
    const auto a = ipf_fit(problem.survey, problem.marginals, problem.fitting);
    const auto b = ipf_fit(problem.survey, problem.marginals, problem.fitting);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.iterations_used, b.iterations_used);
}

// ---- constraints ----

namespace {

ConstraintSet read_marginals(const std::string &text) {
    std::istringstream in{text};
    return read_marginals_csv(in, test::numbered_codebook({2, 2, 3}), {"v0", "v1"}, "m.csv");
}

} // namespace

TEST(Marginals, ReadsLongFormat) {
    const auto set = read_marginals("geoid,variable,code,count\n"
                                    "8031000100,v0,1,60\n8031000100,v0,2,40\n"
                                    "8031000100,v1,1,30\n8031000100,v1,2,20\n");
    ASSERT_EQ(set.tracts.size(), 1U);
    const auto &tract = set.tracts.at("08031000100");
    EXPECT_EQ(tract.counts.at("v0"), (std::vector<double>{60, 40}));
    EXPECT_EQ(tract.variable_total("v1"), 50.0);
    EXPECT_NO_THROW(set.validate());
}

TEST(Marginals, ReadErrors) {
    const std::string header = "geoid,variable,code,count\n";
    const auto full = "1,v0,1,1\n1,v0,2,1\n1,v1,1,1\n1,v1,2,1\n";
    EXPECT_NO_THROW(read_marginals(header + full));
    EXPECT_THAT([&] { read_marginals(header + "1,v0,1,1\n1,v0,2,1\n1,v1,1,1\n"); },
                ::testing::ThrowsMessage<ValidationError>(HasSubstr("v1")));
    EXPECT_THAT([&] { read_marginals(header + full + "1,zz,1,1\n"); },
                ::testing::ThrowsMessage<ValidationError>(HasSubstr("line 6")));
    EXPECT_THROW(read_marginals(header + full + "1,v2,1,1\n"), ValidationError);
    EXPECT_THROW(read_marginals(header + full + "1,v0,1,3\n"), ValidationError);
    EXPECT_THROW(read_marginals(header + "1,v0,9,1\n"), ValidationError);
    EXPECT_THROW(read_marginals(header + "1,v0,1,-1\n1,v0,2,1\n1,v1,1,1\n1,v1,2,1\n"), ValidationError);
}

TEST(Marginals, HarmonizeExamples) {
    auto raw = read_marginals("geoid,variable,code,count\n"
                              "1,v0,1,60\n1,v0,2,40\n1,v1,1,30\n1,v1,2,20\n"
                              "2,v0,1,50\n2,v0,2,50\n2,v1,1,70\n2,v1,2,30\n");
    const auto h = harmonize_marginals(raw);
    const auto &first = h.tracts.at("00000000001");
    EXPECT_EQ(first.population_total, 100.0);
    EXPECT_DOUBLE_EQ(first.counts.at("v1")[0], 60.0);
    EXPECT_DOUBLE_EQ(first.counts.at("v1")[1], 40.0);
    const auto &second = h.tracts.at("00000000002");
    EXPECT_EQ(second.counts.at("v1"), (std::vector<double>{70, 30}));
    EXPECT_EQ(second.counts.at("v0"), (std::vector<double>{50, 50}));
}

TEST(Marginals, HarmonizeZeroTotals) {
    const auto zero_first = read_marginals("geoid,variable,code,count\n"
                                           "7,v0,1,0\n7,v0,2,0\n7,v1,1,3\n7,v1,2,1\n");
    EXPECT_THAT([&] { harmonize_marginals(zero_first); },
                ::testing::ThrowsMessage<ValidationError>(HasSubstr("00000000007")));
    const auto zero_other = read_marginals("geoid,variable,code,count\n"
                                           "7,v0,1,5\n7,v0,2,5\n7,v1,1,0\n7,v1,2,0\n");
    const auto h = harmonize_marginals(zero_other);
    EXPECT_EQ(h.tracts.at("00000000007").zero_total_variables, std::vector<std::string>{"v1"});
}

TEST(Marginals, HarmonizedTotalsAgree) {
    std::mt19937_64 rng{21};
    std::uniform_real_distribution<double> count{0.0, 500.0};
    for (int trial = 0; trial < 200; ++trial) {
        ConstraintSet raw;
        raw.codebook = test::numbered_codebook({3, 4, 2});
        raw.fitting_variables = {"v0", "v1", "v2"};
        for (int t = 1; t <= 3; ++t) {
            TractMarginals m;
            m.geoid = normalize_geoid(std::to_string(t));
            m.counts["v0"] = {count(rng) + 1.0, count(rng), count(rng)};
            m.counts["v1"] = {count(rng), count(rng), count(rng), count(rng)};
            m.counts["v2"] = {count(rng), count(rng)};
            raw.tracts[m.geoid] = m;
        }
        const auto h = harmonize_marginals(raw);
        for (const auto &[geoid, m] : h.tracts) {
            for (const auto &v : raw.fitting_variables) {
                EXPECT_NEAR(m.variable_total(v), m.population_total, 1e-9 * m.population_total);
            }
        }
    }
}
