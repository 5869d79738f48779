#include "popsynth/core/hash.h"
#include "popsynth/core/geoid.h"
#include "popsynth/ipf/integerize.h"
#include "popsynth/ipf/synthesis.h"
#include "test_support.h"

#include <cmath>
#include <random>
#include <sstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

using namespace popsynth;
using ::testing::HasSubstr;

namespace {

SurveyDataset four_records(std::vector<double> weights = {1, 1, 1, 1}) {
    SurveyDataset survey{test::numbered_codebook({2, 2, 3})};
    survey.add_row(std::vector<int>{1, 1, 1}, weights[0]);
    survey.add_row(std::vector<int>{1, 2, 2}, weights[1]);
    survey.add_row(std::vector<int>{2, 1, 3}, weights[2]);
    survey.add_row(std::vector<int>{2, 2, 1}, weights[3]);
    return survey;
}

ConstraintSet constraints_for(const SurveyDataset &survey, const std::vector<TractMarginals> &tracts) {
    ConstraintSet set;
    set.codebook = survey.codebook_ptr();
    set.fitting_variables = {"v0", "v1"};
    for (const auto &t : tracts) {
        set.tracts[t.geoid] = t;
    }
    return harmonize_marginals(set);
}

TractMarginals tract(const std::string &geoid, std::vector<double> a, std::vector<double> b) {
    TractMarginals m;
    m.geoid = normalize_geoid(geoid);
    m.counts["v0"] = std::move(a);
    m.counts["v1"] = std::move(b);
    return m;
}

/// Random multi-tract problem over a mock survey, fitted on sex and age.
ConstraintSet random_constraints(const SurveyDataset &survey, std::mt19937_64 &rng, std::size_t n_tracts) {
    ConstraintSet set;
    set.codebook = survey.codebook_ptr();
    set.fitting_variables = {"age", "sex"};
    std::uniform_real_distribution<double> count{0.0, 60.0};
    for (std::size_t t = 0; t < n_tracts; ++t) {
        TractMarginals m;
        m.geoid = normalize_geoid(std::to_string(8031000100 + 100 * t));
        for (const auto &v : set.fitting_variables) {
            std::vector<double> counts(set.codebook->at(v).codes.size());
            for (auto &c : counts) {
                c = std::round(count(rng));
            }
            m.counts[v] = counts;
        }
        set.tracts[m.geoid] = m;
    }
    return harmonize_marginals(set);
}

} // namespace

TEST(Synthesis, ScaledSurveyMarginalsAreExact) {
    // Survey marginals (0.5, 0.5) on both variables, scaled to 10 people.
    const auto survey = four_records({0.2, 0.3, 0.3, 0.2});
    const auto constraints = constraints_for(survey, {tract("1", {5, 5}, {5, 5})});
    const auto population = synthesize_population(survey, constraints, {}, 42);
    ASSERT_EQ(population.size(), 10U);
    const auto sex = marginal_distribution(population.attributes(), "v0");
    const auto other = marginal_distribution(population.attributes(), "v1");
    EXPECT_EQ(sex.probs, (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(other.probs, (std::vector<double>{0.5, 0.5}));
    ASSERT_EQ(population.diagnostics().size(), 1U);
    const auto &d = population.diagnostics()[0];
    EXPECT_TRUE(d.converged);
    EXPECT_EQ(d.individuals, 10U);
    EXPECT_EQ(d.seed, derive_seed(42, "00000000001"));
}

TEST(Synthesis, ConcatenatesInGeoidOrder) {
    const auto survey = four_records();
    const auto constraints =
        constraints_for(survey, {tract("30", {3, 1}, {2, 2}), tract("10", {2, 2}, {1, 3}), tract("20", {0, 4}, {2, 2})});
    const auto population = synthesize_population(survey, constraints, {}, 7);
    EXPECT_EQ(population.tracts(), (std::vector<std::string>{"00000000010", "00000000020", "00000000030"}));
    ASSERT_EQ(population.size(), 12U);
    for (std::size_t i = 1; i < population.size(); ++i) {
        EXPECT_LE(population.geoid(i - 1), population.geoid(i));
        EXPECT_EQ(population.person_id(i), population.person_id(i - 1) + 1);
    }
}

TEST(Synthesis, ZeroSupportCategoryStaysEmpty) {
    auto codebook = test::numbered_codebook({2, 3});
    SurveyDataset survey{codebook};
    survey.add_row(std::vector<int>{1, 1});
    survey.add_row(std::vector<int>{2, 2});
    survey.add_row(std::vector<int>{1, 2});
    ConstraintSet set;
    set.codebook = codebook;
    set.fitting_variables = {"v0", "v1"};
    auto m = tract("5", {20, 20}, {15, 15, 10});
    set.tracts[m.geoid] = m;
    const auto population = synthesize_population(survey, harmonize_marginals(set), {}, 1);
    EXPECT_EQ(population.diagnostics()[0].unreachable_mass, 10.0);
    for (std::size_t i = 0; i < population.size(); ++i) {
        EXPECT_NE(population.attributes().value(i, 1), 3);
    }
}

TEST(Synthesis, TotalsEqualRoundedTargets) {
    std::mt19937_64 rng{31};
    const auto survey = test::mock_survey(31, 400);
    for (int trial = 0; trial < 10; ++trial) {
        const auto constraints = random_constraints(survey, rng, 6);
        const auto population = synthesize_population(survey, constraints, {}, rng());
        std::uint64_t expected = 0;
        for (const auto &d : population.diagnostics()) {
            ASSERT_EQ(d.unreachable_mass, 0.0);
            EXPECT_EQ(d.individuals, d.rounded_total);
            expected += static_cast<std::uint64_t>(round_half_even(d.population_total));
        }
        EXPECT_EQ(population.size(), expected);
    }
}

TEST(Synthesis, DeterministicAndThreadInvariant) {
    std::mt19937_64 rng{32};
    const auto survey = test::mock_survey(32, 300);
    const auto constraints = random_constraints(survey, rng, 12);
    const auto a = synthesize_population(survey, constraints, {}, 99);
    const auto b = synthesize_population(survey, constraints, {}, 99);
    SynthesisConfig parallel;
    parallel.threads = 4;
    const auto c = synthesize_population(survey, constraints, parallel, 99);
    EXPECT_TRUE(a == b);
    EXPECT_TRUE(a == c);
    std::ostringstream sa;
    std::ostringstream sc;
    write_population_csv(sa, a);
    write_population_csv(sc, c);
    EXPECT_EQ(sa.str(), sc.str());

    const auto d = synthesize_population(survey, constraints, {}, 100);
    EXPECT_FALSE(a == d);
}

TEST(Synthesis, TractSeedIndependentOfOtherTracts) {
    const auto survey = four_records();
    const auto both = constraints_for(survey, {tract("1", {1.5, 2.5}, {2.2, 1.8}), tract("2", {2.5, 1.5}, {1.1, 2.9})});
    const auto alone = constraints_for(survey, {tract("2", {2.5, 1.5}, {1.1, 2.9})});
    const auto a = synthesize_tract(survey, both.tracts.at("00000000002"), both.fitting_variables, {}, 5);
    const auto b = synthesize_tract(survey, alone.tracts.at("00000000002"), alone.fitting_variables, {}, 5);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Synthesis, Errors) {
    const auto survey = four_records();
    ConstraintSet mismatched;
    mismatched.codebook = test::numbered_codebook({2, 2});
    mismatched.fitting_variables = {"v0"};
    EXPECT_THROW(synthesize_population(survey, mismatched, {}, 1), ValidationError);

    ConstraintSet unharmonized;
    unharmonized.codebook = survey.codebook_ptr();
    unharmonized.fitting_variables = {"v0", "v1"};
    auto t = tract("3", {1, 1}, {1, 1});
    unharmonized.tracts[t.geoid] = t;
    try {
        synthesize_population(survey, unharmonized, {}, 1);
        FAIL() << "expected SynthesisError";
    } catch (const SynthesisError &e) {
        EXPECT_THAT(e.what(), HasSubstr("tract 00000000003"));
        EXPECT_TRUE(e.completed().empty());
    }
}
