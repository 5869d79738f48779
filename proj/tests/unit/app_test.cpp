#include "popsynth/app/cli.h"
#include "popsynth/app/config.h"
#include "popsynth/codebook/survey_io.h"
#include "popsynth/core/error.h"
#include "popsynth/ipf/constraints.h"
#include "test_support.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

using namespace popsynth;
using ::testing::HasSubstr;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string> &args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

/// A directory holding a fixture-backed config plus survey and marginals inputs.
class Workspace {
  public:
    Workspace() {
        std::vector<std::string> fixtures;
        for (int i = 0; i < 4; ++i) {
            fixtures.push_back("\"" + test::fixture_path("mock_batch_" + std::to_string(i) + ".json").string() +
                               "\"");
        }
        const auto survey = test::mock_survey(77, 300);
        write_survey_csv(dir / "survey.csv", survey);
        std::mt19937_64 rng{78};
        const auto constraints = test::tilted_constraints(
            survey, {"age", "race", "sex", "income", "education"},
            {{"08031000100", 150.0}, {"08031000200", 250.0}, {"08031000300", 100.0}}, rng);
        std::ofstream marginals{dir / "marginals.csv"};
        write_marginals_csv(marginals, constraints);
        marginals.close();
        test::write_file(dir / "bench.csv", "geoid,value\n08031000100,90\n08031000200,85\n08031000300,95\n");

        config = "label = \"fx\"\noutput_dir = \"out\"\n"
                 "[provider]\nkind = \"mock\"\n[provider.mock]\nfixtures = [" +
                 fixtures[0] + ", " + fixtures[1] + ", " + fixtures[2] + ", " + fixtures[3] +
                 "]\n"
                 "[generation]\nstate = \"Colorado\"\ntarget_n = 300\n"
                 "[synthesis]\nsurvey = \"survey.csv\"\nmarginals = \"marginals.csv\"\nmaster_seed = 42\n"
                 "[evaluation]\nground_truth = \"survey.csv\"\n"
                 "[[evaluation.surveys]]\nlabel = \"fx\"\npath = \"out/survey_fx.csv\"\n"
                 "[[evaluation.populations]]\nlabel = \"fx\"\npath = \"out/population_fx.csv\"\n"
                 "[[evaluation.benchmarks]]\nlabel = \"insured\"\nsource = \"ACS\"\nvariable = \"insurance\"\n"
                 "positive_codes = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]\npath = \"bench.csv\"\n";
        save();
    }

    void save() const { test::write_file(dir / "run.toml", config); }
    [[nodiscard]] std::string config_path() const { return (dir / "run.toml").string(); }

    test::TempDir dir;
    std::string config;
};

} // namespace

TEST(Config, ParsesAndResolvesPaths) {
    const auto config = parse_run_config("label = \"a\"\n[synthesis]\nsurvey = \"s.csv\"\nmaster_seed = 3\n"
                                         "fitting_variables = [\"sex\"]\n[provider]\nkind = \"mock\"\n",
                                         "/base", "c.toml");
    EXPECT_EQ(config.label, "a");
    EXPECT_EQ(*config.synthesis.survey, std::filesystem::path{"/base/s.csv"});
    EXPECT_EQ(config.synthesis.master_seed, 3U);
    EXPECT_EQ(config.synthesis.fitting_variables, std::vector<std::string>{"sex"});
    EXPECT_EQ(config.output_dir, std::filesystem::path{"/base"});
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    EXPECT_THAT([] { parse_run_config("[generation]\ntarget = 3\n", "/", "c.toml"); },
                ::testing::ThrowsMessage<ValidationError>(HasSubstr("target")));
    EXPECT_THROW(parse_run_config("[generation]\ntarget_n = \"many\"\n", "/", "c.toml"), ValidationError);
    EXPECT_THROW(parse_run_config("[synthesis]\nmaster_seed = -4\n", "/", "c.toml"), ValidationError);
    EXPECT_THROW(parse_run_config("[provider\n", "/", "c.toml"), ValidationError);
    EXPECT_THROW(parse_run_config("[provider]\nkind = \"carrier-pigeon\"\n", "/", "c.toml"), ValidationError);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"generate"}).code, 1);
    EXPECT_EQ(run({"--config", "/nonexistent/run.toml", "synthesize"}).code, 1);
}

TEST(Cli, MissingCredentialsNameTheVariable) {
    Workspace ws;
    ::unsetenv("POPSYNTH_TEST_ABSENT_KEY");
    auto text = ws.config;
    text.replace(text.find("kind = \"mock\""), 13,
                 "kind = \"openai-compatible\"\nendpoint = \"http://127.0.0.1:9\"\nmodel_id = \"m\"\n"
                 "credentials_env = \"POPSYNTH_TEST_ABSENT_KEY\"");
    test::write_file(ws.dir / "run.toml", text);
    const auto result = run({"--config", ws.config_path(), "generate"});
    EXPECT_EQ(result.code, 1);
    EXPECT_THAT(result.err, HasSubstr("POPSYNTH_TEST_ABSENT_KEY"));
}

TEST(Cli, UnreachableEndpointIsProviderFailure) {
    Workspace ws;
    ::setenv("POPSYNTH_TEST_DUMMY_KEY", "k", 1);
    auto text = ws.config;
    text.replace(text.find("kind = \"mock\""), 13,
                 "kind = \"openai-compatible\"\nendpoint = \"http://127.0.0.1:9\"\nmodel_id = \"m\"\n"
                 "credentials_env = \"POPSYNTH_TEST_DUMMY_KEY\"\ntimeout_seconds = 2");
    text.replace(text.find("[generation]\n"), 13, "[generation]\nmax_retries = 0\n");
    test::write_file(ws.dir / "run.toml", text);
    const auto result = run({"--config", ws.config_path(), "generate"});
    EXPECT_EQ(result.code, 2);
}

TEST(Cli, GenerateSynthesizeEvaluate) {
    Workspace ws;
    const auto gen = run({"--config", ws.config_path(), "generate"});
    ASSERT_EQ(gen.code, 0) << gen.err;
    EXPECT_THAT(gen.out, HasSubstr("\"records\": 300"));
    EXPECT_TRUE(std::filesystem::exists(ws.dir / "out/survey_fx.csv"));
    EXPECT_TRUE(std::filesystem::exists(ws.dir / "out/generate_summary_fx.json"));

    const auto syn = run({"--config", ws.config_path(), "synthesize"});
    ASSERT_EQ(syn.code, 0) << syn.err;
    const auto population = test::read_file(ws.dir / "out/population_fx.csv");
    EXPECT_EQ(std::count(population.begin(), population.end(), '\n'), 501);

    const auto eval = run({"--config", ws.config_path(), "evaluate"});
    ASSERT_EQ(eval.code, 0) << eval.err;
    for (const auto *name : {"divergence_pre.csv", "divergence_post.csv", "divergence_delta.csv", "residuals.csv",
                             "evaluation_summary.json", "sae_insured_fx.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(ws.dir / "out" / name)) << name;
    }

    const auto check = run({"--config", ws.config_path(), "validate", "--population",
                            (ws.dir / "out/population_fx.csv").string()});
    EXPECT_EQ(check.code, 0) << check.err;
}

TEST(Cli, SynthesizeIsByteIdentical) {
    Workspace ws;
    ASSERT_EQ(run({"--config", ws.config_path(), "--output-dir", (ws.dir / "a").string(), "synthesize"}).code, 0);
    ASSERT_EQ(run({"--config", ws.config_path(), "--output-dir", (ws.dir / "b").string(), "synthesize"}).code, 0);
    EXPECT_EQ(test::read_file(ws.dir / "a/population_fx.csv"), test::read_file(ws.dir / "b/population_fx.csv"));
    auto diag_a = nlohmann::json::parse(test::read_file(ws.dir / "a/diagnostics_fx.json"));
    auto diag_b = nlohmann::json::parse(test::read_file(ws.dir / "b/diagnostics_fx.json"));
    diag_a.erase("output");
    diag_b.erase("output");
    EXPECT_EQ(diag_a, diag_b);
    ASSERT_EQ(run({"--config", ws.config_path(), "--seed", "43", "--output-dir", (ws.dir / "c").string(),
                   "synthesize"})
                  .code,
              0);
    EXPECT_NE(test::read_file(ws.dir / "a/population_fx.csv"), test::read_file(ws.dir / "c/population_fx.csv"));
}

TEST(Cli, SynthesizeNeedsSeed) {
    Workspace ws;
    auto text = ws.config;
    text.replace(text.find("master_seed = 42\n"), 17, "");
    test::write_file(ws.dir / "run.toml", text);
    const auto result = run({"--config", ws.config_path(), "synthesize"});
    EXPECT_EQ(result.code, 1);
    EXPECT_THAT(result.err, HasSubstr("seed"));
}

TEST(Cli, ValidateReportsBadFiles) {
    test::TempDir dir;
    test::write_file(dir / "bad.csv", "sex,age\n1,2\n");
    const auto result = run({"validate", "--survey", (dir / "bad.csv").string()});
    EXPECT_EQ(result.code, 1);
    EXPECT_THAT(result.err, HasSubstr("bad.csv"));
    const auto survey = test::mock_survey(1, 10);
    write_survey_csv(dir / "good.csv", survey);
    EXPECT_EQ(run({"validate", "--survey", (dir / "good.csv").string()}).code, 0);
}
