#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "freqctl/cli.hpp"
#include "freqctl/grid_model.hpp"
#include "freqctl/scenario_io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = freqctl::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("freqctl_cli_" + std::string(::testing::UnitTest::GetInstance()
                                                 ->current_test_info()
                                                 ->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream f(p);
        return {std::istreambuf_iterator<char>(f), {}};
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateToyConverges) {
    const auto r = run({"simulate", "toy", "-o", path("traj.csv")});
    ASSERT_EQ(r.code, freqctl::cli::kExitOk) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["steady_cost_paper"].get<double>(), 23.278, 0.05);
    EXPECT_EQ(j["status"], "CONVERGED");
    const auto csv = slurp(path("traj.csv"));
    EXPECT_EQ(csv.substr(0, 10), "t,omega_1,");
}

TEST_F(CliTest, ShortHorizonIsNotConverged) {
    const auto r = run({"simulate", "toy", "--horizon", "2"});
    EXPECT_EQ(r.code, freqctl::cli::kExitNotConverged);
    EXPECT_NE(r.err.find("NOT_CONVERGED"), std::string::npos);
    EXPECT_EQ(json::parse(r.out)["status"], "NOT_CONVERGED");
}

TEST_F(CliTest, MissingFile) {
    const auto r = run({"simulate", path("nope.json")});
    EXPECT_EQ(r.code, freqctl::cli::kExitError);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, MalformedScenarioReportsLocation) {
    const auto p = write("bad.json", "{\n  \"nodes\": [,]\n}\n");
    const auto r = run({"simulate", p});
    EXPECT_EQ(r.code, freqctl::cli::kExitError);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidScenarioListsViolations) {
    auto sc = freqctl::toy_grid();
    sc.dt = 0.0;
    const auto p = path("invalid.json");
    freqctl::save_scenario(sc, p);
    const auto r = run({"simulate", p});
    EXPECT_EQ(r.code, freqctl::cli::kExitError);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, UnknownScheme) {
    const auto r = run({"simulate", "toy", "--scheme", "telepathy"});
    EXPECT_EQ(r.code, freqctl::cli::kExitError);
}

TEST_F(CliTest, BadArguments) {
    EXPECT_EQ(run({"frobnicate"}).code, freqctl::cli::kExitError);
    EXPECT_EQ(run({"simulate"}).code, freqctl::cli::kExitError);
    EXPECT_EQ(run({"repro", "everything"}).code, freqctl::cli::kExitError);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, freqctl::cli::kExitOk);
    EXPECT_NE(help.out.find("simulate"), std::string::npos);
}

TEST_F(CliTest, OverridesReachTheEmittedScenario) {
    const auto p = path("eff.json");
    const auto r = run({"simulate", "toy", "--horizon", "1", "--dt", "0.002", "--scheme",
                        "consensus_sampled", "--T", "0.1", "--emit-scenario", p});
    EXPECT_EQ(r.code, freqctl::cli::kExitNotConverged);
    const auto sc = freqctl::load_scenario(p);
    EXPECT_EQ(sc.horizon, 1.0);
    EXPECT_EQ(sc.dt, 0.002);
    EXPECT_EQ(sc.scheme, freqctl::Scheme::ConsensusSampled);
    ASSERT_TRUE(sc.comm.message_interval().has_value());
    EXPECT_EQ(*sc.comm.message_interval(), 0.1);

    const auto q = path("cont.json");
    run({"simulate", p, "--T", "continuous", "--horizon", "0.5", "--scheme", "consensus",
         "--emit-scenario", q});
    EXPECT_TRUE(freqctl::load_scenario(q).comm.continuous());
}

TEST_F(CliTest, Optimal) {
    const auto r = run({"optimal", "toy"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["cost_paper"].get<double>(), 23.278, 1e-3);
}

TEST_F(CliTest, StabilityWritesReport) {
    const auto r = run({"stability", "toy", "-o", path("stab.json"), "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(slurp(path("stab.json")));
    EXPECT_EQ(j["eigenvalues"].size(), j["state_dimension"].get<std::size_t>());
}

TEST_F(CliTest, StabilityWithoutRequiredFailureIsAnError) {
    const auto r = run({"stability", "toy", "--scheme", "hybrid_single"});
    EXPECT_EQ(r.code, freqctl::cli::kExitError);
}

TEST_F(CliTest, ReproFailureCostsCsv) {
    const auto r = run({"repro", "failure_costs", "--horizon", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream is(r.out);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header,
              "experiment,case,scheme,T,horizon,steady_cost,optimal_cost,t_star,first_crossing,"
              "paper_value,note");
    int rows = 0;
    for (std::string l; std::getline(is, l);) {
        ++rows;
        EXPECT_EQ(l.rfind("failure_costs,", 0), 0u);
    }
    EXPECT_EQ(rows, 4);
}
