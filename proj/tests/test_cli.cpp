#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kOut = fs::temp_directory_path() / "szk_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string("'") + SZK_CLI + "' " + args + " --out '" + kOut.string() + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json load(const std::string& name) {
    std::ifstream in(kOut / name);
    return nlohmann::json::parse(in);
}

const std::string kLogistic = "'expr:x/(x+(1-x)*exp(1))'";

}  // namespace

TEST(Cli, AnalyzeLogisticPair) {
    ASSERT_EQ(run("analyze --f " + kLogistic + " --g 'expr:x/(x+(1-x)*exp(1.4142135623730951))'"), 0);
    const auto j = load("decomposition.json");
    EXPECT_EQ(j["schema_version"], 1);
    ASSERT_EQ(j["components"].size(), 1u);
    EXPECT_EQ(j["components"][0]["kind"], "irrational");
    EXPECT_NEAR(j["components"][0]["tau"].get<double>(), 1.41421356, 1e-8);
}

TEST(Cli, AnalyzeIdentityPair) {
    ASSERT_EQ(run("analyze --f expr:x --g expr:x"), 0);
    const auto j = load("decomposition.json");
    EXPECT_TRUE(j["components"].empty());
    ASSERT_EQ(j["fixed_intervals"].size(), 1u);
    EXPECT_EQ(j["fixed_intervals"][0][0], 0.0);
    EXPECT_EQ(j["fixed_intervals"][0][1], 1.0);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("analyze --f 'expr:x/(x+' --g expr:x"), 3);
    EXPECT_EQ(run("analyze --f expr:x"), 3);
    EXPECT_EQ(run("verify --f " + kLogistic + " --g 'expr:x*(1+x)/2'"), 5);
    EXPECT_EQ(run("analyze --f expr:x --g expr:x --tol.nonsense=1"), 3);
    EXPECT_EQ(run("analyze --f expr:x --g expr:x --grid 1000"), 3);
}

TEST(Cli, PathEndpointsAndConfigFile) {
    {
        std::ofstream cfg(kOut.string() + ".cfg");
        cfg << "# rational pair (3, 2)\nf = expr:x/(x+(1-x)*exp(3))\ng = expr:x/(x+(1-x)*exp(2))\ntimes = 0,1\n";
    }
    ASSERT_EQ(run("path --config '" + kOut.string() + ".cfg'"), 0);
    const auto j = load("path_report.json");
    EXPECT_TRUE(j["ok"].get<bool>());
    EXPECT_LT(j["commutation_residual"].get<double>(), 1e-9);
    std::ifstream in(kOut / "frames.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,x,f_t,g_t,df_t,dg_t");
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        double t, x, f, g, df, dg;
        char c;
        ss >> t >> c >> x >> c >> f >> c >> g >> c >> df >> c >> dg;
        if (t == 1.0) {
            EXPECT_EQ(f, x);
            EXPECT_EQ(g, x);
        }
    }
}

TEST(Cli, VerifyLinearMap) {
    ASSERT_EQ(run("verify --f expr:x/2 --domain 0,0.99999904632568359375 --open hi"), 0);
    const auto j = load("audit.json");
    EXPECT_NEAR(j["szekeres"]["lambda"].get<double>(), 2 * std::log(2.0), 1e-12);
    EXPECT_LT(j["scaling_check"].get<double>(), 1e-12);
}
