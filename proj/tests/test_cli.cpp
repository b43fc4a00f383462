#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SHRINKT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("shrinkt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(dir_ / name);
        out << text;
    }

    fs::path dir_;
};

}

TEST_F(Cli, FitThreeRowsIsDeterministic) {
    write("in.csv", "id,beta_hat,se_hat,df\na,0.5,1,4\nb,-3,0.8,4\nc,2,1.2,6\n");
    ASSERT_EQ(run("fit --input " + path("in.csv") + " --out " + path("a.csv") + " --prior-out " + path("g.json")), 0);
    ASSERT_EQ(run("fit --input " + path("in.csv") + " --out " + path("b.csv")), 0);
    const auto a = slurp(path("a.csv"));
    EXPECT_EQ(a, slurp(path("b.csv")));
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "id,beta_hat,se_hat,df,se_moderated,df_moderated,post_mean,post_sd,lfdr,lfsr,qvalue,lower_cred_95,upper_cred_95");
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
    EXPECT_TRUE(fs::exists(path("g.json")));
}

TEST_F(Cli, EveryPipelineRuns) {
    write("in.csv", "beta_hat,se_hat,df\n0.5,1,4\n-3,0.8,4\n2,1.2,6\n0.1,0.9,4\n");
    for (const char* p : {"naive", "two_step_alpha0", "two_step_alpha1", "adhoc_pval2se", "qvalue_baseline"}) {
        EXPECT_EQ(run("fit --input " + path("in.csv") + " --out " + path("o.csv") + " --pipeline " + p), 0) << p;
    }
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("fit --input " + path("missing.csv") + " --out " + path("o.csv")), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    write("in.csv", "beta_hat,se_hat,df\n0.5,1,4\n");
    EXPECT_EQ(run("fit --input " + path("in.csv") + " --out " + path("o.csv") + " --penalty 0.5"), 1);
    write("bad.csv", "beta_hat,se_hat,df\n0.5,abc,4\n");
    EXPECT_EQ(run("fit --input " + path("bad.csv") + " --out " + path("o.csv")), 2);
    write("nocol.csv", "beta_hat,df\n0.5,4\n");
    EXPECT_EQ(run("fit --input " + path("nocol.csv") + " --out " + path("o.csv")), 2);
    EXPECT_EQ(run("simulate --scenario spiky --n 4 --genes 10 --out " + path("s.csv")), 1);
    EXPECT_EQ(run("reproduce --bench " + path("nothing") + " --out " + path("r")), 2);
}

TEST_F(Cli, SimulateIsSeeded) {
    const std::string base = "simulate --scenario bimodal --n 4 --genes 100 --seed 3 --pi0 0.5 --out ";
    ASSERT_EQ(run(base + path("a.csv")), 0);
    ASSERT_EQ(run(base + path("b.csv")), 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    const auto text = slurp(path("a.csv"));
    EXPECT_EQ(text.substr(0, text.find('\n')), "id,beta_hat,se_hat,df,beta_true,is_null");
    ASSERT_EQ(run("simulate --scenario spiky --n 4 --genes 100 --seed 3 --mode counts --out " + path("c.csv")), 0);
}

TEST_F(Cli, BenchAndReproduceAreByteIdenticalOnRerun) {
    const std::string args = "bench --scenarios spiky --n 4 --replicates 2 --genes 200 --seed 5 --threads 1 --out ";
    ASSERT_EQ(run(args + path("b1")), 0);
    ASSERT_EQ(run(args + path("b2")), 0);
    for (const char* f : {"results.csv", "aggregate.csv", "checks.csv"}) {
        EXPECT_EQ(slurp(dir_ / "b1" / f), slurp(dir_ / "b2" / f)) << f;
    }
    ASSERT_EQ(run("reproduce --bench " + path("b1") + " --out " + path("r")), 0);
    for (const char* f : {"pi0.csv", "fdp.csv", "power.csv", "rrmse.csv", "coverage.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "r" / f)) << f;
    }
    const auto cov = slurp(dir_ / "r" / "coverage.csv");
    EXPECT_NE(cov.find("significant_negative"), std::string::npos);
    EXPECT_NE(cov.find("significant_positive"), std::string::npos);
    EXPECT_NE(cov.find(",all,"), std::string::npos);
}
