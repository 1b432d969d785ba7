#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "discl/run_config.hpp"

namespace fs = std::filesystem;
using namespace discl;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("discl_cli_" + std::to_string(::getpid()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    fs::path write(const std::string& name, const std::string& text) {
        const fs::path p = root_ / name;
        std::ofstream(p) << text;
        return p;
    }
    int run(const std::string& args) {
        const std::string cmd = std::string("\"") + DISCL_CLI_PATH + "\" " + args + " > \"" +
                                (root_ / "stdout.txt").string() + "\" 2>&1";
        const int s = std::system(cmd.c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    }
    static int lines(const fs::path& p) {
        std::ifstream f(p);
        std::string l;
        int n = 0;
        while (std::getline(f, l)) ++n;
        return n;
    }
    fs::path root_;
};

}  // namespace

TEST(RunConfig, ParsesAndRoundTrips) {
    std::istringstream is("# comment\nnx = 40\n ny=24 \neps = 0.25 # trailing\nmu_schedule = 1, 2.5, 10\nanchor = true\n");
    const RunConfig c = parse_config(is);
    EXPECT_EQ(c.nx, 40);
    EXPECT_EQ(c.ny, 24);
    EXPECT_EQ(c.eps, 0.25);
    EXPECT_EQ(c.mu_schedule, (std::vector<double>{1, 2.5, 10}));
    EXPECT_TRUE(c.anchor);
    std::istringstream again(c.canonical());
    EXPECT_EQ(parse_config(again).canonical(), c.canonical());
}

TEST(RunConfig, RejectsMalformedInput) {
    for (const char* text : {"nx = 4x\n", "bogus = 1\n", "nx 4\n", "nx = 4\nnx = 5\n", "anchor = maybe\n",
                             "mu_schedule = 100, 10\n", "potential = quartic\n", "eps = -1\n", "sign = 2\n",
                             "seed = -3\n"}) {
        std::istringstream is(text);
        EXPECT_THROW(parse_config(is), ConfigError) << text;
    }
}

TEST(RunConfig, HashIgnoresOutputDirectory) {
    RunConfig a, b;
    b.out = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 9;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST_F(Cli, MinimizeWritesArtifacts) {
    const auto cfg = write("m.cfg", "nx = 32\nny = 32\neps = 0.5\nxi = 0.5\nmax_iters = 20\n");
    EXPECT_EQ(run("minimize --config \"" + cfg.string() + "\" --out \"" + (root_ / "o").string() + "\""), 0);
    for (const char* f : {"trace.csv", "k_final.field", "B_final.field", "summary.txt", "manifest.txt"})
        EXPECT_TRUE(fs::exists(root_ / "o" / f)) << f;
    std::ifstream k(root_ / "o" / "k_final.field");
    EXPECT_NO_THROW(read_vector_field(k));
}

TEST_F(Cli, MalformedConfigExitsTwo) {
    const auto cfg = write("bad.cfg", "nx = 32\nthis is not a pair\n");
    EXPECT_EQ(run("minimize --config \"" + cfg.string() + "\""), 2);
    EXPECT_EQ(run("minimize"), 2);
    EXPECT_EQ(run("nonsense"), 2);
}

TEST_F(Cli, UnwritableOutputExitsOne) {
    const auto cfg = write("m.cfg", "nx = 32\nny = 32\neps = 0.5\nxi = 0.5\nmax_iters = 2\n");
    const auto blocker = write("file", "x");
    EXPECT_EQ(run("minimize --config \"" + cfg.string() + "\" --out \"" + (blocker / "sub").string() + "\""), 1);
}

TEST_F(Cli, ModuleErrorExitsOne) {
    // layer of height 1/32 on 16 rows is unresolved
    const auto cfg = write("m.cfg", "nx = 16\nny = 16\neps = 0.125\nxi = 0.25\n");
    EXPECT_EQ(run("minimize --config \"" + cfg.string() + "\" --out \"" + (root_ / "o").string() + "\""), 1);
}

TEST_F(Cli, EnvelopeSweep) {
    const auto cfg = write("e.cfg", "r_min = 0\nr_max = 4\nr_step = 0.05\n");
    ASSERT_EQ(run("envelope --config \"" + cfg.string() + "\" --out \"" + (root_ / "e").string() + "\""), 0);
    std::ifstream f(root_ / "e" / "envelope.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, bracket_csv_header());
    int rows = 0;
    while (std::getline(f, line)) {
        double r, lo, up, w, wv;
        char c;
        std::istringstream is(line);
        is >> r >> c >> lo >> c >> up >> c >> w >> c >> wv;
        if (rows == 0) {
            EXPECT_EQ(r, 0.0);
            EXPECT_EQ(lo, 0.0);
            EXPECT_EQ(up, 0.0);
        }
        if (r <= 2.0) EXPECT_LE(up, 1e-12);
        if (std::abs(r - 3.0) < 1e-9) {
            EXPECT_LE(lo, up);
            EXPECT_LE(up, 0.9 + 1e-12);
        }
        ++rows;
    }
    EXPECT_EQ(rows, 81);
}

TEST_F(Cli, ScalingRecordsPerEps) {
    const auto one = write("s1.cfg", "nx = 32\nny = 32\nxi = 0.5\neps_list = 1\nmax_iters = 3\n");
    ASSERT_EQ(run("scaling --config \"" + one.string() + "\" --out \"" + (root_ / "s1").string() + "\""), 0);
    EXPECT_EQ(lines(root_ / "s1" / "scaling.csv"), 2);
    const auto three = write("s3.cfg", "nx = 32\nny = 32\nxi = 0.5\neps_list = 1, 0.5, 0.25\nmax_iters = 3\n");
    ASSERT_EQ(run("scaling --config \"" + three.string() + "\" --out \"" + (root_ / "s3").string() + "\""), 0);
    EXPECT_EQ(lines(root_ / "s3" / "scaling.csv"), 4);
    EXPECT_TRUE(fs::exists(root_ / "s3" / "profile_2.csv"));
}

TEST_F(Cli, SeedOverrideAndManifest) {
    const auto cfg = write("m.cfg", "nx = 32\nny = 32\neps = 0.5\nxi = 0.5\nmax_iters = 5\nnoise = 0.01\n");
    ASSERT_EQ(run("minimize --config \"" + cfg.string() + "\" --out \"" + (root_ / "a").string() + "\" --seed 5"), 0);
    ASSERT_EQ(run("minimize --config \"" + cfg.string() + "\" --out \"" + (root_ / "b").string() + "\" --seed 6"), 0);
    std::ifstream ma(root_ / "a" / "manifest.txt"), mb(root_ / "b" / "manifest.txt");
    std::stringstream sa, sb;
    sa << ma.rdbuf();
    sb << mb.rdbuf();
    EXPECT_NE(sa.str().find("seed = 5"), std::string::npos);
    EXPECT_NE(sa.str().find("config_hash = "), std::string::npos);
    EXPECT_NE(sa.str().find("potential = rational"), std::string::npos);
    EXPECT_NE(sa.str().find("version = "), std::string::npos);
    EXPECT_NE(sa.str(), sb.str());
}

TEST_F(Cli, CheckPasses) { EXPECT_EQ(run("check"), 0); }
