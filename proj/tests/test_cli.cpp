// End-to-end runs of the otdet binary.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("otdet_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result run(const std::string& args, const std::string& env = "") const {
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + (env.empty() ? "" : " ") + "'" +
                                OTDET_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }
    json read_json(const std::string& name) const { return json::parse(slurp(path(name))); }

    static std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

    fs::path dir_;
};

const std::string kSmall = " --n1 20 --n2 20";

}  // namespace

// =============================================================================
// simulate
// =============================================================================

TEST_F(Cli, SimulateWritesOneRowPerStep) {
    const auto r = run("simulate --preset qtank-gauss-1.5 --seed 2 -o a.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = slurp(path("a.csv"));
    EXPECT_EQ(lines(text), 501u);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,r1,r2,r3,r4,regime");
    EXPECT_NE(text.find("\n250,"), std::string::npos);
    const auto meta = read_json("a.csv.meta.json");
    EXPECT_EQ(meta["seed"].get<int>(), 2);
    EXPECT_EQ(meta["command"], "simulate");
    EXPECT_EQ(meta["config_digest"].get<std::string>().size(), 16u);
}

TEST_F(Cli, SimulateIsReproducible) {
    ASSERT_EQ(run("simulate --seed 5 --regime nominal -o a.csv").code, 0);
    ASSERT_EQ(run("simulate --seed 5 --regime nominal -o b.csv").code, 0);
    ASSERT_EQ(run("simulate --seed 6 --regime nominal -o c.csv").code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
    EXPECT_EQ(slurp(path("a.csv")).find("attacked"), std::string::npos);
}

TEST_F(Cli, OutputDirFromEnvironment) {
    const auto r = run("simulate", "OTDET_OUTPUT_DIR='" + path("envout").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(path("envout/residuals.csv")));
    ASSERT_EQ(run("simulate --out-dir flagout", "OTDET_OUTPUT_DIR=ignored").code, 0);
    EXPECT_TRUE(fs::exists(path("flagout/residuals.csv")));
    EXPECT_FALSE(fs::exists(path("ignored")));
}

TEST_F(Cli, ConfigFileThenFlags) {
    std::ofstream(path("s.cfg")) << "[scenario]\nseed = 9\nhorizon = 40\n[attack]\nt_attack = 10\n";
    ASSERT_EQ(run("simulate --config s.cfg -o a.csv").code, 0);
    EXPECT_EQ(lines(slurp(path("a.csv"))), 41u);
    EXPECT_EQ(read_json("a.csv.meta.json")["seed"].get<int>(), 9);
    ASSERT_EQ(run("simulate --config s.cfg --horizon 60 -o b.csv").code, 0);
    EXPECT_EQ(lines(slurp(path("b.csv"))), 61u);
}

// =============================================================================
// Errors and exit codes
// =============================================================================

TEST_F(Cli, UnknownPresetListsChoices) {
    const auto r = run("simulate --preset qtank-nope");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("qtank-gexp-0.5"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("simulate --bogus").code, 2);
    EXPECT_EQ(run("simulate --regime sideways").code, 2);
    EXPECT_EQ(run("detect --input x.csv").code, 2);
    EXPECT_EQ(run("train --eps1 -1" + kSmall).code, 2);
}

TEST_F(Cli, MissingFilesAreIoErrors) {
    EXPECT_EQ(run("simulate --config nothere.cfg").code, 4);
    EXPECT_EQ(run("export-mps --nominal a.csv --attacked b.csv").code, 4);
    EXPECT_EQ(run("detect --model m.json --input x.csv --threshold 1").code, 4);
}

// =============================================================================
// train
// =============================================================================

TEST_F(Cli, TrainWritesArtifact) {
    const auto r = run("train --preset qtank-gexp-0.5 -o m.json" + kSmall);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("V* = "), std::string::npos);
    const auto m = read_json("m.json");
    EXPECT_EQ(m["eps1"].get<double>(), 0.001);
    EXPECT_EQ(m["eps2"].get<double>(), 0.01);
    EXPECT_EQ(m["support"].size(), 40u);
    EXPECT_NEAR(m["tv_star"].get<double>(), 1.0 - m["V_star"].get<double>(), 1e-15);
    EXPECT_EQ(m["score_model"]["clip"].get<double>(), 2.0);
    EXPECT_EQ(m["baseline"]["sigma0"].size(), 4u);
    EXPECT_EQ(m["metadata"]["command"], "train");
}

TEST_F(Cli, TrainIsReproducible) {
    ASSERT_EQ(run("train -o a.json" + kSmall).code, 0);
    ASSERT_EQ(run("train -o b.json" + kSmall).code, 0);
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(Cli, TrainFromFiles) {
    std::ofstream(path("early.cfg")) << "[attack]\nt_attack = 5\n";
    ASSERT_EQ(run("simulate --config early.cfg --regime nominal --horizon 15 -o nom.csv").code, 0);
    ASSERT_EQ(run("simulate --config early.cfg --horizon 12 -o att.csv").code, 0);
    const auto r = run("train --nominal nom.csv --attacked att.csv -o m.json");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_json("m.json")["support"].size(), 27u);
    EXPECT_EQ(run("train --nominal nom.csv -o m.json").code, 2);
}

TEST_F(Cli, CorruptTrainingCsvReportsLine) {
    std::ofstream(path("nom.csv")) << "t,r1,regime\n0,0.1,nominal\n1,zz,nominal\n";
    std::ofstream(path("att.csv")) << "t,r1,regime\n0,1.0,attacked\n";
    const auto r = run("train --nominal nom.csv --attacked att.csv");
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("nom.csv:3"), std::string::npos) << r.err;
}

// =============================================================================
// detect
// =============================================================================

TEST_F(Cli, DetectWithTailLevel) {
    ASSERT_EQ(run("train -o m.json" + kSmall).code, 0);
    ASSERT_EQ(run("simulate -o s.csv").code, 0);
    const auto r = run("detect --model m.json --input s.csv --eta 0.01 -o d.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("calibrated h = "), std::string::npos);
    EXPECT_EQ(lines(slurp(path("d.csv"))), 501u);
    const auto s = read_json("d.csv.summary.json");
    EXPECT_NEAR(s["h"].get<double>(), std::sqrt(8.0 * 500 * 4 * std::log(200.0)), 1e-9);
    EXPECT_EQ(s["eta"].get<double>(), 0.01);
    EXPECT_TRUE(fs::exists(path("d.csv.meta.json")));
}

TEST_F(Cli, DetectWithoutAlarm) {
    ASSERT_EQ(run("train -o m.json" + kSmall).code, 0);
    ASSERT_EQ(run("simulate --regime nominal -o s.csv").code, 0);
    ASSERT_EQ(run("detect --model m.json --input s.csv --threshold 1e6 --summary sum.json").code, 0);
    EXPECT_TRUE(read_json("sum.json")["tau_det"].is_null());
}

TEST_F(Cli, DetectRejectsBadArguments) {
    ASSERT_EQ(run("train -o m.json" + kSmall).code, 0);
    std::ofstream(path("two.csv")) << "t,r1,r2,regime\n0,0.1,0.2,nominal\n";
    EXPECT_EQ(run("detect --model m.json --input two.csv --threshold 1").code, 2);
    std::ofstream(path("early.cfg")) << "[attack]\nt_attack = 5\n";
    ASSERT_EQ(run("simulate --config early.cfg --horizon 10 -o s.csv").code, 0);
    EXPECT_EQ(run("detect --model m.json --input s.csv").code, 2);
    EXPECT_EQ(run("detect --model m.json --input s.csv --threshold 1 --eta 0.1").code, 2);
    EXPECT_EQ(run("detect --model m.json --input s.csv --eta 2").code, 2);
    std::ofstream(path("bad.json")) << "{not json";
    EXPECT_EQ(run("detect --model bad.json --input s.csv --threshold 1").code, 4);
}

// =============================================================================
// bench
// =============================================================================

TEST_F(Cli, BenchWritesOneReportPerDetector) {
    const auto r = run("bench --trials 6 --threads 2 --out-dir out" + kSmall);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* id : {"ot", "baseline"}) {
        const auto csv = slurp(path(std::string("out/bench_") + id + ".csv"));
        EXPECT_EQ(csv.substr(0, csv.find('\n')), "detector,h,eta,far,add,n_trials,n_detected");
        EXPECT_EQ(lines(csv), 11u);
        const auto j = read_json(std::string("out/bench_") + id + ".json");
        EXPECT_EQ(j["rows"].size(), 10u);
        EXPECT_EQ(j["metadata"]["seed"].get<int>(), 2);
    }
}

TEST_F(Cli, BenchSingleDetectorAndCustomGrid) {
    ASSERT_EQ(run("bench --trials 4 --detector ot-only --h-grid 5,10,20" + kSmall).code, 0);
    EXPECT_TRUE(fs::exists(path("bench_ot.csv")));
    EXPECT_FALSE(fs::exists(path("bench_baseline.csv")));
    EXPECT_EQ(lines(slurp(path("bench_ot.csv"))), 4u);
    EXPECT_EQ(run("bench --trials 4 --h-grid 5,x" + kSmall).code, 2);
    EXPECT_EQ(run("bench --trials 4 --h-grid 10,5" + kSmall).code, 2);
    EXPECT_EQ(run("bench --trials 0" + kSmall).code, 2);
}

TEST_F(Cli, BenchIsReproducible) {
    ASSERT_EQ(run("bench --trials 8 --threads 3 --out-dir a" + kSmall).code, 0);
    ASSERT_EQ(run("bench --trials 8 --threads 1 --out-dir b" + kSmall).code, 0);
    EXPECT_EQ(slurp(path("a/bench_ot.csv")), slurp(path("b/bench_ot.csv")));
    EXPECT_EQ(slurp(path("a/bench_baseline.csv")), slurp(path("b/bench_baseline.csv")));
}

// =============================================================================
// export-mps
// =============================================================================

TEST_F(Cli, ExportMpsSizes) {
    const auto r = run("export-mps --n1 1 --n2 1 -o w.mps");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("14 variables, 16 rows"), std::string::npos) << r.out;
    const auto mps = slurp(path("w.mps"));
    EXPECT_EQ(mps.rfind("NAME", 0), 0u);
    EXPECT_NE(mps.find("ENDATA"), std::string::npos);
    ASSERT_EQ(run("export-mps --n1 2 --n2 2 -o w2.mps").code, 0);
    EXPECT_EQ(run("export-mps --n1 2 --n2 2 -o w3.mps").code, 0);
    EXPECT_EQ(slurp(path("w2.mps")), slurp(path("w3.mps")));
}
