// Config file parsing and scenario overrides.
#include <gtest/gtest.h>
#include <sstream>

#include "otdet/bench.hpp"
#include "otdet/config.hpp"

using namespace otdet;

namespace {

Config parse(const std::string& text) {
    std::istringstream is(text);
    return Config::parse(is, "test.cfg");
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

// =============================================================================
// Parsing
// =============================================================================

TEST(Config, SectionsCommentsAndScalars) {
    const auto cfg = parse(
        "top = 1\n"
        "# comment line\n"
        "[scenario]\n"
        "seed = 7   # trailing comment\n"
        "name = my run\n"
        "\n"
        "[training]\n"
        "eps1 = 1e-3\n"
        "eps2 = +0.5\n");
    EXPECT_EQ(cfg.get_int("top"), 1);
    EXPECT_EQ(cfg.get_int("scenario.seed"), 7);
    EXPECT_EQ(cfg.get_string("scenario.name"), "my run");
    EXPECT_DOUBLE_EQ(cfg.get_double("training.eps1"), 1e-3);
    EXPECT_DOUBLE_EQ(cfg.get_double("training.eps2"), 0.5);
    EXPECT_FALSE(cfg.maybe_double("training.n1").has_value());
    EXPECT_EQ(cfg.source(), "test.cfg");
}

TEST(Config, VectorsAndMatrices) {
    const auto cfg = parse(
        "v = [1, 2.5, -3]\n"
        "empty = []\n"
        "M = [[1, 0],\n"
        "     [0, 2]]\n"
        "after = 4\n");
    EXPECT_EQ(cfg.get_vector("v"), Eigen::Vector3d(1, 2.5, -3));
    EXPECT_EQ(cfg.get_vector("empty").size(), 0);
    Eigen::Matrix2d M;
    M << 1, 0, 0, 2;
    EXPECT_EQ(cfg.get_matrix("M"), Eigen::MatrixXd(M));
    EXPECT_EQ(cfg.get_int("after"), 4);
}

TEST(Config, LaterKeysOverride) {
    auto cfg = parse("[a]\nx = 1\nx = 2\n");
    EXPECT_EQ(cfg.get_int("a.x"), 2);
    cfg.set("a.x", "3");
    EXPECT_EQ(cfg.get_int("a.x"), 3);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(message_of([] { parse("a = 1\njunk line\n"); }).find("test.cfg:2"), std::string::npos);
    EXPECT_NE(message_of([] { parse("a = 1\n[]\n"); }).find("test.cfg:2"), std::string::npos);
    EXPECT_NE(message_of([] { parse("M = [[1, 2]\n"); }).find("unbalanced"), std::string::npos);
    const auto cfg = parse("\n\nx = abc\nM = [[1, 2], [3]]\ni = 1.5\n");
    EXPECT_NE(message_of([&] { cfg.get_double("x"); }).find("test.cfg:3: x"), std::string::npos);
    EXPECT_NE(message_of([&] { cfg.get_matrix("M"); }).find("ragged"), std::string::npos);
    EXPECT_NE(message_of([&] { cfg.get_int("i"); }).find("integer"), std::string::npos);
    EXPECT_NE(message_of([&] { cfg.get_string("nope"); }).find("missing key 'nope'"), std::string::npos);
}

TEST(Config, ErrorsAreConfigKind) {
    EXPECT_THROW(parse("= 3\n"), ConfigError);
    EXPECT_THROW(parse("v = [1, 2] x\n").get_vector("v"), ConfigError);
    EXPECT_THROW(Config::load("/nonexistent/otdet.cfg"), IoError);
}

// =============================================================================
// Scenario overrides
// =============================================================================

TEST(ScenarioConfig, DefaultsToPreset) {
    const auto sc = scenario_from_config(parse(""));
    EXPECT_EQ(sc.name, "qtank-gauss-1.5");
    EXPECT_EQ(sc.horizon, 500u);
}

TEST(ScenarioConfig, TrainingAndRunOverrides) {
    const auto sc = scenario_from_config(parse(
        "[scenario]\npreset = qtank-gexp-0.5\nseed = 11\nhorizon = 300\n"
        "[training]\nn1 = 20\neps2 = 0.02\nclip = none\n"
        "[attack]\nt_attack = 100\n"));
    EXPECT_EQ(sc.seed, 11u);
    EXPECT_EQ(sc.horizon, 300u);
    EXPECT_EQ(sc.training.n1, 20u);
    EXPECT_EQ(sc.training.n2, 150u);
    EXPECT_EQ(sc.training.eps2, 0.02);
    EXPECT_FALSE(sc.training.clip.has_value());
    EXPECT_EQ(sc.attack.t_attack, 100u);
    EXPECT_EQ(sc.training.surrogate.noise.kind(), NoiseModel::Kind::gaussian_plus_exp);
}

TEST(ScenarioConfig, CustomPlantRecomputesObserver) {
    const auto sc = scenario_from_config(parse(
        "[system]\nA = [[0.5]]\nB = [[0]]\nC = [[1]]\nE = [[1, 0]]\nF = [[0, 1]]\n"
        "[noise]\ncov = [[1, 0], [0, 1]]\n"
        "[attack]\nAa = [[0.2]]\ncov = [[2]]\nkind = gaussian\nt_attack = 10\n"
        "[scenario]\nhorizon = 50\n"));
    EXPECT_EQ(sc.system.state_dim(), 1);
    EXPECT_EQ(sc.observer.L.rows(), 1);
    EXPECT_EQ(sc.observer.L.cols(), 1);
    EXPECT_LT(spectral_radius(sc.system.A - sc.observer.L * sc.system.C), 1.0);
    EXPECT_EQ(sc.training.surrogate.Aa(0, 0), 0.2);
}

TEST(ScenarioConfig, SeparateSurrogate) {
    const auto sc = scenario_from_config(parse("[surrogate]\nkind = gaussian\ncov = [[3,0,0,0],[0,3,0,0],[0,0,3,0],[0,0,0,3]]\n"));
    EXPECT_EQ(sc.training.surrogate.noise.cov()(0, 0), 3.0);
    EXPECT_EQ(sc.attack.noise.cov()(0, 0), 1.5);
}

TEST(ScenarioConfig, Rejections) {
    EXPECT_THROW(scenario_from_config(parse("[scenario]\npreset = nope\n")), ConfigError);
    EXPECT_THROW(scenario_from_config(parse("[training]\neps1 = 0\n")), ConfigError);
    EXPECT_THROW(scenario_from_config(parse("[training]\nn1 = -3\n")), ConfigError);
    EXPECT_THROW(scenario_from_config(parse("[attack]\nt_attack = 900\n")), ConfigError);
    EXPECT_THROW(scenario_from_config(parse("[attack]\nkind = laplace\n")), ConfigError);
    EXPECT_THROW(scenario_from_config(parse("[system]\nA = [[1, 0]]\n")), ConfigError);
}
