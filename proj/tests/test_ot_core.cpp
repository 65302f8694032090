// Discrete measures, cost matrices, W1 and total variation.
#include <cmath>
#include <gtest/gtest.h>
#include <random>
#include <sstream>

#include "otdet/ot_core.hpp"

using namespace otdet;

namespace {

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

DiscreteMeasure random_measure(std::mt19937_64& gen, std::size_t n, Eigen::Index d) {
    std::uniform_real_distribution<double> U(-2.0, 2.0), W(0.05, 1.0);
    std::vector<Point> s;
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Point p(d);
        for (Eigen::Index k = 0; k < d; ++k) p[k] = U(gen);
        s.push_back(p);
        w[static_cast<Eigen::Index>(i)] = W(gen);
    }
    w /= w.sum();
    return DiscreteMeasure(std::move(s), w);
}

// Closed-form W1 on the line: integral of |F_mu - F_nu|.
double w1_on_line(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<std::pair<double, double>> ev;
    for (std::size_t i = 0; i < mu.size(); ++i) ev.emplace_back(mu.support()[i][0], mu.weights()[static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < nu.size(); ++i) ev.emplace_back(nu.support()[i][0], -nu.weights()[static_cast<Eigen::Index>(i)]);
    std::sort(ev.begin(), ev.end());
    double F = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        F += ev[i].second;
        total += std::abs(F) * (ev[i + 1].first - ev[i].first);
    }
    return total;
}

}  // namespace

// =============================================================================
// DiscreteMeasure
// =============================================================================

TEST(DiscreteMeasure, RenormalizesWithinTolerance) {
    Eigen::VectorXd w(2);
    w << 0.5, 0.5 + 5e-13;
    const DiscreteMeasure mu({pt({0}), pt({1})}, w);
    EXPECT_NEAR(mu.weights().sum(), 1.0, 1e-15);
}

TEST(DiscreteMeasure, RejectsInvalidWeights) {
    Eigen::VectorXd w(2);
    w << 0.6, 0.5;
    EXPECT_THROW(DiscreteMeasure({pt({0}), pt({1})}, w), ValidationError);
    w << 1.2, -0.2;
    EXPECT_THROW(DiscreteMeasure({pt({0}), pt({1})}, w), ValidationError);
    EXPECT_THROW(DiscreteMeasure({pt({0})}, w), DimensionError);
    EXPECT_THROW(DiscreteMeasure({pt({0}), pt({1, 2})}, Eigen::Vector2d(0.5, 0.5)), DimensionError);
}

TEST(DiscreteMeasure, CsvRoundTrip) {
    Eigen::VectorXd w(2);
    w << 0.25, 0.75;
    const DiscreteMeasure mu({pt({0.1, -2}), pt({3, 1.0 / 3.0})}, w);
    std::stringstream ss;
    write_measure_csv(ss, mu);
    EXPECT_EQ(ss.str().substr(0, 7), "w,x1,x2");
    const auto back = read_measure_csv(ss);
    EXPECT_EQ(back.weights(), mu.weights());
    EXPECT_EQ(back.support()[1], mu.support()[1]);
}

TEST(DiscreteMeasure, CsvErrorsCarryLineNumbers) {
    std::stringstream ss("w,x1\n0.5,1\n0.5,abc\n");
    try {
        read_measure_csv(ss, "m.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("m.csv:3"), std::string::npos);
    }
}

// =============================================================================
// Cost matrix
// =============================================================================

TEST(CostMatrix, SinglePoint) {
    const auto c = cost_matrix({pt({1, 2})});
    ASSERT_EQ(c.D.rows(), 1);
    EXPECT_EQ(c.D(0, 0), 0.0);
}

TEST(CostMatrix, LinePoints) {
    const auto c = cost_matrix({pt({0}), pt({3})});
    EXPECT_EQ(c.D(0, 1), 3.0);
    EXPECT_EQ(c.D(1, 0), 3.0);
    EXPECT_EQ(c.D(1, 1), 0.0);
}

TEST(CostMatrix, PythagoreanTriple) {
    const auto c = cost_matrix({pt({0, 0}), pt({3, 4})});
    EXPECT_DOUBLE_EQ(c.D(0, 1), 5.0);
}

TEST(CostMatrix, MixedDimensionsThrow) { EXPECT_THROW(cost_matrix({pt({0}), pt({0, 1})}), DimensionError); }

TEST(CostMatrix, MetricStructure) {
    std::mt19937_64 gen(5);
    const auto mu = random_measure(gen, 12, 3);
    const auto D = cost_matrix(mu.support()).D;
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        EXPECT_EQ(D(i, i), 0.0);
        for (Eigen::Index j = 0; j < D.cols(); ++j) {
            EXPECT_EQ(D(i, j), D(j, i));
            for (Eigen::Index k = 0; k < D.cols(); ++k) EXPECT_LE(D(i, k), D(i, j) + D(j, k) + 1e-12);
        }
    }
}

// =============================================================================
// W1
// =============================================================================

TEST(Wasserstein, SelfDistanceIsZero) {
    std::mt19937_64 gen(1);
    const auto mu = random_measure(gen, 4, 2);
    EXPECT_NEAR(w1_distance(mu, mu), 0.0, 1e-12);
}

TEST(Wasserstein, DiracsGiveGroundDistance) {
    EXPECT_NEAR(w1_distance(DiscreteMeasure::dirac(pt({0, 0})), DiscreteMeasure::dirac(pt({3, 4}))), 5.0, 1e-12);
}

TEST(Wasserstein, SplitMassToMidpoint) {
    const auto mu = DiscreteMeasure::uniform({pt({0}), pt({1})});
    EXPECT_NEAR(w1_distance(mu, DiscreteMeasure::dirac(pt({0.5}))), 0.5, 1e-12);
}

TEST(Wasserstein, MatchesLineFormula) {
    std::mt19937_64 gen(9);
    for (int i = 0; i < 50; ++i) {
        const auto mu = random_measure(gen, 1 + gen() % 6, 1);
        const auto nu = random_measure(gen, 1 + gen() % 6, 1);
        EXPECT_NEAR(w1_distance(mu, nu), w1_on_line(mu, nu), 1e-9);
    }
}

TEST(Wasserstein, MetricAxioms) {
    std::mt19937_64 gen(2024);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(gen() % 3);
        const auto a = random_measure(gen, 1 + gen() % 5, d);
        const auto b = random_measure(gen, 1 + gen() % 5, d);
        const auto c = random_measure(gen, 1 + gen() % 5, d);
        const double ab = w1_distance(a, b), ba = w1_distance(b, a), bc = w1_distance(b, c), ac = w1_distance(a, c);
        EXPECT_GE(ab, 0.0);
        EXPECT_NEAR(w1_distance(a, a), 0.0, 1e-8);
        EXPECT_NEAR(ab, ba, 1e-8);
        EXPECT_LE(ac, ab + bc + 1e-8);
    }
}

TEST(Wasserstein, BoundedByLargestCostOnCommonSupport) {
    std::mt19937_64 gen(4);
    for (int i = 0; i < 20; ++i) {
        const auto a = random_measure(gen, 5, 2);
        Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(5, [&] { return std::uniform_real_distribution<double>(0.01, 1)(gen); });
        const DiscreteMeasure b(a.support(), w / w.sum());
        EXPECT_LE(w1_distance(a, b), cost_matrix(a.support()).D.maxCoeff() + 1e-12);
    }
}

TEST(Wasserstein, ScalesWithSupport) {
    std::mt19937_64 gen(6);
    for (int i = 0; i < 20; ++i) {
        const auto a = random_measure(gen, 4, 2), b = random_measure(gen, 3, 2);
        const double c = 0.1 + 3.0 * std::uniform_real_distribution<double>()(gen);
        auto scale = [&](const DiscreteMeasure& m) {
            std::vector<Point> s = m.support();
            for (auto& p : s) p *= c;
            return DiscreteMeasure(s, m.weights());
        };
        EXPECT_NEAR(w1_distance(scale(a), scale(b)), c * w1_distance(a, b), 1e-8);
    }
}

TEST(Wasserstein, DimensionMismatchThrows) {
    EXPECT_THROW(w1_distance(DiscreteMeasure::dirac(pt({0})), DiscreteMeasure::dirac(pt({0, 0}))), DimensionError);
}

// =============================================================================
// Total variation
// =============================================================================

TEST(TotalVariation, Examples) {
    const Eigen::Vector2d p(0.75, 0.25), q(0.25, 0.75);
    EXPECT_DOUBLE_EQ(tv_common_support(p, p), 0.0);
    EXPECT_DOUBLE_EQ(tv_common_support(p, q), 0.5);
    EXPECT_DOUBLE_EQ(tv_common_support(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 1.0);
    EXPECT_THROW(tv_common_support(p, Eigen::Vector3d(1, 0, 0)), DimensionError);
}

TEST(TotalVariation, RangeAndSymmetry) {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd p = Eigen::VectorXd::NullaryExpr(6, [&] { return U(gen); });
        Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(6, [&] { return U(gen); });
        p /= p.sum();
        q /= q.sum();
        const double tv = tv_common_support(p, q);
        EXPECT_GE(tv, 0.0);
        EXPECT_LE(tv, 1.0);
        EXPECT_GT(tv, 0.0);
        EXPECT_DOUBLE_EQ(tv, tv_common_support(q, p));
    }
}
