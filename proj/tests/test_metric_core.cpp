#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "tandim/counting.hpp"
#include "tandim/gromov_hausdorff.hpp"
#include "tandim/metric_space.hpp"
#include "tandim/suites.hpp"

using namespace tandim;

namespace {

FiniteMetricSpace line(std::vector<double> xs) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < xs.size(); ++i) labels.push_back(std::to_string(i));
    return FiniteMetricSpace::from_points(labels, xs, 1);
}

FiniteMetricSpace random_planar(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> c(2 * n);
    for (auto& v : c) v = u(rng);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
    return FiniteMetricSpace::from_points(labels, c, 2);
}

oracle::Table table(const FiniteMetricSpace& s) {
    oracle::Table t(s.size(), std::vector<double>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) t[i][j] = s(i, j);
    return t;
}

std::vector<int> as_int(const point_set& p) { return {p.begin(), p.end()}; }

}  // namespace

TEST(Ball, OpenExcludesBoundary) {
    auto X = line({0, 1, 2});
    EXPECT_EQ(ball(X, 1, 1.0, ball_kind::open), (point_set{1}));
    EXPECT_EQ(ball(X, 1, 1.0, ball_kind::closed), (point_set{0, 1, 2}));
    EXPECT_EQ(ball(X, 0, 2.5, ball_kind::open), (point_set{0, 1, 2}));
}

TEST(Ball, RejectsUnknownCenterAndBadRadius) {
    auto X = line({0, 1, 2});
    EXPECT_THROW(ball(X, 7, 1.0, ball_kind::open), input_error);
    EXPECT_THROW(ball(X, 0, 0.0, ball_kind::open), input_error);
    EXPECT_THROW(X.index_of("nope"), input_error);
}

TEST(Covering, LineExamples) {
    auto X = line({0, 1, 2});
    auto c1 = covering_number(X, 0.6);
    EXPECT_TRUE(c1.exact);
    EXPECT_EQ(c1.lower, 3);
    auto c2 = covering_number(X, 1.2);
    EXPECT_TRUE(c2.exact);
    EXPECT_EQ(c2.lower, 1);
    auto single = line({5.0});
    EXPECT_EQ(covering_number(single, 1e-9).upper, 1);
    EXPECT_THROW(covering_number(X, point_set{}, 1.0), input_error);
}

TEST(Packing, LineExamples) {
    auto X = line({0, 1, 2});
    EXPECT_EQ(packing_number(X, 0.6).lower, 2);
    EXPECT_EQ(packing_number(X, 0.5).lower, 3);
    EXPECT_TRUE(packing_number(X, 0.5).exact);
    EXPECT_EQ(packing_number(line({3.0}), 10.0).upper, 1);
}

TEST(Rescale, ScalesAndComposes) {
    auto X = line({0, 1, 2});
    auto Y = rescale(X, 2.0);
    EXPECT_EQ(Y(0, 1), 2.0);
    EXPECT_EQ(Y(0, 2), 4.0);
    EXPECT_EQ(rescale(X, 1.0).table(), X.table());
    EXPECT_EQ(rescale(rescale(X, 0.5), 4.0).table(), rescale(X, 2.0).table());
    EXPECT_THROW(rescale(X, 0.0), input_error);
    EXPECT_THROW(rescale(X, -1.0), input_error);
}

TEST(MetricSpaceJson, ReportsFirstViolatingTriple) {
    nlohmann::json j = {{"labels", {"a", "b", "c"}}, {"dist", {0, 1, 5, 1, 0, 1, 5, 1, 0}}};
    try {
        metric_space_from_json(j);
        FAIL() << "expected input_error";
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find("(a,b,c)"), std::string::npos) << e.what();
    }
    nlohmann::json ok = {{"labels", {"a", "b"}}, {"dist", {0, 2, 2, 0}}};
    auto s = metric_space_from_json(ok);
    EXPECT_EQ(s(0, 1), 2.0);
    nlohmann::json asym = {{"labels", {"a", "b"}}, {"dist", {0, 2, 1, 0}}};
    EXPECT_THROW(metric_space_from_json(asym), input_error);
}

TEST(Covering, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.05, 0.8);
    for (int trial = 0; trial < 150; ++trial) {
        auto X = random_planar(rng, 2 + trial % 10);
        auto T = table(X);
        auto E = all_points(X);
        const double r = ur(rng);
        for (bool closed : {false, true})
            for (bool ambient : {false, true}) {
                CountOptions opt;
                opt.kind = closed ? ball_kind::closed : ball_kind::open;
                opt.policy = ambient ? center_policy::ambient : center_policy::in_subset;
                auto got = covering_number(X, E, r, opt);
                ASSERT_TRUE(got.exact);
                EXPECT_EQ(got.lower, oracle::cover(T, as_int(E), as_int(E), r, closed));
            }
        auto pk = packing_number(X, r);
        ASSERT_TRUE(pk.exact);
        EXPECT_EQ(pk.lower, oracle::pack(T, as_int(E), r));
    }
}

TEST(Covering, BracketContainsTruthWhenBudgetIsTiny) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto X = random_planar(rng, 12);
        auto E = all_points(X);
        CountOptions opt;
        opt.exact_threshold = 0;
        opt.node_budget = 1;
        auto tight = covering_number(X, E, 0.2);
        auto loose = covering_number(X, E, 0.2, opt);
        EXPECT_LE(loose.lower, tight.lower);
        EXPECT_GE(loose.upper, tight.upper);
        auto ptight = packing_number(X, 0.15);
        auto ploose = packing_number(X, E, 0.15, opt);
        EXPECT_LE(ploose.lower, ptight.lower);
        EXPECT_GE(ploose.upper, ptight.upper);
    }
}

TEST(Counting, ProductAndUnionBounds) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        auto X = random_planar(rng, 3 + trial % 3);
        auto Y = random_planar(rng, 3);
        auto P = product_space(X, Y);
        const double R = 0.7, r = 0.2;
        auto bx = ball(X, 0, R, ball_kind::open);
        auto by = ball(Y, 0, R, ball_kind::open);
        auto bp = ball(P, 0, R, ball_kind::open);
        ASSERT_EQ(bp.size(), bx.size() * by.size());
        EXPECT_GE(packing_number(P, bp, r).lower, packing_number(X, bx, r).lower * packing_number(Y, by, r).lower);
        EXPECT_LE(covering_number(P, bp, r).upper, covering_number(X, bx, r).upper * covering_number(Y, by, r).upper);

        // union of two subsets sharing the point 0
        auto U = random_planar(rng, 10);
        point_set A{0, 1, 2, 3, 4, 5}, B{0, 6, 7, 8, 9};
        auto all = all_points(U);
        auto bu = ball_within(U, all, 0, R, ball_kind::open);
        auto ba = ball_within(U, A, 0, R, ball_kind::open);
        auto bb = ball_within(U, B, 0, R, ball_kind::open);
        EXPECT_LE(covering_number(U, bu, r).upper, covering_number(U, ba, r).lower + covering_number(U, bb, r).lower);
    }
}

TEST(GromovHausdorff, Examples) {
    auto X = line({0, 1, 2});
    auto self = gh_distance(X, X);
    EXPECT_TRUE(self.exact);
    EXPECT_EQ(self.upper, 0.0);

    auto one = line({0.0});
    auto two = line({0.0, 3.0});
    auto d = gh_distance(one, two);
    EXPECT_TRUE(d.exact);
    EXPECT_DOUBLE_EQ(d.upper, 1.5);

    auto tri = FiniteMetricSpace({"a", "b", "c"}, {0, 1, 1, 1, 0, 1, 1, 1, 0});
    auto flat = FiniteMetricSpace({"a", "b", "c"}, {0, 1, 2, 1, 0, 1, 2, 1, 0});
    auto t = gh_distance(tri, flat);
    EXPECT_TRUE(t.exact);
    EXPECT_DOUBLE_EQ(t.upper, 0.5);
    EXPECT_DOUBLE_EQ(oracle::gh(table(tri), table(flat)), 0.5);
}

TEST(GromovHausdorff, PointedExamples) {
    PointedSpace a(line({0, 1}), 0), b(line({0, 1.2}), 0);
    auto d = pointed_gh_distance(a, b, 2.0);
    EXPECT_TRUE(d.exact);
    EXPECT_NEAR(d.upper, 0.1, 1e-15);
    EXPECT_EQ(pointed_gh_distance(a, a, 2.0).upper, 0.0);
    auto tiny = pointed_gh_distance(a, b, 0.5);
    EXPECT_EQ(tiny.upper, 0.0);
}

TEST(GromovHausdorff, ExactMatchesRelationEnumeration) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        auto X = random_planar(rng, 1 + trial % 4);
        auto Y = random_planar(rng, 1 + (trial / 4) % 3);
        auto d = gh_distance(X, Y);
        ASSERT_TRUE(d.exact);
        EXPECT_NEAR(d.upper, oracle::gh(table(X), table(Y)), 1e-12);
        auto p = pointed_gh_distance(PointedSpace(X, 0), PointedSpace(Y, 0), 10.0);
        EXPECT_NEAR(p.upper, oracle::gh(table(X), table(Y), 0, 0), 1e-12);
    }
}

TEST(GromovHausdorff, BracketPropertiesOnLargerSpaces) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto X = random_planar(rng, 8 + trial % 5);
        auto Y = random_planar(rng, 9);
        auto xy = gh_distance(X, Y), yx = gh_distance(Y, X);
        EXPECT_LE(xy.lower, xy.upper);
        EXPECT_LE(yx.lower, yx.upper);
        // brackets of the two orders must overlap
        EXPECT_LE(xy.lower, yx.upper + 1e-12);
        EXPECT_LE(yx.lower, xy.upper + 1e-12);
        auto zero = gh_distance(X, X);
        EXPECT_EQ(zero.lower, 0.0);
        EXPECT_LE(zero.upper, 1e-12);
    }
}

TEST(Lemmas, CoveringProductBoundHoldsWithAmbientCenters) {
    auto h = suites::counting_harness(99, 60, 30, true, false);
    EXPECT_EQ(h.trials, 1800u);
    EXPECT_EQ(h.number_ineq_violations, 0u) << h.first_number_violation;
}

TEST(Lemmas, PackingProductBoundFailsOnFourPoints) {
    // B(7, 3.5) = {4, 7, 8}; nu(1.75) = 2, nu(0.4375) = 3, but every
    // B(y, 1.75) holds two points 1 apart, one of them (3) outside B.
    auto X = line({3, 4, 7, 8});
    const double r = 3.5, lam = 0.5, mu = 0.25;
    auto B = ball(X, 2, r, ball_kind::open);
    EXPECT_EQ(as_int(B), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(packing_number(X, B, lam * r).upper, 2);
    EXPECT_EQ(packing_number(X, B, lam * mu * r).upper, 3);
    for (auto y : B) EXPECT_EQ(packing_number(X, ball(X, y, lam * r, ball_kind::open), lam * mu * r).lower, 2);
}

TEST(Lemmas, CountingChainOnRandomSpaces) {
    auto h = suites::counting_harness(5, 90, 20, false, true);
    EXPECT_EQ(h.packing_violations, 0u) << h.first_counting_violation;
    EXPECT_EQ(h.closed_violations, 0u) << h.first_counting_violation;
    EXPECT_EQ(h.inexact, 0u);
}
