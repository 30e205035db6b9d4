#include <gtest/gtest.h>

#include <sstream>

#include "oracle.hpp"
#include "tandim/dimensions.hpp"

using namespace tandim;

namespace {

FiniteMetricSpace points(const std::vector<std::vector<double>>& pts) {
    std::vector<std::string> labels;
    std::vector<double> coords;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        labels.push_back("p" + std::to_string(i));
        coords.insert(coords.end(), pts[i].begin(), pts[i].end());
    }
    return FiniteMetricSpace::from_points(labels, coords, static_cast<int>(pts.front().size()));
}

double lr(double a, double b) { return std::log(a) / std::log(b); }

FractalSpec sierpinski(std::int64_t depth) { return {family::sierpinski, Schedule::named("sierpinski-23"), depth}; }
FractalSpec vicsek(std::int64_t depth) { return {family::chessboard, Schedule::named("vicsek-12"), depth}; }

// Prefix averages and window extremes of log a / log s straight from the
// interval-scan schedules.
struct BruteDims {
    double d, delta_lo, delta_hi;
};

BruteDims brute(bool tri, long depth) {
    double la = 0, ls = 0, lo = 1e9, hi = -1e9;
    for (long j = 1; j <= depth; ++j) {
        const int q = tri ? oracle::sierpinski_q(j) : oracle::vicsek_q(j);
        const double s = tri ? q : 2 * q + 1, a = tri ? q * (q + 1) / 2.0 : 2.0 * q * q + 2 * q + 1;
        la += std::log(a);
        ls += std::log(s);
        if (j > depth / 2) lo = std::min(lo, std::log(a) / std::log(s)), hi = std::max(hi, std::log(a) / std::log(s));
    }
    return {la / ls, lo, hi};
}

}  // namespace

TEST(ClosedForm, SierpinskiGoldenValues) {
    auto c = closed_form_dims(Schedule::named("sierpinski-23"), family::sierpinski, 100000);
    EXPECT_EQ(c.method, "run-growth");
    EXPECT_NEAR(c.delta_lower, lr(3, 2), 1e-12);
    EXPECT_NEAR(c.d_lower, lr(18, 6), 1e-12);
    EXPECT_NEAR(c.d_upper, lr(18, 6), 1e-12);
    EXPECT_NEAR(c.delta_upper, lr(6, 3), 1e-12);
    auto b = brute(true, 2'000'000);
    EXPECT_NEAR(c.d_lower, b.d, 2e-3);
    EXPECT_DOUBLE_EQ(c.delta_lower, b.delta_lo);
    EXPECT_DOUBLE_EQ(c.delta_upper, b.delta_hi);
}

TEST(ClosedForm, VicsekGoldenValuesAndCaptionVariant) {
    for (const char* name : {"vicsek-12", "vicsek-12-caption"}) {
        auto c = closed_form_dims(Schedule::named(name), family::chessboard, 100000);
        EXPECT_EQ(c.method, "run-growth") << name;
        EXPECT_NEAR(c.delta_lower, lr(5, 3), 1e-12) << name;
        EXPECT_NEAR(c.d_lower, lr(65, 15), 1e-12) << name;
        EXPECT_NEAR(c.d_upper, lr(65, 15), 1e-12) << name;
        EXPECT_NEAR(c.delta_upper, lr(13, 5), 1e-12) << name;
    }
    auto b = brute(false, 2'000'000);
    EXPECT_NEAR(b.d, lr(65, 15), 2e-3);
}

TEST(ClosedForm, ConstantAndEventuallyConstantSchedules) {
    for (int q : {2, 3, 5}) {
        auto c = closed_form_dims(Schedule::constant(q), family::sierpinski, 50);
        const double r = lr(q * (q + 1) / 2.0, q);
        EXPECT_NEAR(c.delta_lower, r, 1e-12);
        EXPECT_NEAR(c.d_upper, r, 1e-12);
        EXPECT_NEAR(c.delta_upper, r, 1e-12);
    }
    auto c = closed_form_dims(Schedule::explicit_values({2, 3, 2, 3, 1}), family::chessboard, 40);
    EXPECT_EQ(c.method, "eventually-constant");
    EXPECT_NEAR(c.d_lower, lr(5, 3), 1e-12);
}

TEST(ClosedForm, ChainHoldsAcrossDepths) {
    for (std::int64_t depth : {20, 200, 5000}) {
        auto c = closed_form_dims(Schedule::named("sierpinski-23"), family::sierpinski, depth);
        EXPECT_LE(c.delta_lower, c.d_lower + 1e-12);
        EXPECT_LE(c.d_lower, c.d_upper + 1e-12);
        EXPECT_LE(c.d_upper, c.delta_upper + 1e-12);
    }
}

TEST(Estimators, SierpinskiDeepTablesNearClosedForm) {
    auto r = estimate_dimensions(sierpinski(10000));
    EXPECT_NEAR(r.delta_lower.value, lr(3, 2), 0.02);
    EXPECT_NEAR(r.delta_upper.value, lr(6, 3), 0.02);
    EXPECT_NEAR(r.d_lower.value, lr(18, 6), 0.02);
    EXPECT_NEAR(r.d_upper.value, lr(18, 6), 0.02);
    auto chain = dim_chain_check(r);
    EXPECT_TRUE(chain.pass) << chain.detail << " " << chain.worst_margin;
}

TEST(Estimators, VicsekDeepTablesNearClosedForm) {
    auto r = estimate_dimensions(vicsek(10000));
    EXPECT_NEAR(r.delta_lower.value, lr(5, 3), 0.02);
    EXPECT_NEAR(r.delta_upper.value, lr(13, 5), 0.02);
    EXPECT_NEAR(r.d_lower.value, lr(65, 15), 0.02);
    EXPECT_NEAR(r.d_upper.value, lr(65, 15), 0.02);
    EXPECT_TRUE(dim_chain_check(r).pass);
}

TEST(Estimators, ShallowDepthIsARangeError) { EXPECT_THROW(estimate_dimensions(sierpinski(30)), range_error); }

TEST(Chain, InvertedReportFails) {
    DimensionReport r;
    r.delta_lower = {1.6, 1.6, 1.6};
    r.d_lower = {1.5, 1.5, 1.5};
    r.d_upper = {1.7, 1.7, 1.7};
    r.delta_upper = {1.8, 1.8, 1.8};
    auto c = dim_chain_check(r);
    EXPECT_FALSE(c.pass);
    EXPECT_NE(c.detail.find("delta_lower <= d_lower"), std::string::npos);
    EXPECT_NEAR(c.worst_margin, -0.1, 1e-9);
    r.delta_lower = {1.6, 1.45, 1.62};  // overlapping brackets absorb the inversion
    EXPECT_TRUE(dim_chain_check(r).pass);
}

TEST(Estimators, RescaleShiftsTableButKeepsEstimates) {
    // 1/r X shifts t by log r; limits are unchanged.
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({std::pow(0.8, i)});
    pts.push_back({0.0});
    auto X = points(pts);
    PointedSpace P(X, 40);
    const double k = std::log(2.0);
    auto g1 = g_finite(P, GGrid::tangential(6, 4, k, 0.0));
    PointedSpace Y(X.scaled(8.0), 40);
    auto g2 = g_finite(Y, GGrid::tangential(6, 4, k, -3 * k));
    auto a = report_from_table(g1), b = report_from_table(g2);
    EXPECT_DOUBLE_EQ(a.delta_lower.value, b.delta_lower.value);
    EXPECT_DOUBLE_EQ(a.delta_upper.value, b.delta_upper.value);
    EXPECT_DOUBLE_EQ(a.d_upper.value, b.d_upper.value);
}

TEST(Estimators, UnionOfLinesMatchesMaxOfParts) {
    // Two perpendicular segments through the base: covering numbers at most
    // add, so the union's estimates lie between the max and the max plus
    // log 2 / h.
    const int n = 33;
    std::vector<std::vector<double>> line, cross;
    for (int i = 0; i < n; ++i) line.push_back({i / double(n - 1), 0.0});
    cross = line;
    for (int i = 1; i < n; ++i) cross.push_back({0.0, i / double(n - 1)});
    const double k = std::log(2.0);
    auto grid = GGrid::tangential(2, 4, k);
    auto gl = g_finite(PointedSpace(points(line), 0), grid);
    auto gc = g_finite(PointedSpace(points(cross), 0), grid);
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t m = 1; m <= 4; ++m) {
            EXPECT_GE(gc(i, m) + 1e-9, gl(i, m));
            EXPECT_LE(gc(i, m), gl(i, m) + std::log(2.0) + 1e-9);
        }
}

TEST(Assumption, SierpinskiIsStableAndBounded) {
    AssumptionPlan plan;
    plan.last_octave = 8;
    plan.lambda_octaves = {1, 2};
    plan.mu_octaves = {1, 2};
    plan.centers = 12;
    auto a = check_assumption(FractalSpec{family::sierpinski, Schedule::named("sierpinski-23"), 14}, plan);
    ASSERT_GE(a.per_scale.size(), 4u);
    EXPECT_FALSE(a.partial);
    EXPECT_GE(a.c_hat, 1.0);
    EXPECT_LT(a.c_hat, 40.0);
    for (double c : a.per_scale) EXPECT_LE(c, a.c_hat);
    EXPECT_FALSE(a.worst_y.empty());
}

TEST(Assumption, FiniteLineIsNearlyHomogeneous) {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i <= 64; ++i) pts.push_back({i / 64.0});
    PointedSpace P(points(pts), 32);
    auto a = check_assumption(P, {1.0, 1.5, 2.0, 2.5}, {1, 2}, {1}, std::log(2.0), 8);
    EXPECT_EQ(a.per_scale.size(), 4u);
    EXPECT_LE(a.c_hat, 2.0);
    EXPECT_FALSE(a.partial);
}

TEST(Assumption, StabilityFlag) {
    AssumptionReport r;
    r.per_scale = {2, 3, 3, 2.5};
    detail::finish_assumption(r);
    EXPECT_TRUE(r.stable);
    EXPECT_DOUBLE_EQ(r.c_hat, 3);
    r.per_scale = {2, 3, 3, 4};
    detail::finish_assumption(r);
    EXPECT_FALSE(r.stable);
}

TEST(DimensionReport, JsonAndCsv) {
    auto r = report_from_table(g_combinatorial(sierpinski(400), GGrid::tangential(100, 20)));
    auto j = to_json(r);
    for (const char* key : {"delta_lower", "d_lower", "d_upper", "delta_upper", "source", "provenance"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["provenance"]["backend"], "comb");
    std::ostringstream os;
    write_csv_row(os, r, true);
    EXPECT_EQ(os.str().rfind("source,delta_lower,d_lower,d_upper,delta_upper", 0), 0u);
    auto c = to_json(closed_form_dims(Schedule::named("sierpinski-23"), family::sierpinski, 1000));
    EXPECT_EQ(c["growth"]["2"], 2);
    EXPECT_EQ(c["growth"]["3"], 2);
}
