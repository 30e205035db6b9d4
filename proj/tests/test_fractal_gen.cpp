#include <gtest/gtest.h>

#include <sstream>

#include "oracle.hpp"
#include "tandim/cells.hpp"
#include "tandim/counterexample.hpp"
#include "tandim/schedule.hpp"

using namespace tandim;

namespace {

FractalSpec spec(family f, std::vector<int> q, std::int64_t depth) {
    return {f, Schedule::explicit_values(std::move(q)), depth};
}

FractalSpec named(family f, const std::string& n, std::int64_t depth) { return {f, Schedule::named(n), depth}; }

}  // namespace

TEST(Schedule, SierpinskiFirstLevels) {
    std::vector<int> want{2, 3, 3, 2, 2, 2, 3, 3, 3, 3};
    for (int j = 1; j <= 10; ++j) EXPECT_EQ(schedule_sierpinski(j), want[j - 1]) << j;
}

TEST(Schedule, VicsekFirstLevels) {
    std::vector<int> want{2, 1, 1, 2, 2, 2};
    for (int j = 1; j <= 6; ++j) EXPECT_EQ(schedule_vicsek(j), want[j - 1]) << j;
    auto caption = Schedule::named("vicsek-12-caption");
    EXPECT_EQ(caption(1), 1);
    EXPECT_EQ(caption(2), 2);
    EXPECT_EQ(caption(3), 1);
}

TEST(Schedule, MatchesIntervalScan) {
    auto s = Schedule::named("sierpinski-23").prefix(5000);
    auto v = Schedule::named("vicsek-12").prefix(5000);
    auto c = Schedule::named("vicsek-12-caption").prefix(5000);
    for (long j = 1; j <= 5000; ++j) {
        ASSERT_EQ(s[j - 1], oracle::sierpinski_q(j)) << j;
        ASSERT_EQ(v[j - 1], oracle::vicsek_q(j)) << j;
        ASSERT_EQ(schedule_sierpinski(j), s[j - 1]);
        ASSERT_EQ(c[j - 1], j == 1 ? 1 : oracle::vicsek_q(j - 1));
    }
}

TEST(Schedule, ExplicitRepeatsLastValue) {
    auto s = Schedule::explicit_values({2, 3});
    EXPECT_EQ(s(1), 2);
    EXPECT_EQ(s(2), 3);
    EXPECT_EQ(s(9), 3);
    EXPECT_THROW(Schedule::explicit_values({}), input_error);
    EXPECT_THROW(Schedule::named("koch"), input_error);
}

TEST(ChildCount, Formulas) {
    EXPECT_EQ(child_count(family::sierpinski, 2), 3);
    EXPECT_EQ(child_count(family::sierpinski, 3), 6);
    EXPECT_EQ(child_count(family::chessboard, 1), 5);
    EXPECT_EQ(child_count(family::chessboard, 2), 13);
    EXPECT_THROW(child_count(family::sierpinski, 1), input_error);
    EXPECT_THROW(child_count(family::chessboard, 0), input_error);
    for (int q = 1; q < 8; ++q) {
        const int s = 2 * q + 1;
        EXPECT_EQ(child_count(family::chessboard, q), s * s - 2 * q * (q + 1));
        EXPECT_EQ(static_cast<std::int64_t>(kept_children(family::chessboard, q).size()), child_count(family::chessboard, q));
        if (q >= 2)
            EXPECT_EQ(static_cast<std::int64_t>(kept_children(family::sierpinski, q).size()),
                      child_count(family::sierpinski, q));
    }
}

TEST(FractalSpec, ValidatesValues) {
    EXPECT_THROW(spec(family::sierpinski, {1}, 3).validate(), input_error);
    EXPECT_THROW(spec(family::sierpinski, {2}, 0).validate(), input_error);
    EXPECT_THROW(named(family::sierpinski, "vicsek-12", 3).validate(), input_error);
    EXPECT_NO_THROW(named(family::chessboard, "vicsek-12", 3).validate());
}

TEST(FractalSpec, JsonRoundTrip) {
    auto f = named(family::chessboard, "vicsek-12-caption", 7);
    EXPECT_EQ(fractal_spec_from_json(to_json(f)), f);
    auto g = spec(family::sierpinski, {2, 3, 3}, 4);
    EXPECT_EQ(fractal_spec_from_json(to_json(g)), g);
    EXPECT_THROW(fractal_spec_from_json(nlohmann::json{{"family", "koch"}}), input_error);
    EXPECT_THROW(fractal_spec_from_json(nlohmann::json::parse(R"({"family":"sierpinski","depth":2})")), input_error);
    EXPECT_THROW(fractal_spec_from_json(
                     nlohmann::json::parse(R"({"family":"sierpinski","schedule":{"explicit":[1]},"depth":2})")),
                 input_error);
}

TEST(CellSet, RefineCounts) {
    auto s1 = CellSet::build(spec(family::sierpinski, {2}, 1), 1);
    EXPECT_EQ(s1.size(), 3u);
    auto c1 = CellSet::build(spec(family::chessboard, {1}, 1), 1);
    EXPECT_EQ(c1.size(), 5u);
    auto s23 = CellSet::build(spec(family::sierpinski, {2, 3}, 2), 2);
    EXPECT_EQ(s23.size(), 18u);
    EXPECT_THROW(s23.refine(), input_error);
    auto named4 = CellSet::build(named(family::sierpinski, "sierpinski-23", 4), 4);
    EXPECT_EQ(named4.size(), 324u);
}

TEST(CellSet, CountsMatchGeometricSubdivision) {
    const std::vector<std::pair<family, std::vector<int>>> cases{
        {family::sierpinski, {2, 3, 3, 2, 2, 2, 3, 2}},
        {family::chessboard, {2, 1, 1, 2, 1}},
        {family::chessboard, {1, 2, 1, 1, 1}},
        {family::sierpinski, {4, 2, 2, 3}},
    };
    for (const auto& [f, qs] : cases) {
        auto cs = CellSet(spec(f, qs, static_cast<std::int64_t>(qs.size())));
        std::int64_t prod = 1;
        for (std::size_t j = 0; j < qs.size(); ++j) {
            cs = cs.refine();
            prod *= child_count(f, qs[j]);
            ASSERT_EQ(static_cast<std::int64_t>(cs.size()), prod);
            std::vector<int> prefix(qs.begin(), qs.begin() + static_cast<std::ptrdiff_t>(j + 1));
            if (prod < 60000) {
                auto polys = oracle::fractal_level(f == family::sierpinski, prefix);
                ASSERT_EQ(polys.size(), cs.size());
            }
        }
        for (std::size_t i = 0; i < std::min<std::size_t>(cs.size(), 50); ++i)
            EXPECT_EQ(cs.address(i).size(), qs.size());
    }
}

TEST(CellSet, GeometryOfCornerCells) {
    auto t0 = CellSet(spec(family::sierpinski, {2}, 3));
    auto g0 = t0.geometry(0);
    EXPECT_EQ(g0[0], (std::array<double, 2>{0, 0}));
    EXPECT_DOUBLE_EQ(g0[1][0], 1.0);
    auto t1 = t0.refine();
    auto g1 = t1.geometry(0);
    EXPECT_EQ(g1[0], (std::array<double, 2>{0, 0}));
    EXPECT_DOUBLE_EQ(g1[1][0], 0.5);
    EXPECT_DOUBLE_EQ(t1.cell_diameter(), 0.5);
    auto c1 = CellSet::build(spec(family::chessboard, {1}, 1), 1);
    auto gc = c1.geometry(0);
    EXPECT_DOUBLE_EQ(gc[2][0], 1.0 / 3);
    EXPECT_DOUBLE_EQ(gc[2][1], 1.0 / 3);
    EXPECT_DOUBLE_EQ(c1.cell_diameter(), std::sqrt(2.0) / 3);
}

TEST(CellSet, CornerCellKeptAtEveryLevel) {
    for (auto f : {family::sierpinski, family::chessboard}) {
        auto cs = CellSet(named(f, f == family::sierpinski ? "sierpinski-23" : "vicsek-12", 7));
        for (int j = 0; j < 7; ++j) {
            cs = cs.refine();
            EXPECT_EQ(cs.cells()[0], LatticeCell{});
            auto a = cs.address(0);
            EXPECT_TRUE(std::all_of(a.begin(), a.end(), [](int c) { return c == 0; }));
        }
    }
}

TEST(CellSet, ConstantScheduleConsistency) {
    auto a = CellSet::build(spec(family::sierpinski, {3}, 4), 4);
    auto b = CellSet::build(spec(family::sierpinski, {3, 3, 3, 3}, 4), 4);
    EXPECT_EQ(a.cells(), b.cells());
}

TEST(CellSet, GeometryMatchesSubdivisionPolygons) {
    auto cs = CellSet::build(spec(family::sierpinski, {2, 3, 2}, 3), 3);
    auto polys = oracle::fractal_level(true, {2, 3, 2});
    std::vector<std::array<double, 2>> ours, theirs;
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (auto& p : cs.geometry(i)) ours.push_back({std::round(p[0] * 1e9), std::round(p[1] * 1e9)});
    for (auto& p : polys)
        for (auto& v : p.v) theirs.push_back({std::round(v[0] * 1e9), std::round(v[1] * 1e9)});
    std::sort(ours.begin(), ours.end());
    std::sort(theirs.begin(), theirs.end());
    EXPECT_EQ(ours, theirs);
}

TEST(CellSet, SamplePointsDeterministic) {
    auto cs = CellSet::build(spec(family::sierpinski, {2, 3}, 2), 2);
    auto one = cs.sample_points(1, 7);
    EXPECT_EQ(one.size(), 36u);
    EXPECT_EQ(one[0], 0.0);
    EXPECT_EQ(cs.sample_points(4, 99), cs.sample_points(4, 99));
    EXPECT_NE(cs.sample_points(4, 99), cs.sample_points(4, 100));
    auto pts = cs.sample_points(5, 3);
    const double h = std::sqrt(3.0) / 2;
    for (std::size_t i = 0; i < pts.size(); i += 2) {
        EXPECT_GE(pts[i + 1], -1e-15);
        EXPECT_LE(pts[i + 1], h * (1 - pts[i] / 1.0) * 2 + 1e-12);
    }
    EXPECT_THROW(cs.sample_points(0, 1), input_error);
}

TEST(CellSet, CsvHasOneRowPerCell) {
    auto cs = CellSet::build(spec(family::chessboard, {1}, 1), 1);
    std::ostringstream os;
    cs.write_csv(os);
    auto text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
    EXPECT_EQ(text.rfind("address,level,x0,y0", 0), 0u);
}

TEST(ScaleLadder, PrefixLogsAndDescendants) {
    ScaleLadder L(spec(family::sierpinski, {2, 3}, 2));
    EXPECT_NEAR(L.logQ(2), std::log(6.0), 1e-15);
    EXPECT_NEAR(L.logA(2), std::log(18.0), 1e-15);
    EXPECT_NEAR(L.log_descendants(0, 2), std::log(18.0), 1e-15);
    EXPECT_EQ(L.log_descendants(1, 0), 0.0);
    EXPECT_THROW(L.log_descendants(1, 5), input_error);
    ScaleLadder big(named(family::sierpinski, "sierpinski-23", 100000));
    EXPECT_EQ(big.depth(), 100000);
    double direct = 0;
    for (std::int64_t j = 1; j <= 1000; ++j) direct += std::log(static_cast<double>(big.s(j)));
    EXPECT_NEAR(big.logQ(1000), direct, 1e-9);
    EXPECT_EQ(big.nearest_level(big.logQ(500) + 0.01), 500);
}

TEST(CellsInBall, MatchesBruteForce) {
    for (auto f : {family::sierpinski, family::chessboard}) {
        std::vector<int> qs = f == family::sierpinski ? std::vector<int>{2, 3, 2, 2, 3} : std::vector<int>{1, 2, 1, 1};
        auto sp = spec(f, qs, static_cast<std::int64_t>(qs.size()));
        ScaleLadder L(sp);
        auto polys = oracle::fractal_level(f == family::sierpinski, qs);
        for (double r : {0.013, 0.05, 0.11, 0.3, 0.71, 2.0}) {
            auto got = cells_in_ball(L, L.depth(), std::log(r));
            std::size_t want = 0;
            for (auto& p : polys) want += oracle::origin_distance(p) < r;
            EXPECT_EQ(got.size(), want) << to_string(f) << " r=" << r;
        }
        EXPECT_THROW(cells_in_ball(L, L.depth() + 1, 0.0), range_error);
        EXPECT_THROW(cells_in_ball(L, L.depth(), 1.0, false, 5), budget_error);
    }
}

TEST(CellsInBall, DeepLevelsNearOrigin) {
    ScaleLadder L(named(family::sierpinski, "sierpinski-23", 40));
    // ball of radius 1/Q_30 at level 34 holds the corner-descendant count plus neighbours
    auto cells = cells_in_ball(L, 34, -L.logQ(30));
    const double corner = std::exp(L.log_descendants(30, 4));
    EXPECT_GE(static_cast<double>(cells.size()), std::round(corner));
    EXPECT_LE(static_cast<double>(cells.size()), 9 * std::round(corner));
}

TEST(Counterexample, LogRadiusFormula) {
    EXPECT_EQ(counterexample_log_radius(1, 1), -16.0);
    for (int k = 1; k <= 8; ++k)
        for (int n = 1; n <= 8; ++n) {
            const long m = n + k;
            const long e = m * (m + 1) / 2 + k;
            EXPECT_EQ(counterexample_log_radius_int(k, n), -e * e);
        }
    EXPECT_THROW(counterexample_log_radius(0, 1), input_error);
}

TEST(Counterexample, RadiiDistinctAndOrdered) {
    auto F = counterexample_points(6, 6);
    std::vector<double> shells;
    for (auto& e : F.entries()) shells.push_back(e.log_radius);
    EXPECT_TRUE(std::is_sorted(shells.rbegin(), shells.rend()));
    shells.erase(std::unique(shells.begin(), shells.end()), shells.end());
    EXPECT_EQ(shells.size(), 36u);
    std::size_t pts = 0;
    for (int k = 1; k <= 6; ++k) pts += static_cast<std::size_t>(k * k * 6);
    EXPECT_EQ(F.size(), pts);
}

TEST(Counterexample, CapConstraints) {
    double prev_h = 10;
    for (int k = 1; k <= 12; ++k) {
        auto S = make_cap(k);
        ASSERT_EQ(S.size(), static_cast<std::size_t>(k * k));
        const double k3 = 1.0 / (double(k) * k * k);
        double diam = 0;
        for (std::size_t a = 0; a < S.size(); ++a) {
            EXPECT_NEAR(std::hypot(S[a][0], S[a][1], S[a][2]), 1.0, 1e-14);
            for (std::size_t b = a + 1; b < S.size(); ++b) {
                const double d = std::hypot(S[a][0] - S[b][0], S[a][1] - S[b][1], S[a][2] - S[b][2]);
                EXPECT_GE(d, k3);
                diam = std::max(diam, d);
            }
        }
        EXPECT_LE(diam, std::sqrt(2.0) / (double(k) * k));
        auto rep = verify_cap(k);
        EXPECT_TRUE(rep.ok) << "k=" << k << " gap=" << rep.gap_to_next;
        EXPECT_LT(rep.hausdorff_to_limit, prev_h);
        prev_h = rep.hausdorff_to_limit;
    }
}

TEST(Counterexample, CsvRows) {
    auto F = counterexample_points(2, 1);
    std::ostringstream os;
    F.write_csv(os);
    auto t = os.str();
    EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 6);
    EXPECT_NE(t.find("1,1,-16,"), std::string::npos);
}

TEST(CellsNearPoint, MatchesBruteForceAroundVertices) {
    for (auto f : {family::sierpinski, family::chessboard}) {
        std::vector<int> qs = f == family::sierpinski ? std::vector<int>{2, 3, 2, 2} : std::vector<int>{1, 2, 1};
        auto sp = spec(f, qs, static_cast<std::int64_t>(qs.size()));
        ScaleLadder L(sp);
        auto polys = oracle::fractal_level(f == family::sierpinski, qs);
        auto lvl1 = CellSet::build(sp, 1);
        for (std::size_t c = 0; c < lvl1.size(); ++c) {
            const auto cell = lvl1.cells()[c];
            auto P = lattice_to_plane(f, static_cast<double>(cell.A), static_cast<double>(cell.B));
            const double inv = 1.0 / lvl1.Q();
            for (double r : {0.07, 0.2, 0.45}) {
                auto got = cells_near_point(L, L.depth(), 1, cell.A, cell.B, std::log(r));
                std::size_t want = 0;
                for (auto p : polys) {
                    for (auto& v : p.v) v[0] -= P[0] * inv, v[1] -= P[1] * inv;
                    want += oracle::origin_distance(p) < r;
                }
                EXPECT_EQ(got.size(), want) << to_string(f) << " cell " << c << " r=" << r;
            }
        }
        EXPECT_EQ(cells_near_point(L, 3, 0, 0, 0, std::log(0.3)).size(), cells_in_ball(L, 3, std::log(0.3)).size());
    }
}
