#include <gtest/gtest.h>

#include <random>

#include "tandim/quasicocycle.hpp"

using namespace tandim;

namespace {

const double kLog2 = std::log(2.0);

GFunction sierpinski_table(std::int64_t depth, std::int64_t nt, std::int64_t m_max) {
    FractalSpec s{family::sierpinski, Schedule::named("sierpinski-23"), depth};
    return g_combinatorial(s, GGrid::tangential(nt, m_max));
}

// Table value plus deterministic per-cell noise in [-eps, eps].
GFunction noisy(const GGrid& grid, double eps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-eps, eps);
    GFunction g(grid, "synthetic");
    for (std::size_t r = 0; r < grid.rows.size(); ++r)
        for (std::int64_t m = 0; m <= grid.m_max; ++m) {
            const double v = 1.3 * grid.h(m) + u(rng);
            g.set(r, m, v, v, v);
        }
    return g;
}

}  // namespace

TEST(Coboundary, CocycleAndSquare) {
    auto grid = GGrid::tangential(30, 10);
    auto f = [](double x) { return std::sin(x) + 0.3 * x; };
    auto cocycle = GFunction::from_function(grid, [&](double t, double h) { return f(t + h) - f(t); });
    auto square = GFunction::from_function(grid, [](double, double h) { return h * h; });
    for (std::int64_t i = 0; i < 15; ++i)
        for (std::int64_t h = 1; h <= 5; ++h)
            for (std::int64_t k = 1; k <= 5; ++k) {
                EXPECT_NEAR(coboundary(cocycle, i, h, k), 0.0, 1e-12);
                EXPECT_NEAR(coboundary(square, i, h, k), 2 * (h * kLog2) * (k * kLog2), 1e-12);
            }
    EXPECT_NEAR(coboundary(square, 2 * kLog2, kLog2, 3 * kLog2), 6 * kLog2 * kLog2, 1e-12);
    EXPECT_THROW(coboundary(square, 0.1, kLog2, kLog2), input_error);
}

TEST(CoboundaryBound, Examples) {
    auto g = sierpinski_table(400, 300, 24);
    auto rep = coboundary_bound(g, default_t0(g));
    EXPECT_LT(rep.S, 1e-9);
    EXPECT_GT(rep.triples, 0u);
    EXPECT_NEAR(std::abs(coboundary(g, rep.worst_t, rep.worst_h, rep.worst_k)), rep.S, 0.0);

    const double eps = 0.05;
    auto n = noisy(GGrid::tangential(40, 12), eps, 5);
    auto nr = coboundary_bound(n, -1);
    EXPECT_LE(nr.S, 3 * eps);
    EXPECT_GT(nr.S, 0.0);

    auto square = GFunction::from_function(GGrid::tangential(20, 10), [](double, double h) { return h * h; });
    auto sr = coboundary_bound(square, -1, 5);
    EXPECT_NEAR(sr.S, 2 * (5 * kLog2) * (5 * kLog2), 1e-9);
    EXPECT_THROW(coboundary_bound(square, 1000), input_error);
}

TEST(Quasicocycle, SplitsOnCombinatorialAndSynthetic) {
    FractalSpec v{family::chessboard, Schedule::named("vicsek-12"), 400};
    auto g = g_combinatorial(v, GGrid::tangential(300, 24, std::log(3.0)));
    auto rep = coboundary_bound(g, -1);
    auto sweep = quasicocycle_sweep(g, rep.S, -1);
    EXPECT_GT(sweep.checked, 1000u);
    EXPECT_EQ(sweep.failures, 0u);

    auto n = noisy(GGrid::tangential(60, 16), 0.1, 9);
    auto nrep = coboundary_bound(n, -1);
    auto nsweep = quasicocycle_sweep(n, nrep.S, -1);
    EXPECT_EQ(nsweep.failures, 0u);

    auto cocycle = GFunction::from_function(GGrid::tangential(10, 8), [](double t, double h) { return (t + h) * (t + h) - t * t; });
    EXPECT_TRUE(check_quasicocycle(cocycle, 2, {1, 2, 3}, 0.0).pass);

    // a table with a bump in one entry breaks the bound for S = 0
    auto bad = cocycle;
    bad.set(3, 2, cocycle(3, 2) + 1.0, 0, 0);
    auto c = check_quasicocycle(bad, 1, {2, 2, 1}, 0.0);
    EXPECT_FALSE(c.pass);
    EXPECT_LT(c.slack, 0);
}

TEST(LimitRatios, LinearCase) {
    const double alpha = 1.7;
    auto g = GFunction::from_function(GGrid::tangential(50, 20), [&](double t, double h) { return alpha * (t + h) - alpha * t; });
    auto l = limit_ratios(g);
    for (auto e : {l.delta_lower, l.d_lower, l.d_upper, l.delta_upper}) {
        EXPECT_NEAR(e.value, alpha, 1e-12);
        EXPECT_NEAR(e.width(), 0, 1e-12);
    }
    EXPECT_THROW(limit_ratios(g, 100, 5), input_error);
}

TEST(LimitRatios, SierpinskiOrdering) {
    auto g = sierpinski_table(10000, 12000, 64);
    auto l = limit_ratios(g);
    EXPECT_NEAR(l.delta_lower.value, std::log(3.0) / std::log(2.0), 0.02);
    EXPECT_NEAR(l.delta_upper.value, std::log(6.0) / std::log(3.0), 0.02);
    EXPECT_LE(l.delta_lower.lo, l.d_lower.hi);
    EXPECT_LE(l.d_upper.lo, l.delta_upper.hi);
    EXPECT_NEAR(sup_V(g, l.window_t, l.window_h, l.t0), l.delta_upper.value, 1e-12);
}

TEST(UniformWitness, Cases) {
    auto g = sierpinski_table(2000, 1500, 16);
    EXPECT_EQ(uniform_witness(g, 0.0, 16, 5), 6);
    EXPECT_FALSE(uniform_witness(g, 2.0, 16, 0));
    auto w = uniform_witness(g, 1.60, 16, 0);
    ASSERT_TRUE(w);
    // inside a 3-run every slope is log 6 / log 3
    for (std::int64_t j = 1; j <= 16; ++j) EXPECT_GT(g(*w, j) / (j * kLog2), 1.60);
    EXPECT_FALSE(uniform_witness(g, 1.60, 16, *w - 1) != w);
}

TEST(ExtremalSequence, CocycleAndSierpinski) {
    auto lin = GFunction::from_function(GGrid::tangential(80, 20), [](double, double h) { return 1.2 * h; });
    auto e = extremal_sequence(lin, 0.0, -1);
    EXPECT_TRUE(e.certified);
    EXPECT_LE(e.gap, 1e-12);

    auto g = sierpinski_table(10000, 12000, 64);
    auto rep = coboundary_bound(g, default_t0(g), 16);
    auto s = extremal_sequence(g, rep.S, rep.t0);
    ASSERT_GE(s.t_index.size(), 32u);
    EXPECT_TRUE(std::is_sorted(s.t_index.begin(), s.t_index.end()));
    EXPECT_TRUE(s.certified) << s.gap << " vs " << 2 * s.S / s.kappa + s.slack;
    EXPECT_NEAR(s.seq_liminf, std::log(6.0) / std::log(3.0), 0.02);
}

TEST(QuasiIneq, HoldsOnShippedShapes) {
    auto g = sierpinski_table(3000, 2500, 48);
    auto rep = coboundary_bound(g, default_t0(g), 12);
    auto q = check_quasi_ineq(g, rep.S, rep.t0);
    EXPECT_TRUE(q.applicable);
    EXPECT_EQ(q.violations, 0u);
    auto n = noisy(GGrid::tangential(60, 16), 0.1, 3);
    auto nq = check_quasi_ineq(n, coboundary_bound(n, -1).S, -1);
    EXPECT_EQ(nq.violations, 0u);
    auto local = g_combinatorial(FractalSpec{family::sierpinski, Schedule::constant(2), 100},
                                 GGrid::local(4, 10, 20));
    EXPECT_FALSE(check_quasi_ineq(local, 0, -1).applicable);
}
