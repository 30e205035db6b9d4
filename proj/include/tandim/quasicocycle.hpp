#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandim/errors.hpp"
#include "tandim/gfunction.hpp"

namespace tandim {

/// dg(t,h,k) = g(t,h+k) - g(t+h,k) - g(t,h) at grid indices.
inline double coboundary(const GFunction& g, std::int64_t i, std::int64_t h, std::int64_t k) {
    return g(i, h + k) - g(i + h, k) - g(i, h);
}

/// Real-argument form; every argument must lie on the grid.
inline double coboundary(const GFunction& g, double t, double h, double k) {
    return coboundary(g, g.index_of(t, false), g.index_of(h, true), g.index_of(k, true));
}

struct CoboundaryReport {
    double S = 0;
    std::int64_t t0 = 0;  // burn-in t-index; triples use t-index > t0
    std::uint64_t triples = 0;
    std::int64_t worst_t = 0, worst_h = 0, worst_k = 0;
};

/// Burn-in: first t-index whose g(t,kappa) is at most twice the median of
/// g(.,kappa) over the last half of the rows.
inline std::int64_t default_t0(const GFunction& g) {
    std::vector<double> col;
    std::vector<std::int64_t> idx;
    for (auto i : g.grid().rows)
        if (g.has(i, 1)) {
            col.push_back(g(i, 1));
            idx.push_back(i);
        }
    require(!col.empty(), "table has no g(t, kappa) entries");
    std::vector<double> tail(col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2), col.end());
    std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
    const double med = tail[tail.size() / 2];
    for (std::size_t r = 0; r < col.size(); ++r)
        if (col[r] <= 2 * med + 1e-12) return idx[r];
    return idx.back();
}

/// S = max |dg| over sampled triples with t-index > t0, h, k >= 1, and
/// h, k <= hk_cap when hk_cap > 0.
inline CoboundaryReport coboundary_bound(const GFunction& g, std::int64_t t0, std::int64_t hk_cap = 0) {
    CoboundaryReport rep;
    rep.t0 = t0;
    const std::int64_t M = g.m_max();
    const std::int64_t cap = hk_cap > 0 ? std::min(hk_cap, M) : M;
    double worst = -1;
    const auto& rows = g.grid().rows;
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        const auto i = rows[ri];
        if (i <= t0) continue;
        for (std::int64_t h = 1; h <= cap; ++h) {
            const double gh = g.at_row(ri, h);
            const std::size_t rh = g.row_of(i + h);
            if (std::isnan(gh) || rh == GFunction::npos) continue;
            for (std::int64_t k = 1; k <= cap && h + k <= M; ++k) {
                const double a = g.at_row(ri, h + k), b = g.at_row(rh, k);
                if (std::isnan(a) || std::isnan(b)) continue;
                const double d = std::abs(a - b - gh);
                ++rep.triples;
                if (d > worst) {
                    worst = d;
                    rep.worst_t = i, rep.worst_h = h, rep.worst_k = k;
                }
            }
        }
    }
    if (rep.triples == 0) throw input_error("no admissible (t,h,k) triple with t-index > " + std::to_string(t0));
    rep.S = worst;
    return rep;
}

struct QuasicocycleCheck {
    bool pass = false;
    double lhs = 0;    // |g(t, sum h) - sum g(t + partial, h_k)|
    double bound = 0;  // (n-1) S
    double slack = 0;  // bound - lhs
};

/// Telescoped inequality for one split of sum(h_list) starting at t-index i.
inline QuasicocycleCheck check_quasicocycle(const GFunction& g, std::int64_t i, const std::vector<std::int64_t>& h_list,
                                            double S, double tol = 1e-9) {
    require(!h_list.empty(), "split must have at least one part");
    std::int64_t total = 0;
    double sum = 0;
    for (auto h : h_list) {
        require(h >= 1, "split parts must be positive grid multiples");
        sum += g(i + total, h);
        total += h;
    }
    QuasicocycleCheck c;
    c.lhs = std::abs(g(i, total) - sum);
    c.bound = static_cast<double>(h_list.size() - 1) * S;
    c.slack = c.bound - c.lhs;
    c.pass = c.lhs <= c.bound + tol;
    return c;
}

struct QuasicocycleSweep {
    std::uint64_t checked = 0;
    std::uint64_t failures = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    std::int64_t worst_t = 0;
    std::vector<std::int64_t> worst_split;
};

/// Checks splits of length 2..max_len: every composition of totals up to
/// `exhaustive_total`, plus `random_per_len` seeded compositions per length
/// and row. Rows are the t-indices > t0, thinned to at most `max_rows`.
inline QuasicocycleSweep quasicocycle_sweep(const GFunction& g, double S, std::int64_t t0, int max_len = 6,
                                            std::int64_t exhaustive_total = 8, int random_per_len = 16,
                                            std::size_t max_rows = 64, std::uint64_t seed = 1) {
    QuasicocycleSweep out;
    std::vector<std::int64_t> rows;
    for (auto i : g.grid().rows)
        if (i > t0) rows.push_back(i);
    if (rows.size() > max_rows) {
        std::vector<std::int64_t> thin;
        for (std::size_t k = 0; k < max_rows; ++k) thin.push_back(rows[k * rows.size() / max_rows]);
        rows.swap(thin);
    }
    std::mt19937_64 rng(seed);
    auto sampled = [&](std::int64_t i, const std::vector<std::int64_t>& split) {
        std::int64_t tot = 0;
        for (auto h : split) {
            if (!g.has(i + tot, h)) return false;
            tot += h;
        }
        return g.has(i, tot);
    };
    auto run = [&](std::int64_t i, const std::vector<std::int64_t>& split) {
        if (!sampled(i, split)) return;
        auto c = check_quasicocycle(g, i, split, S);
        ++out.checked;
        if (!c.pass) ++out.failures;
        if (c.slack < out.min_slack) {
            out.min_slack = c.slack;
            out.worst_t = i;
            out.worst_split = split;
        }
    };
    for (auto i : rows) {
        // all compositions with small totals
        std::vector<std::int64_t> split;
        auto rec = [&](auto&& self, std::int64_t remaining) -> void {
            if (remaining == 0) {
                if (split.size() >= 2) run(i, split);
                return;
            }
            if (static_cast<int>(split.size()) == max_len) return;
            for (std::int64_t h = 1; h <= remaining; ++h) {
                split.push_back(h);
                self(self, remaining - h);
                split.pop_back();
            }
        };
        for (std::int64_t tot = 2; tot <= std::min(exhaustive_total, g.m_max()); ++tot) rec(rec, tot);
        for (int len = 2; len <= max_len; ++len) {
            if (g.m_max() < len) break;
            for (int r = 0; r < random_per_len; ++r) {
                std::uniform_int_distribution<std::int64_t> tot_d(len, g.m_max());
                const std::int64_t tot = tot_d(rng);
                // random composition via sorted cut points
                std::vector<std::int64_t> cuts;
                std::uniform_int_distribution<std::int64_t> cut_d(1, tot - 1);
                while (static_cast<int>(cuts.size()) < len - 1) {
                    const auto c = cut_d(rng);
                    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
                }
                std::sort(cuts.begin(), cuts.end());
                std::vector<std::int64_t> parts;
                std::int64_t prev = 0;
                for (auto c : cuts) parts.push_back(c - prev), prev = c;
                parts.push_back(tot - prev);
                run(i, parts);
            }
        }
    }
    return out;
}

/// A finite-window estimate with its window-sensitivity bracket.
struct WindowedEstimate {
    double value = 0;
    double lo = 0;
    double hi = 0;
    double width() const noexcept { return hi - lo; }
};

struct LimitRatios {
    WindowedEstimate delta_lower;  // liminf_h liminf_t g/h
    WindowedEstimate d_lower;      // lim_t liminf_h g/h
    WindowedEstimate d_upper;      // lim_t limsup_h g/h
    WindowedEstimate delta_upper;  // limsup_h limsup_t g/h
    std::int64_t window_t = 0;
    std::int64_t window_h = 0;
    std::int64_t t0 = 0;
};

namespace detail {

/// Rows with index > t0 that have a sampled entry at m = 1.
inline std::vector<std::size_t> live_rows(const GFunction& g, std::int64_t t0) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < g.nrows(); ++r)
        if (g.grid().rows[r] > t0 && g.row_extent(r) >= 1) out.push_back(r);
    return out;
}

struct RawRatios {
    double dl, dL, dU, dU_spread, dL_spread, du;
};

// Iterated extremes of p = g/h with tail windows of wt rows and wh columns.
inline RawRatios raw_ratios(const GFunction& g, const std::vector<std::size_t>& rows, std::int64_t wt, std::int64_t wh) {
    const auto& grid = g.grid();
    const std::int64_t M = g.m_max();
    auto p = [&](std::size_t r, std::int64_t m) { return g(grid.rows[r], m) / grid.h(m); };
    const std::size_t nr = rows.size();
    const std::size_t r_begin = nr - static_cast<std::size_t>(std::min<std::int64_t>(wt, static_cast<std::int64_t>(nr)));

    // outer over h, inner over t: for each column the tail rows where it is sampled
    double du = -std::numeric_limits<double>::infinity(), dl = std::numeric_limits<double>::infinity();
    for (std::int64_t m = std::max<std::int64_t>(1, M - wh + 1); m <= M; ++m) {
        std::vector<std::size_t> col;
        for (std::size_t k = 0; k < nr; ++k)
            if (g.has(grid.rows[rows[k]], m)) col.push_back(rows[k]);
        if (col.empty()) continue;
        const std::size_t b = col.size() - std::min<std::size_t>(static_cast<std::size_t>(wt), col.size());
        double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
        for (std::size_t k = b; k < col.size(); ++k) {
            const double v = p(col[k], m);
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        du = std::max(du, mx);
        dl = std::min(dl, mn);
    }

    // outer over t, inner over h: each tail row's own last wh sampled columns
    double Umin = std::numeric_limits<double>::infinity(), Umax = -Umin, Lmin = Umin, Lmax = -Umin;
    for (std::size_t k = r_begin; k < nr; ++k) {
        const std::size_t r = rows[k];
        const std::int64_t ext = g.row_extent(r);
        if (ext < 1) continue;
        double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
        for (std::int64_t m = std::max<std::int64_t>(1, ext - wh + 1); m <= ext; ++m) {
            const double v = p(r, m);
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        Umin = std::min(Umin, mx), Umax = std::max(Umax, mx);
        Lmin = std::min(Lmin, mn), Lmax = std::max(Lmax, mn);
    }
    return {dl, 0.5 * (Lmin + Lmax), 0.5 * (Umin + Umax), Umax - Umin, Lmax - Lmin, du};
}

inline WindowedEstimate bracket_of(double full, double half, double spread = 0) {
    WindowedEstimate e;
    e.value = full;
    e.lo = std::min(full, half) - 0.5 * spread;
    e.hi = std::max(full, half) + 0.5 * spread;
    return e;
}

}  // namespace detail

/// Finite-window estimates of the four iterated limits of g/h.
/// Windows default to half of the live rows and half of the columns; the
/// bracket spans the estimates at the full and halved windows (plus, for
/// the t-limits, the spread over the t window).
inline LimitRatios limit_ratios(const GFunction& g, std::int64_t window_t = 0, std::int64_t window_h = 0,
                                std::optional<std::int64_t> t0 = std::nullopt) {
    LimitRatios out;
    out.t0 = t0 ? *t0 : g.grid().rows.front() - 1;
    auto rows = detail::live_rows(g, out.t0);
    const auto nr = static_cast<std::int64_t>(rows.size());
    const std::int64_t wt = window_t > 0 ? window_t : nr / 2;
    const std::int64_t wh = window_h > 0 ? window_h : g.m_max() / 2;
    if (nr < 2 || wt < 2 || wh < 2 || wt > nr || wh > g.m_max())
        throw input_error("grid too small for the requested windows: need >= " + std::to_string(std::max<std::int64_t>(wt, 2)) +
                          " live rows (have " + std::to_string(nr) + ") and >= " +
                          std::to_string(std::max<std::int64_t>(wh, 2)) + " h columns (have " +
                          std::to_string(g.m_max()) + ")");
    out.window_t = wt;
    out.window_h = wh;
    auto full = detail::raw_ratios(g, rows, wt, wh);
    auto half = detail::raw_ratios(g, rows, std::max<std::int64_t>(1, wt / 2), std::max<std::int64_t>(1, wh / 2));
    out.delta_lower = detail::bracket_of(full.dl, half.dl);
    out.delta_upper = detail::bracket_of(full.du, half.du);
    out.d_lower = detail::bracket_of(full.dL, half.dL, full.dL_spread);
    out.d_upper = detail::bracket_of(full.dU, half.dU, full.dU_spread);
    return out;
}

/// Smallest sampled t-index > t0 with g(t,j)/(j kappa) > d for every
/// j = 1..m_cap, or none.
inline std::optional<std::int64_t> uniform_witness(const GFunction& g, double d, std::int64_t m_cap, std::int64_t t0) {
    require(m_cap >= 1 && m_cap <= g.m_max(), "h bound must be a grid multiple within the table");
    const auto& grid = g.grid();
    for (std::size_t r = 0; r < g.nrows(); ++r) {
        const auto i = grid.rows[r];
        if (i <= t0 || g.row_extent(r) < m_cap) continue;
        bool ok = true;
        for (std::int64_t j = 1; j <= m_cap && ok; ++j) ok = g(i, j) / grid.h(j) > d;
        if (ok) return i;
    }
    return std::nullopt;
}

/// sup V at the sampled level: the largest d for which some tail column h
/// has a tail row with p(t,h) > d (the threshold sets read literally).
inline double sup_V(const GFunction& g, std::int64_t window_t, std::int64_t window_h, std::int64_t t0) {
    auto rows = detail::live_rows(g, t0);
    const auto& grid = g.grid();
    std::vector<double> ps;
    const std::int64_t M = g.m_max();
    for (std::int64_t m = std::max<std::int64_t>(1, M - window_h + 1); m <= M; ++m) {
        std::vector<double> col;
        for (auto r : rows)
            if (g.has(grid.rows[r], m)) col.push_back(g(grid.rows[r], m) / grid.h(m));
        const std::size_t b = col.size() - std::min<std::size_t>(static_cast<std::size_t>(window_t), col.size());
        ps.insert(ps.end(), col.begin() + static_cast<std::ptrdiff_t>(b), col.end());
    }
    require(!ps.empty(), "no tail entries");
    std::sort(ps.begin(), ps.end());
    // d in V iff {p > d} nonempty; the supremum is the largest sampled p
    auto in_V = [&](double d) { return std::upper_bound(ps.begin(), ps.end(), d) != ps.end(); };
    double lo = ps.front() - 1, hi = ps.back();
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (in_V(mid) ? lo : hi) = mid;
    }
    return hi;
}

/// w(n) = max over tail rows of min_{j<=n} p(t,j): the sampled sup of the
/// uniform-witness thresholds.
inline double sup_V_tilde(const GFunction& g, std::int64_t n, std::int64_t window_t, std::int64_t t0) {
    auto rows = detail::live_rows(g, t0);
    const auto& grid = g.grid();
    std::vector<std::size_t> ok;
    for (auto r : rows)
        if (g.row_extent(r) >= n) ok.push_back(r);
    require(!ok.empty(), "no row samples h up to the requested bound");
    const std::size_t b = ok.size() - std::min<std::size_t>(static_cast<std::size_t>(window_t), ok.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = b; k < ok.size(); ++k) {
        double mn = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 1; j <= n; ++j) mn = std::min(mn, g(grid.rows[ok[k]], j) / grid.h(j));
        best = std::max(best, mn);
    }
    return best;
}

struct ExtremalSequence {
    std::vector<std::int64_t> t_index;  // increasing
    double d_tilde = 0;                 // best uniform threshold w(N)
    double limsup_outer = 0;            // delta-upper estimate
    double seq_liminf = 0;              // finite liminf_h liminf_n p(t_n, h)
    double S = 0;
    double kappa = 0;
    double slack = 0;
    double gap = 0;  // limsup_outer - seq_liminf
    bool certified = false;
};

/// Diagonal extraction: t_n is the first row past t_{n-1} and past the n-th
/// slice of the tail with p(t_n, j) > w(N) - 1/n for all j <= n.
inline ExtremalSequence extremal_sequence(const GFunction& g, double S, std::int64_t t0, std::int64_t window_t = 0,
                                          std::int64_t n_max = 0) {
    auto rows = detail::live_rows(g, t0);
    require(rows.size() >= 4 && g.m_max() >= 2, "table too small for an extremal sequence");
    const auto& grid = g.grid();
    const std::int64_t N = n_max > 0 ? std::min(n_max, g.m_max()) : g.m_max();
    const std::int64_t wt = window_t > 0 ? window_t : static_cast<std::int64_t>(rows.size()) / 2;
    ExtremalSequence out;
    out.S = S;
    out.kappa = g.kappa();
    out.d_tilde = sup_V_tilde(g, N, wt, t0);
    auto lr = limit_ratios(g, wt, 0, t0);
    out.limsup_outer = lr.delta_upper.value;

    const std::size_t tail_begin = rows.size() - std::min<std::size_t>(static_cast<std::size_t>(wt), rows.size());
    const std::size_t span = rows.size() - tail_begin;
    std::int64_t prev = t0;
    for (std::int64_t n = 1; n <= N; ++n) {
        const std::size_t floor_k = tail_begin + static_cast<std::size_t>(n - 1) * span / static_cast<std::size_t>(N);
        const std::int64_t lo = std::max(prev, grid.rows[rows[floor_k]] - 1);
        const double thr = out.d_tilde - 1.0 / static_cast<double>(n);
        std::optional<std::int64_t> hit;
        for (std::size_t k = floor_k; k < rows.size() && !hit; ++k) {
            const auto i = grid.rows[rows[k]];
            if (i <= lo || g.row_extent(rows[k]) < n) continue;
            bool ok = true;
            for (std::int64_t j = 1; j <= n && ok; ++j) ok = g(i, j) / grid.h(j) > thr;
            if (ok) hit = i;
        }
        if (!hit) break;
        out.t_index.push_back(*hit);
        prev = *hit;
    }
    const auto len = static_cast<std::int64_t>(out.t_index.size());
    if (len < 2) {
        out.certified = false;
        out.gap = std::numeric_limits<double>::infinity();
        return out;
    }
    // liminf over the sequence tail, then over the upper half of h
    double seq = std::numeric_limits<double>::infinity();
    for (std::int64_t j = std::max<std::int64_t>(1, len / 2); j <= len; ++j)
        for (std::int64_t n = std::max(j, len / 2); n <= len; ++n) {
            const auto i = out.t_index[static_cast<std::size_t>(n - 1)];
            if (g.has(i, j)) seq = std::min(seq, g(i, j) / grid.h(j));
        }
    out.seq_liminf = seq;
    out.gap = out.limsup_outer - seq;
    out.slack = 2.0 / static_cast<double>(len) + lr.delta_upper.width() + g.max_bracket_width() / g.kappa();
    out.certified = out.gap <= 2 * S / g.kappa() + out.slack + 1e-12;
    return out;
}

struct QuasiIneqCheck {
    bool applicable = false;
    std::uint64_t pairs = 0;
    std::uint64_t violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
};

/// Finite form of the lower-envelope inequality
/// gbar(s)/s >= floor(s/r)(r/s)(gbar(r)/r - S/r), gbar(h) = min over rows > t0.
/// Needs contiguous rows; other tables are reported as not applicable.
inline QuasiIneqCheck check_quasi_ineq(const GFunction& g, double S, std::int64_t t0, double tol = 1e-9) {
    QuasiIneqCheck out;
    const auto& rows = g.grid().rows;
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k] != rows[k - 1] + 1) return out;
    out.applicable = true;
    const std::int64_t M = g.m_max();
    std::vector<double> gbar(static_cast<std::size_t>(M + 1), std::numeric_limits<double>::infinity());
    for (auto i : rows)
        if (i > t0)
            for (std::int64_t m = 1; m <= M; ++m)
                if (g.has(i, m)) gbar[static_cast<std::size_t>(m)] = std::min(gbar[static_cast<std::size_t>(m)], g(i, m));
    const double kap = g.kappa();
    for (std::int64_t r = 1; r <= M; ++r) {
        if (!std::isfinite(gbar[static_cast<std::size_t>(r)])) continue;
        for (std::int64_t s = r; s <= M; ++s) {
            if (!std::isfinite(gbar[static_cast<std::size_t>(s)])) continue;
            const double R = r * kap, Sx = s * kap;
            const double lhs = gbar[static_cast<std::size_t>(s)] / Sx;
            const double rhs = static_cast<double>(s / r) * (R / Sx) * (gbar[static_cast<std::size_t>(r)] / R - S / R);
            ++out.pairs;
            out.min_margin = std::min(out.min_margin, lhs - rhs);
            if (lhs < rhs - tol) ++out.violations;
        }
    }
    return out;
}

inline nlohmann::json to_json(const CoboundaryReport& r) {
    return {{"S", r.S}, {"t0_index", r.t0}, {"triples", r.triples},
            {"worst", {{"t_index", r.worst_t}, {"h_index", r.worst_h}, {"k_index", r.worst_k}}}};
}

inline nlohmann::json to_json(const WindowedEstimate& e) { return {{"value", e.value}, {"lo", e.lo}, {"hi", e.hi}}; }

inline nlohmann::json to_json(const LimitRatios& l) {
    return {{"delta_lower", to_json(l.delta_lower)}, {"d_lower", to_json(l.d_lower)}, {"d_upper", to_json(l.d_upper)},
            {"delta_upper", to_json(l.delta_upper)}, {"window_t", l.window_t}, {"window_h", l.window_h}, {"t0_index", l.t0}};
}

inline nlohmann::json to_json(const ExtremalSequence& e) {
    return {{"t_index", e.t_index}, {"d_tilde", e.d_tilde}, {"limsup_outer", e.limsup_outer},
            {"seq_liminf", e.seq_liminf}, {"S", e.S}, {"kappa", e.kappa}, {"slack", e.slack},
            {"gap", e.gap}, {"bound", 2 * e.S / e.kappa + e.slack}, {"certified", e.certified}};
}

inline nlohmann::json to_json(const QuasicocycleSweep& s) {
    return {{"checked", s.checked}, {"failures", s.failures}, {"min_slack", s.min_slack},
            {"worst_t_index", s.worst_t}, {"worst_split", s.worst_split}};
}

}  // namespace tandim
