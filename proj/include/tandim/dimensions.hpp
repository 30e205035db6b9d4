#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tandim/cells.hpp"
#include "tandim/counting.hpp"
#include "tandim/errors.hpp"
#include "tandim/gfunction.hpp"
#include "tandim/quasicocycle.hpp"
#include "tandim/schedule.hpp"

namespace tandim {

struct ClosedFormDims {
    double delta_lower = 0, d_lower = 0, d_upper = 0, delta_upper = 0;
    std::string method;  // run-growth | eventually-constant | finite-window
    std::map<int, std::int64_t> growth;  // q -> run-length increment per cycle
};

namespace detail {

struct Run {
    int q;
    std::int64_t len;
};

inline std::vector<Run> run_lengths(const std::vector<int>& qs) {
    std::vector<Run> runs;
    for (int q : qs) {
        if (!runs.empty() && runs.back().q == q)
            ++runs.back().len;
        else
            runs.push_back({q, 1});
    }
    return runs;
}

}  // namespace detail

/// The four dimensions of a schedule from its run structure.
///
/// When the runs of each value grow affinely (length alpha_q * k + beta_q in
/// cycle k), the densities of the values are proportional to alpha_q and
/// d = sum alpha_q log a_q / sum alpha_q log s_q, while the tangential pair
/// is the extreme single-value ratio log a_q / log s_q over growing values.
inline ClosedFormDims closed_form_dims(const Schedule& schedule, family fam, std::int64_t depth) {
    require(depth >= 1, "depth must be >= 1");
    FractalSpec{fam, schedule, depth}.validate();
    auto ratio = [&](int q) {
        return std::log(static_cast<double>(child_count(fam, q))) / std::log(static_cast<double>(side_factor(fam, q)));
    };
    ClosedFormDims out;
    if (!schedule.is_named() && depth >= static_cast<std::int64_t>(schedule.values().size())) {
        const double r = ratio(schedule.values().back());
        out = {r, r, r, r, "eventually-constant", {}};
        return out;
    }
    const auto qs = schedule.prefix(depth);
    auto runs = detail::run_lengths(qs);
    std::map<int, std::vector<std::int64_t>> by_value;
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) by_value[runs[k].q].push_back(runs[k].len);  // last run may be cut

    bool all_grow = by_value.size() >= 2;
    for (auto& [q, lens] : by_value) {
        if (lens.size() < 3) {
            all_grow = false;
            break;
        }
        const std::size_t n = lens.size();
        const std::int64_t d1 = lens[n - 1] - lens[n - 2], d2 = lens[n - 2] - lens[n - 3];
        if (d1 != d2 || d1 <= 0) {
            all_grow = false;
            break;
        }
        out.growth[q] = d1;
    }
    if (all_grow) {
        double num = 0, den = 0;
        out.delta_lower = std::numeric_limits<double>::infinity();
        out.delta_upper = -out.delta_lower;
        for (auto [q, alpha] : out.growth) {
            num += static_cast<double>(alpha) * std::log(static_cast<double>(child_count(fam, q)));
            den += static_cast<double>(alpha) * std::log(static_cast<double>(side_factor(fam, q)));
            out.delta_lower = std::min(out.delta_lower, ratio(q));
            out.delta_upper = std::max(out.delta_upper, ratio(q));
        }
        out.d_lower = out.d_upper = num / den;
        out.method = "run-growth";
        return out;
    }
    out.growth.clear();
    ScaleLadder ladder(FractalSpec{fam, schedule, depth});
    out.d_lower = out.d_upper = ladder.logA(depth) / ladder.logQ(depth);
    out.delta_lower = std::numeric_limits<double>::infinity();
    out.delta_upper = -out.delta_lower;
    for (std::size_t j = qs.size() / 2; j < qs.size(); ++j) {
        out.delta_lower = std::min(out.delta_lower, ratio(qs[j]));
        out.delta_upper = std::max(out.delta_upper, ratio(qs[j]));
    }
    out.method = "finite-window";
    return out;
}

inline std::pair<WindowedEstimate, WindowedEstimate> tangential_dims(const GFunction& g, std::int64_t window_t = 0,
                                                                     std::int64_t window_h = 0) {
    auto l = limit_ratios(g, window_t, window_h);
    return {l.delta_lower, l.delta_upper};
}

inline std::pair<WindowedEstimate, WindowedEstimate> local_dims(const GFunction& g, std::int64_t window_t = 0,
                                                                std::int64_t window_h = 0) {
    auto l = limit_ratios(g, window_t, window_h);
    return {l.d_lower, l.d_upper};
}

struct AssumptionReport {
    double c_hat = 1;
    std::vector<double> per_scale;  // c-hat at each sampled scale, coarse to fine
    std::vector<double> scale_t;    // -log r for each sampled scale
    bool stable = false;            // the last two scales did not raise the running max
    bool partial = false;           // some count hit its budget
    std::string sample;
    // worst tuple
    double worst_t = 0, worst_lambda_log = 0, worst_mu_log = 0;
    std::string worst_y, worst_z;
};

struct AssumptionPlan {
    std::int64_t first_octave = 1;
    std::int64_t last_octave = 14;
    std::vector<std::int64_t> lambda_octaves{1, 2, 3};
    std::vector<std::int64_t> mu_octaves{1, 2, 3};
    std::size_t centers = 32;
    std::uint64_t budget = 5'000'000;
};

namespace detail {

inline void finish_assumption(AssumptionReport& rep) {
    rep.c_hat = 1;
    for (double c : rep.per_scale) rep.c_hat = std::max(rep.c_hat, c);
    const std::size_t n = rep.per_scale.size();
    if (n < 3) {
        rep.stable = false;
        return;
    }
    double earlier = 1;
    for (std::size_t k = 0; k + 2 < n; ++k) earlier = std::max(earlier, rep.per_scale[k]);
    rep.stable = std::max(rep.per_scale[n - 1], rep.per_scale[n - 2]) <= earlier + 1e-12;
}

// Evenly spaced picks from a sorted candidate list, always including index 0.
template <class T>
std::vector<T> spread_pick(const std::vector<T>& v, std::size_t k) {
    if (v.size() <= k) return v;
    std::vector<T> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(v[i * v.size() / k]);
    return out;
}

}  // namespace detail

/// Empirical constant of the homogeneity assumption on a fractal at its
/// distinguished vertex: r = 2^{-i}, lambda = 2^{-a}, mu = 2^{-b}; centers
/// are level vertices inside B(0, r); counts are level cells meeting
/// B(y, lambda r) at the level nearest lambda mu r.
inline AssumptionReport check_assumption(const FractalSpec& spec, const AssumptionPlan& plan = {}) {
    ScaleLadder L(spec);
    const double k2 = std::log(2.0);
    AssumptionReport rep;
    rep.sample = "octave scales " + std::to_string(plan.first_octave) + ".." + std::to_string(plan.last_octave) +
                 ", up to " + std::to_string(plan.centers) + " vertex centers per scale";
    const std::int64_t amax = *std::max_element(plan.lambda_octaves.begin(), plan.lambda_octaves.end());
    const std::int64_t bmax = *std::max_element(plan.mu_octaves.begin(), plan.mu_octaves.end());
    for (std::int64_t i = plan.first_octave; i <= plan.last_octave; ++i) {
        const double t = static_cast<double>(i) * k2;
        const std::int64_t deepest = L.nearest_level(t + static_cast<double>(amax + bmax) * k2);
        if (deepest >= L.depth()) break;
        const std::int64_t cl = std::min(L.depth(), L.nearest_level(t) + 1);
        std::vector<std::pair<std::int64_t, std::int64_t>> verts;
        try {
            auto cells = cells_in_ball(L, cl, -t, false, plan.budget);
            for (auto v : cell_vertex_set(spec.fam, cells)) {
                auto P = lattice_to_plane(spec.fam, static_cast<double>(v.first), static_cast<double>(v.second));
                if (std::hypot(P[0], P[1]) < std::exp(L.logQ(cl) - t) * (1 - 1e-9)) verts.push_back(v);
            }
        } catch (const budget_error&) {
            rep.partial = true;
            break;
        }
        verts = detail::spread_pick(verts, plan.centers);
        double worst = 1;
        for (auto a : plan.lambda_octaves)
            for (auto b : plan.mu_octaves) {
                const std::int64_t lvl = L.nearest_level(t + static_cast<double>(a + b) * k2);
                std::vector<std::size_t> counts;
                for (auto v : verts) {
                    try {
                        counts.push_back(cells_near_point(L, lvl, cl, v.first, v.second,
                                                          -(t + static_cast<double>(a) * k2), false, plan.budget)
                                             .size());
                    } catch (const budget_error&) {
                        rep.partial = true;
                    }
                }
                if (counts.empty()) continue;
                auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
                const double c = static_cast<double>(*mx) / static_cast<double>(std::max<std::size_t>(1, *mn));
                if (c > worst) {
                    worst = c;
                    if (c > rep.c_hat) {
                        rep.c_hat = c;
                        rep.worst_t = t;
                        rep.worst_lambda_log = -static_cast<double>(a) * k2;
                        rep.worst_mu_log = -static_cast<double>(b) * k2;
                        const auto iy = static_cast<std::size_t>(mx - counts.begin());
                        const auto iz = static_cast<std::size_t>(mn - counts.begin());
                        rep.worst_y = std::to_string(verts[iy].first) + "," + std::to_string(verts[iy].second) + "@" +
                                      std::to_string(cl);
                        rep.worst_z = std::to_string(verts[iz].first) + "," + std::to_string(verts[iz].second) + "@" +
                                      std::to_string(cl);
                    }
                }
            }
        rep.per_scale.push_back(worst);
        rep.scale_t.push_back(t);
    }
    detail::finish_assumption(rep);
    return rep;
}

/// Same check on a finite pointed space with exact covering numbers. Scales
/// are r = e^{-t} for the given t values; lambda, mu = e^{-a kappa},
/// e^{-b kappa}; centers are the points of B(x, r) nearest the base.
inline AssumptionReport check_assumption(const PointedSpace& X, const std::vector<double>& t_values,
                                         const std::vector<std::int64_t>& lambda_steps,
                                         const std::vector<std::int64_t>& mu_steps, double kappa = std::log(2.0),
                                         std::size_t centers = 32, const CountOptions& opt = {}) {
    require(!t_values.empty() && !lambda_steps.empty() && !mu_steps.empty(), "sampling plan must be nonempty");
    AssumptionReport rep;
    rep.sample = std::to_string(t_values.size()) + " scales, up to " + std::to_string(centers) + " centers each";
    for (double t : t_values) {
        auto B = ball(X.space, X.base, std::exp(-t), ball_kind::open);
        std::stable_sort(B.begin(), B.end(), [&](point_id a, point_id b) { return X.space(X.base, a) < X.space(X.base, b); });
        if (B.size() > centers) B.resize(centers);
        double worst = 1;
        for (auto a : lambda_steps)
            for (auto b : mu_steps) {
                const double lr = std::exp(-t - static_cast<double>(a) * kappa);
                const double cov = lr * std::exp(-static_cast<double>(b) * kappa);
                std::vector<std::int64_t> counts;
                for (auto y : B) {
                    auto By = ball(X.space, y, lr, ball_kind::open);
                    auto c = covering_number(X.space, By, cov, opt);
                    if (!c.exact) rep.partial = true;
                    counts.push_back(c.upper);
                }
                auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
                const double c = static_cast<double>(*mx) / static_cast<double>(*mn);
                if (c > worst) {
                    worst = c;
                    if (c > rep.c_hat) {
                        rep.c_hat = c;
                        rep.worst_t = t;
                        rep.worst_lambda_log = -static_cast<double>(a) * kappa;
                        rep.worst_mu_log = -static_cast<double>(b) * kappa;
                        rep.worst_y = X.space.label(B[static_cast<std::size_t>(mx - counts.begin())]);
                        rep.worst_z = X.space.label(B[static_cast<std::size_t>(mn - counts.begin())]);
                    }
                }
            }
        rep.per_scale.push_back(worst);
        rep.scale_t.push_back(t);
    }
    detail::finish_assumption(rep);
    return rep;
}

struct DimensionReport {
    WindowedEstimate delta_lower, d_lower, d_upper, delta_upper;
    std::string source;  // backend and spec description
    nlohmann::json provenance = nlohmann::json::object();
    std::optional<AssumptionReport> assumption;
};

struct ChainCheck {
    bool pass = false;
    double worst_margin = 0;  // most negative (b - a + widths) over the three links
    std::string detail;
};

/// delta_lower <= d_lower <= d_upper <= delta_upper up to the summed bracket
/// widths of each compared pair.
inline ChainCheck dim_chain_check(const DimensionReport& r) {
    ChainCheck c;
    c.worst_margin = std::numeric_limits<double>::infinity();
    const std::pair<const char*, std::pair<const WindowedEstimate*, const WindowedEstimate*>> links[] = {
        {"delta_lower <= d_lower", {&r.delta_lower, &r.d_lower}},
        {"d_lower <= d_upper", {&r.d_lower, &r.d_upper}},
        {"d_upper <= delta_upper", {&r.d_upper, &r.delta_upper}},
    };
    for (auto& [name, ab] : links) {
        const double m = ab.second->value - ab.first->value + ab.first->width() + ab.second->width() + 1e-12;
        if (m < c.worst_margin) {
            c.worst_margin = m;
            c.detail = name;
        }
    }
    c.pass = c.worst_margin >= 0;
    if (!c.pass) c.detail = "violated: " + c.detail;
    return c;
}

/// Table shapes used for deep combinatorial schedules.
struct EstimatorShape {
    double kappa = std::log(2.0);
    std::int64_t tangential_h = 64;  // h columns of the tangential table
    std::int64_t local_rows = 64;    // t rows of the local table
};

/// Both tables for a spec: all t with h <= 64 kappa, and 64 t values with h
/// up to log Q_depth - 64 kappa.
inline std::pair<GFunction, GFunction> estimator_tables(const FractalSpec& spec, const EstimatorShape& shape = {}) {
    ScaleLadder L(spec);
    const auto span = static_cast<std::int64_t>(std::floor(L.logQ(L.depth()) / shape.kappa));
    if (span < 2 * shape.tangential_h + 4 || span < 2 * shape.local_rows + 4)
        throw range_error("depth " + std::to_string(spec.depth) + " too shallow for the estimator tables (need log Q_depth >= " +
                          std::to_string(2 * std::max(shape.tangential_h, shape.local_rows) + 4) + " kappa)");
    auto tang = g_combinatorial(spec, GGrid::tangential(span - shape.tangential_h + 1, shape.tangential_h, shape.kappa));
    auto local = g_combinatorial(spec, GGrid::tangential(shape.local_rows, span - shape.local_rows, shape.kappa));
    return {std::move(tang), std::move(local)};
}

inline std::string describe(const FractalSpec& spec) {
    return to_string(spec.fam) + ":" + (spec.schedule.is_named() ? spec.schedule.name() : to_json(spec.schedule).dump()) +
           ":depth=" + std::to_string(spec.depth);
}

/// Report from the two combinatorial tables: tangential pair from the
/// tangential table, local pair from the local table.
inline DimensionReport estimate_dimensions(const FractalSpec& spec, const EstimatorShape& shape = {}) {
    auto [tang, local] = estimator_tables(spec, shape);
    DimensionReport r;
    std::tie(r.delta_lower, r.delta_upper) = tangential_dims(tang);
    std::tie(r.d_lower, r.d_upper) = local_dims(local);
    r.source = "comb:" + describe(spec);
    r.provenance = {{"spec", to_json(spec)},
                    {"backend", "comb"},
                    {"kappa", shape.kappa},
                    {"tangential_grid", {{"rows", tang.nrows()}, {"h_max_index", tang.m_max()}}},
                    {"local_grid", {{"rows", local.nrows()}, {"h_max_index", local.m_max()}}}};
    return r;
}

/// Report from a single table (both pairs from the same samples).
inline DimensionReport report_from_table(const GFunction& g, std::int64_t window_t = 0, std::int64_t window_h = 0) {
    auto l = limit_ratios(g, window_t, window_h);
    DimensionReport r;
    r.delta_lower = l.delta_lower;
    r.d_lower = l.d_lower;
    r.d_upper = l.d_upper;
    r.delta_upper = l.delta_upper;
    r.source = g.backend() + ":" + g.basepoint();
    r.provenance = {{"backend", g.backend()},
                    {"kappa", g.kappa()},
                    {"t_origin", g.grid().t_origin},
                    {"rows", g.nrows()},
                    {"h_max_index", g.m_max()},
                    {"window_t", l.window_t},
                    {"window_h", l.window_h}};
    return r;
}

inline nlohmann::json to_json(const AssumptionReport& a) {
    return {{"c_hat", a.c_hat},   {"per_scale", a.per_scale}, {"scale_t", a.scale_t}, {"stable", a.stable},
            {"partial", a.partial}, {"sample", a.sample},
            {"worst", {{"t", a.worst_t}, {"log_lambda", a.worst_lambda_log}, {"log_mu", a.worst_mu_log}, {"y", a.worst_y}, {"z", a.worst_z}}}};
}

inline nlohmann::json to_json(const ClosedFormDims& c) {
    nlohmann::json growth = nlohmann::json::object();
    for (auto [q, a] : c.growth) growth[std::to_string(q)] = a;
    return {{"delta_lower", c.delta_lower}, {"d_lower", c.d_lower}, {"d_upper", c.d_upper},
            {"delta_upper", c.delta_upper}, {"method", c.method},   {"growth", growth}};
}

inline nlohmann::json to_json(const DimensionReport& r) {
    nlohmann::json j = {{"delta_lower", to_json(r.delta_lower)}, {"d_lower", to_json(r.d_lower)},
                        {"d_upper", to_json(r.d_upper)},         {"delta_upper", to_json(r.delta_upper)},
                        {"source", r.source},                    {"provenance", r.provenance}};
    if (r.assumption) j["assumption"] = to_json(*r.assumption);
    return j;
}

/// CSV summary row (with header when requested).
inline void write_csv_row(std::ostream& os, const DimensionReport& r, bool header) {
    if (header) os << "source,delta_lower,d_lower,d_upper,delta_upper,delta_lower_lo,delta_lower_hi,d_lower_lo,d_lower_hi,d_upper_lo,d_upper_hi,delta_upper_lo,delta_upper_hi\n";
    os.precision(10);
    os << '"' << r.source << '"' << ',' << r.delta_lower.value << ',' << r.d_lower.value << ',' << r.d_upper.value << ','
       << r.delta_upper.value;
    for (auto* e : {&r.delta_lower, &r.d_lower, &r.d_upper, &r.delta_upper}) os << ',' << e->lo << ',' << e->hi;
    os << '\n';
}

}  // namespace tandim
