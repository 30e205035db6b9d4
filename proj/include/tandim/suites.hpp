#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandim/counting.hpp"
#include "tandim/dimensions.hpp"
#include "tandim/gfunction.hpp"
#include "tandim/metric_space.hpp"
#include "tandim/quasicocycle.hpp"
#include "tandim/tangent.hpp"

namespace tandim {

struct SuiteResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string summary;
    double seconds = 0;
    double time_limit = 0;  // 0: none
    nlohmann::json details = nlohmann::json::object();
};

namespace suites {

inline std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
}

/// Pinned tolerances.
inline constexpr double closed_form_tol = 1e-6;
inline constexpr double estimator_tol = 0.02;
inline constexpr double strict_margin = 0.01;
inline constexpr double selfsimilar_final = 0.05;
inline constexpr double candidate_dim_max = 0.1;
inline constexpr double counterexample_delta_min = 0.5;
inline constexpr double counterexample_margin = 0.4;
inline constexpr double newformula_tol = 0.05;
inline constexpr std::int64_t golden_closed_depth = 100000;
inline constexpr std::int64_t golden_estimator_depth = 10000;

// ---- random finite spaces ---------------------------------------------------

/// Seeded random metric on n <= 12 points: planar points, integer-grid
/// points (many ties), or a shortest-path metric of random weights.
inline FiniteMetricSpace random_space(std::mt19937_64& rng, std::size_t n, int kind) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("x" + std::to_string(i));
    if (kind == 0 || kind == 1) {
        std::vector<double> coords;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::uniform_int_distribution<int> gi(0, 4);
        for (std::size_t i = 0; i < 2 * n; ++i) coords.push_back(kind == 0 ? u(rng) : gi(rng));
        return FiniteMetricSpace::from_points(labels, coords, 2);
    }
    std::uniform_real_distribution<double> w(0.1, 1.0);
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = w(rng);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
    return FiniteMetricSpace::unchecked(labels, d);
}

/// Radius: half the time an exact pairwise distance (boundary case), else
/// uniform in (0, diameter].
inline double random_radius(std::mt19937_64& rng, const FiniteMetricSpace& X) {
    const double diam = std::max(X.max_distance(), 1e-3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (X.size() > 1 && u(rng) < 0.5) {
        std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
        const double d = X(pick(rng), pick(rng));
        if (d > 0) return d;
    }
    return diam * (1e-3 + (1 - 1e-3) * u(rng));
}

struct HarnessCounts {
    std::uint64_t spaces = 0, trials = 0;
    std::uint64_t packing_violations = 0, closed_violations = 0;
    std::uint64_t number_ineq_violations = 0, ni_ineq_violations = 0;
    std::uint64_t inexact = 0;
    std::string first_ni_violation, first_number_violation, first_counting_violation;
};

inline HarnessCounts counting_harness(std::uint64_t seed = 20240601, int spaces = 200, int per_space = 50,
                                      bool lemmas = true, bool inequalities = true) {
    HarnessCounts h;
    std::mt19937_64 rng(seed);
    CountOptions open, closed, ambient;
    closed.kind = ball_kind::closed;
    ambient.policy = center_policy::ambient;
    std::uniform_int_distribution<std::size_t> size(1, 12);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 0; s < spaces; ++s) {
        const auto X = random_space(rng, size(rng), s % 3);
        ++h.spaces;
        std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
        for (int k = 0; k < per_space; ++k) {
            ++h.trials;
            if (inequalities) {
                point_set E;
                for (point_id i = 0; i < X.size(); ++i)
                    if (u01(rng) < 0.6) E.push_back(i);
                if (E.empty()) E.push_back(pick(rng));
                const double r = random_radius(rng, X);
                const auto n_r = covering_number(X, E, r, open);
                const auto n_2r = covering_number(X, E, 2 * r, open);
                const auto nu_r = packing_number(X, E, r, open);
                const auto nb_r = covering_number(X, E, r, closed);
                if (!(n_r.exact && n_2r.exact && nu_r.exact && nb_r.exact)) ++h.inexact;
                const bool pk = n_2r.upper <= nu_r.lower && nu_r.upper <= n_r.lower;
                const bool cl = n_2r.upper <= nb_r.lower && nb_r.upper <= n_r.lower;
                if (!pk) ++h.packing_violations;
                if (!cl) ++h.closed_violations;
                if ((!pk || !cl) && h.first_counting_violation.empty())
                    h.first_counting_violation = "space " + std::to_string(s) + " r=" + fmt(r, 9);
            }
            if (lemmas) {
                const point_id x = pick(rng);
                const double r = random_radius(rng, X);
                const double lam = 0.05 + 0.95 * u01(rng), mu = 0.05 + 0.95 * u01(rng);
                const auto B = ball(X, x, r, ball_kind::open);
                const auto outer_n = covering_number(X, B, lam * mu * r, ambient);
                const auto mid_n = covering_number(X, B, lam * r, ambient);
                const auto outer_nu = packing_number(X, B, lam * mu * r, open);
                const auto mid_nu = packing_number(X, B, lam * r, open);
                std::int64_t max_n = 0, min_nu = std::numeric_limits<std::int64_t>::max();
                for (auto y : B) {
                    const auto By = ball(X, y, lam * r, ball_kind::open);
                    max_n = std::max(max_n, covering_number(X, By, lam * mu * r, ambient).upper);
                    min_nu = std::min(min_nu, packing_number(X, By, lam * mu * r, open).lower);
                }
                if (outer_n.lower > mid_n.upper * max_n) {
                    ++h.number_ineq_violations;
                    if (h.first_number_violation.empty())
                        h.first_number_violation = "space " + std::to_string(s) + " x=" + X.label(x) + " r=" + fmt(r, 9) +
                                                   " lambda=" + fmt(lam) + " mu=" + fmt(mu);
                }
                if (outer_nu.upper < mid_nu.lower * min_nu) {
                    ++h.ni_ineq_violations;
                    if (h.first_ni_violation.empty())
                        h.first_ni_violation = "space " + std::to_string(s) + " x=" + X.label(x) + " r=" + fmt(r, 9) +
                                               " lambda=" + fmt(lam) + " mu=" + fmt(mu) + ": nu(lmr,B)=" +
                                               std::to_string(outer_nu.upper) + " < " + std::to_string(mid_nu.lower) +
                                               "*" + std::to_string(min_nu);
                }
            }
        }
    }
    return h;
}

// ---- shipped g-tables -------------------------------------------------------

struct NamedTable {
    std::string name;
    GFunction g;
};

inline std::vector<NamedTable> shipped_tables() {
    std::vector<NamedTable> out;
    const double k = std::log(2.0);
    for (auto [f, n] : {std::pair{family::sierpinski, "sierpinski-23"}, {family::chessboard, "vicsek-12"},
                        {family::chessboard, "vicsek-12-caption"}}) {
        FractalSpec spec{f, Schedule::named(n), golden_estimator_depth};
        auto [tang, local] = estimator_tables(spec);
        out.push_back({std::string("comb-tangential:") + n, std::move(tang)});
        out.push_back({std::string("comb-local:") + n, std::move(local)});
    }
    for (auto [f, n] : {std::pair{family::sierpinski, "sierpinski-23"}, {family::chessboard, "vicsek-12"}})
        out.push_back({std::string("geom:") + n, g_geometric(FractalSpec{f, Schedule::named(n), 20}, GGrid::tangential(5, 6, k))});
    {
        // left endpoints of the level-7 middle-thirds intervals, based at 0
        std::vector<std::string> labels;
        std::vector<double> coords;
        for (int i = 0; i < 128; ++i) {
            double x = 0, s = 1;
            for (int b = 6; b >= 0; --b) {
                s /= 3;
                if (i >> b & 1) x += 2 * s;
            }
            labels.push_back(i == 0 ? "base" : "c" + std::to_string(i));
            coords.push_back(x);
        }
        PointedSpace P(FiniteMetricSpace::from_points(labels, coords, 1), 0);
        out.push_back({"finite:cantor-128", g_finite(P, GGrid::tangential(8, 4, k))});
    }
    {
        std::vector<std::string> labels{"base"};
        std::vector<double> coords{0.0};
        for (int i = 0; i < 30; ++i) {
            labels.push_back("g" + std::to_string(i));
            coords.push_back(std::pow(0.75, i));
        }
        PointedSpace P(FiniteMetricSpace::from_points(labels, coords, 1), 0);
        out.push_back({"finite:geometric-31", g_finite(P, GGrid::tangential(16, 5, k))});
    }
    return out;
}

inline std::vector<std::pair<std::string, FractalSpec>> named_specs(std::int64_t depth) {
    return {{"sierpinski-23", {family::sierpinski, Schedule::named("sierpinski-23"), depth}},
            {"vicsek-12", {family::chessboard, Schedule::named("vicsek-12"), depth}},
            {"vicsek-12-caption", {family::chessboard, Schedule::named("vicsek-12-caption"), depth}}};
}

// ---- criteria ---------------------------------------------------------------

inline SuiteResult golden(int id, const std::string& name, const std::vector<std::string>& schedules, family fam,
                          const std::array<double, 4>& expect) {
    SuiteResult r;
    r.id = id;
    r.name = name;
    r.time_limit = 10.0;
    r.pass = true;
    std::ostringstream sum;
    for (const auto& sched : schedules) {
        auto c = closed_form_dims(Schedule::named(sched), fam, golden_closed_depth);
        const std::array<double, 4> cf{c.delta_lower, c.d_lower, c.d_upper, c.delta_upper};
        auto e = estimate_dimensions(FractalSpec{fam, Schedule::named(sched), golden_estimator_depth});
        const std::array<double, 4> est{e.delta_lower.value, e.d_lower.value, e.d_upper.value, e.delta_upper.value};
        double cf_err = 0, est_err = 0;
        for (int i = 0; i < 4; ++i) {
            cf_err = std::max(cf_err, std::abs(cf[i] - expect[i]));
            est_err = std::max(est_err, std::abs(est[i] - expect[i]));
        }
        const bool ok = cf_err <= closed_form_tol && est_err <= estimator_tol;
        r.pass = r.pass && ok;
        sum << sched << ": closed-form err " << std::scientific << std::setprecision(1) << cf_err << ", estimator err "
            << std::fixed << std::setprecision(4) << est_err << "; ";
        r.details[sched] = {{"closed_form", to_json(c)}, {"estimate", to_json(e)}, {"closed_form_err", cf_err},
                            {"estimator_err", est_err}};
    }
    r.summary = sum.str();
    return r;
}

inline SuiteResult golden_sierpinski() {
    return golden(1, "golden-sierpinski", {"sierpinski-23"}, family::sierpinski,
                  {std::log(3.0) / std::log(2.0), std::log(18.0) / std::log(6.0), std::log(18.0) / std::log(6.0),
                   std::log(6.0) / std::log(3.0)});
}

inline SuiteResult golden_vicsek() {
    return golden(2, "golden-vicsek", {"vicsek-12", "vicsek-12-caption"}, family::chessboard,
                  {std::log(5.0) / std::log(3.0), std::log(65.0) / std::log(15.0), std::log(65.0) / std::log(15.0),
                   std::log(13.0) / std::log(5.0)});
}

inline SuiteResult counting_inequalities() {
    SuiteResult r;
    r.id = 3;
    r.name = "counting-inequalities";
    r.time_limit = 60.0;
    auto h = counting_harness(20240601, 200, 50, false, true);
    r.pass = h.packing_violations == 0 && h.closed_violations == 0 && h.inexact == 0;
    r.summary = std::to_string(h.spaces) + " spaces x 50 (E,r): n2r<=nu<=n violations " +
                std::to_string(h.packing_violations) + ", n2r<=nbar<=n violations " + std::to_string(h.closed_violations) +
                ", inexact " + std::to_string(h.inexact);
    r.details = {{"trials", h.trials}, {"first_violation", h.first_counting_violation}};
    return r;
}

inline SuiteResult lemma_inequalities() {
    SuiteResult r;
    r.id = 4;
    r.name = "number-ineq";
    r.time_limit = 60.0;
    auto h = counting_harness(20240601, 200, 50, true, false);
    r.pass = h.number_ineq_violations == 0 && h.ni_ineq_violations == 0;
    r.summary = std::to_string(h.trials) + " tuples: covering product bound violations " +
                std::to_string(h.number_ineq_violations) + ", packing product bound violations " +
                std::to_string(h.ni_ineq_violations);
    if (!h.first_ni_violation.empty()) r.summary += " (first: " + h.first_ni_violation + ")";
    r.details = {{"trials", h.trials},
                 {"number_ineq_violations", h.number_ineq_violations},
                 {"ni_ineq_violations", h.ni_ineq_violations},
                 {"first_number_violation", h.first_number_violation},
                 {"first_ni_violation", h.first_ni_violation}};
    return r;
}

inline SuiteResult quasicocycle_suite() {
    SuiteResult r;
    r.id = 5;
    r.name = "quasicocycle";
    r.time_limit = 60.0;
    r.pass = true;
    std::ostringstream sum;
    int certified = 0, tables = 0;
    for (auto& [name, g] : shipped_tables()) {
        ++tables;
        const auto t0 = default_t0(g);
        auto cob = coboundary_bound(g, t0);
        auto sweep = quasicocycle_sweep(g, cob.S, t0);
        auto ex = extremal_sequence(g, cob.S, t0);
        const bool comb = name.rfind("comb", 0) == 0;
        const bool ok = (!comb || cob.S < 1e-9) && sweep.failures == 0 && ex.certified;
        certified += ex.certified;
        r.pass = r.pass && ok;
        if (!ok) sum << name << " failed (S=" << cob.S << ", sweep failures " << sweep.failures << ", gap " << ex.gap
                     << " > " << 2 * cob.S / g.kappa() + ex.slack << "); ";
        r.details[name] = {{"coboundary", to_json(cob)}, {"sweep", to_json(sweep)}, {"extremal", to_json(ex)}};
    }
    sum << tables << " tables, extremal certificates " << certified << "/" << tables;
    r.summary = sum.str();
    return r;
}

inline SuiteResult dimension_chain() {
    SuiteResult r;
    r.id = 6;
    r.name = "dimension-chain";
    r.pass = true;
    std::ostringstream sum;
    std::vector<std::pair<std::string, FractalSpec>> specs = named_specs(golden_estimator_depth);
    specs.push_back({"sierpinski-const2", {family::sierpinski, Schedule::constant(2), 400}});
    specs.push_back({"sierpinski-const3", {family::sierpinski, Schedule::constant(3), 400}});
    specs.push_back({"chessboard-const1", {family::chessboard, Schedule::constant(1), 400}});
    specs.push_back({"chessboard-const2", {family::chessboard, Schedule::constant(2), 400}});
    int stable = 0, checked = 0;
    AssumptionPlan plan;
    plan.last_octave = 10;
    for (auto& [name, spec] : specs) {
        auto rep = estimate_dimensions(spec);
        rep.assumption = check_assumption(FractalSpec{spec.fam, spec.schedule, std::min<std::int64_t>(spec.depth, 16)}, plan);
        auto chain = dim_chain_check(rep);
        ++checked;
        if (rep.assumption->stable) {
            ++stable;
            if (!chain.pass) r.pass = false;
        }
        nlohmann::json d = to_json(rep);
        d["chain"] = {{"pass", chain.pass}, {"worst_margin", chain.worst_margin}, {"detail", chain.detail}};
        if (name.rfind("sierpinski-23", 0) == 0 || name.rfind("vicsek", 0) == 0) {
            const double lo = rep.d_lower.value - rep.delta_lower.value;
            const double hi = rep.delta_upper.value - rep.d_upper.value;
            d["strict_margins"] = {lo, hi};
            if (lo < strict_margin || hi < strict_margin) r.pass = false;
            sum << name << " margins " << fmt(lo, 4) << "/" << fmt(hi, 4) << (chain.pass ? " chain ok" : " chain FAIL")
                << (rep.assumption->stable ? "" : " (cHat unstable)") << "; ";
        } else if (!chain.pass) {
            sum << name << " chain FAIL; ";
        }
        r.details[name] = d;
    }
    sum << stable << "/" << checked << " reports with stable cHat";
    r.summary = sum.str();
    return r;
}

inline SuiteResult tangent_window() {
    SuiteResult r;
    r.id = 7;
    r.name = "tangent-window";
    r.time_limit = 120.0;
    r.pass = true;
    FractalSpec spec{family::sierpinski, Schedule::named("sierpinski-23"), 48};
    auto runs = constant_runs(spec.schedule, 40, 4);
    r.details = nlohmann::json::array();
    std::ostringstream sum;
    for (const auto& run : runs) {
        auto w = verify_schedule_window(spec, run.start, run.length, run.length - 2);
        r.pass = r.pass && w.pass;
        sum << "q=" << run.q << "@" << run.start << "+" << run.length << " gh " << fmt(w.gh.upper, 4) << " <= "
            << fmt(w.bound, 4) << "+" << fmt(w.slack, 4) << (w.pass ? "" : " FAIL") << "; ";
        r.details.push_back({{"start", run.start},
                             {"length", run.length},
                             {"q", run.q},
                             {"p", w.p},
                             {"gh_lower", w.gh.lower},
                             {"gh_upper", w.gh.upper},
                             {"bound", w.bound},
                             {"slack", w.slack},
                             {"pass", w.pass}});
    }
    if (runs.empty()) r.pass = false;
    r.summary = std::to_string(runs.size()) + " runs: " + sum.str();
    return r;
}

inline SuiteResult selfsimilar() {
    SuiteResult r;
    r.id = 8;
    r.name = "selfsimilar";
    auto rep = verify_selfsimilar(family::sierpinski, 2, 10, {2, 3, 4, 5, 6});
    r.pass = rep.monotone && rep.final_upper < selfsimilar_final;
    std::ostringstream sum;
    sum << "uppers";
    for (const auto& b : rep.gh) sum << " " << fmt(b.upper, 4);
    sum << (rep.monotone ? ", monotone" : ", NOT monotone") << ", final " << fmt(rep.final_upper, 4) << " < "
        << selfsimilar_final;
    r.summary = sum.str();
    r.details = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.m.size(); ++i)
        r.details.push_back({{"m", rep.m[i]}, {"lower", rep.gh[i].lower}, {"upper", rep.gh[i].upper}, {"envelope", rep.envelope[i]}});
    return r;
}

inline SuiteResult counterexample() {
    SuiteResult r;
    r.id = 9;
    r.name = "counterexample";
    r.time_limit = 120.0;
    auto a = counterexample_audit(6);
    r.pass = a.caps_ok && a.all_finite && a.sup_candidate_dim <= candidate_dim_max &&
             a.delta_upper_estimate >= counterexample_delta_min && a.margin >= counterexample_margin;
    r.summary = std::to_string(a.clusters.candidates.size()) + " candidates, sup curve " + fmt(a.sup_candidate_dim, 4) +
                ", delta-upper estimate " + fmt(a.delta_upper_estimate, 4) + ", margin " + fmt(a.margin, 4);
    r.details = {{"sup_candidate_dim", a.sup_candidate_dim},
                 {"delta_upper_estimate", a.delta_upper_estimate},
                 {"delta_upper_max", a.delta_upper_max},
                 {"caps_ok", a.caps_ok},
                 {"all_finite", a.all_finite},
                 {"assumption_c_hat", a.assumption_c_hat},
                 {"k_plus_one_route", a.k_plus_one_route}};
    return r;
}

inline SuiteResult newformula() {
    SuiteResult r;
    r.id = 10;
    r.name = "newformula";
    r.pass = true;
    std::ostringstream sum;
    for (auto& [name, spec] : named_specs(golden_estimator_depth)) {
        if (name == "vicsek-12-caption") continue;
        auto a = newformula_audit(spec, {}, 512, false);
        const bool ok = a.upper_gap <= newformula_tol && a.lower_gap <= newformula_tol;
        r.pass = r.pass && ok;
        sum << name << ": |du - sup| " << fmt(a.upper_gap, 4) << ", |dl - inf| " << fmt(a.lower_gap, 4) << "; ";
        r.details[name] = {{"delta_upper", a.delta_upper.value}, {"delta_lower", a.delta_lower.value},
                           {"sup_lower_dim", a.sup_lower_dim},   {"sup_upper_dim", a.sup_upper_dim},
                           {"inf_lower_dim", a.inf_lower_dim},   {"inf_upper_dim", a.inf_upper_dim},
                           {"candidates", a.candidates}};
    }
    r.summary = sum.str();
    return r;
}

}  // namespace suites

struct NamedSuite {
    int id;
    const char* name;
    std::function<SuiteResult()> run;
};

inline const std::vector<NamedSuite>& all_suites() {
    static const std::vector<NamedSuite> s = {
        {1, "golden-sierpinski", suites::golden_sierpinski},
        {2, "golden-vicsek", suites::golden_vicsek},
        {3, "counting-inequalities", suites::counting_inequalities},
        {4, "number-ineq", suites::lemma_inequalities},
        {5, "quasicocycle", suites::quasicocycle_suite},
        {6, "dimension-chain", suites::dimension_chain},
        {7, "tangent-window", suites::tangent_window},
        {8, "selfsimilar", suites::selfsimilar},
        {9, "counterexample", suites::counterexample},
        {10, "newformula", suites::newformula},
    };
    return s;
}

/// Runs a suite and stamps its wall time; a time limit overrun fails it.
inline SuiteResult run_suite(const NamedSuite& s) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r = s.run();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.time_limit > 0 && r.seconds > r.time_limit) {
        r.pass = false;
        r.summary += " [over time limit " + suites::fmt(r.time_limit, 0) + " s]";
    }
    return r;
}

inline nlohmann::json to_json(const SuiteResult& r) {
    return {{"id", r.id},           {"name", r.name},     {"pass", r.pass},     {"summary", r.summary},
            {"seconds", r.seconds}, {"time_limit", r.time_limit}, {"details", r.details}};
}

}  // namespace tandim
