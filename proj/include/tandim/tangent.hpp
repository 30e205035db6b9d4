#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tandim/cells.hpp"
#include "tandim/counterexample.hpp"
#include "tandim/counting.hpp"
#include "tandim/errors.hpp"
#include "tandim/dimensions.hpp"
#include "tandim/gfunction.hpp"
#include "tandim/gromov_hausdorff.hpp"
#include "tandim/metric_space.hpp"
#include "tandim/parallel.hpp"
#include "tandim/quasicocycle.hpp"
#include "tandim/schedule.hpp"

namespace tandim {

struct SnapshotOptions {
    std::size_t point_budget = 512;
    /// Fractal sources: finest representation level is the deepest whose
    /// vertex count in the ball stays within this many points.
    std::size_t vertex_cap = 8192;
    std::optional<std::int64_t> level;  // force the representation level
    /// Cloud sources: points whose rescaled log-radius falls below this are
    /// merged into the base point.
    double collapse_log = -10.0;
};

/// A rescaled ball around the base point: (X, x, t d) truncated to radius R.
struct Snapshot {
    PointedSpace space;
    double log_t = 0;
    double R = 1;
    bool empty = false;                // only the base point survived
    std::size_t source_points = 0;     // points in the ball before subsampling
    std::size_t collapsed = 0;         // cloud points merged into the base
    std::int64_t level = -1;           // representation level for fractal sources
    double resolution = 0;             // rescaled cell diameter at that level
    double subsample_radius = 0;       // max distance from a dropped point to the kept set
    /// Hausdorff bound between the snapshot and the true rescaled ball.
    double slack() const noexcept { return resolution + subsample_radius; }
};

namespace detail {

struct PointCloud {
    std::vector<std::string> labels;
    std::vector<double> coords;
    int dim = 2;
    std::size_t size() const noexcept { return labels.size(); }
    double dist(std::size_t i, std::size_t j) const noexcept {
        double acc = 0;
        for (int k = 0; k < dim; ++k) {
            const double d = coords[i * dim + k] - coords[j * dim + k];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
};

/// Farthest-point selection from point 0 under `dist`; ties go to the
/// smaller label. Returns the kept indices (0 first) and the covering radius.
template <class Dist>
std::pair<std::vector<std::size_t>, double> farthest_points(std::size_t n, std::size_t budget, Dist dist,
                                                            const std::vector<std::string>& labels) {
    std::vector<std::size_t> keep{0};
    if (n == 0) return {{}, 0.0};
    std::vector<double> near(n);
    for (std::size_t i = 0; i < n; ++i) near[i] = dist(0, i);
    auto radius = [&] { return *std::max_element(near.begin(), near.end()); };
    if (n <= budget) {
        keep.resize(n);
        std::iota(keep.begin(), keep.end(), std::size_t{0});
        return {keep, 0.0};
    }
    while (keep.size() < budget) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (near[i] > near[best] || (near[i] == near[best] && near[i] > 0 && labels[i] < labels[best])) best = i;
        if (near[best] <= 0) break;
        keep.push_back(best);
        for (std::size_t i = 0; i < n; ++i) near[i] = std::min(near[i], dist(best, i));
    }
    return {keep, radius()};
}

inline Snapshot finish_cloud(PointCloud pc, double log_t, double R, const SnapshotOptions& opt) {
    Snapshot s;
    s.log_t = log_t;
    s.R = R;
    s.source_points = pc.size();
    auto [keep, rad] = farthest_points(pc.size(), opt.point_budget, [&](std::size_t i, std::size_t j) { return pc.dist(i, j); },
                                       pc.labels);
    std::sort(keep.begin() + 1, keep.end());
    std::vector<std::string> labels;
    std::vector<double> coords;
    for (auto i : keep) {
        labels.push_back(pc.labels[i]);
        coords.insert(coords.end(), pc.coords.begin() + static_cast<std::ptrdiff_t>(i * pc.dim),
                      pc.coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * pc.dim));
    }
    s.subsample_radius = rad;
    s.empty = labels.size() <= 1;
    s.space = PointedSpace(FiniteMetricSpace::from_points(std::move(labels), std::move(coords), pc.dim), 0);
    return s;
}

}  // namespace detail

/// Snapshot of a fractal at its distinguished corner: vertices of level
/// cells inside the closed ball B(0, R/t), scaled by t = e^{log_t}.
inline Snapshot snapshot(const FractalSpec& spec, double log_t, double R, const SnapshotOptions& opt = {}) {
    require(R > 0, "snapshot radius must be positive");
    ScaleLadder L(spec);
    const double log_r = std::log(R) - log_t;
    auto vertices_at = [&](std::int64_t lvl) {
        auto cells = cells_in_ball(L, lvl, log_r, true, 8 * opt.vertex_cap + 64);
        auto vs = cell_vertex_set(spec.fam, cells);
        std::vector<std::pair<std::int64_t, std::int64_t>> in;
        const double lim = std::exp(log_r + L.logQ(lvl)) * (1 + 1e-9);
        for (auto v : vs) {
            auto P = lattice_to_plane(spec.fam, static_cast<double>(v.first), static_cast<double>(v.second));
            if (std::hypot(P[0], P[1]) <= lim) in.push_back(v);
        }
        return in;
    };
    std::int64_t lvl;
    std::vector<std::pair<std::int64_t, std::int64_t>> verts;
    if (opt.level) {
        lvl = *opt.level;
        verts = vertices_at(lvl);
    } else {
        lvl = std::min<std::int64_t>(L.depth(), std::max<std::int64_t>(0, L.nearest_level(log_t)));
        verts = vertices_at(lvl);
        while (lvl < L.depth()) {
            std::vector<std::pair<std::int64_t, std::int64_t>> finer;
            try {
                finer = vertices_at(lvl + 1);
            } catch (const budget_error&) {
                break;
            }
            if (finer.size() > opt.vertex_cap) break;
            verts = std::move(finer);
            ++lvl;
        }
    }
    const double scale = std::exp(log_t - L.logQ(lvl));
    detail::PointCloud pc;
    pc.labels.push_back("0,0@" + std::to_string(lvl));
    pc.coords.insert(pc.coords.end(), {0.0, 0.0});
    for (auto v : verts) {
        if (v.first == 0 && v.second == 0) continue;
        auto P = lattice_to_plane(spec.fam, static_cast<double>(v.first), static_cast<double>(v.second));
        pc.labels.push_back(std::to_string(v.first) + "," + std::to_string(v.second) + "@" + std::to_string(lvl));
        pc.coords.insert(pc.coords.end(), {P[0] * scale, P[1] * scale});
    }
    auto s = detail::finish_cloud(std::move(pc), log_t, R, opt);
    s.level = lvl;
    s.resolution = unit_cell_diameter(spec.fam) * scale;
    return s;
}

inline Snapshot snapshot(const CellSet& cells, double log_t, double R, const SnapshotOptions& opt = {}) {
    SnapshotOptions o = opt;
    if (!o.level) o.level = cells.level();
    return snapshot(cells.spec(), log_t, R, o);
}

/// Snapshot of the counterexample cloud at 0. Membership is decided on
/// log-radii; coordinates are formed only after rescaling.
inline Snapshot snapshot(const LogRadiusCloud& cloud, double log_t, double R, const SnapshotOptions& opt = {}) {
    require(R > 0, "snapshot radius must be positive");
    const double log_R = std::log(R);
    detail::PointCloud pc;
    pc.dim = 3;
    pc.labels.push_back("0");
    pc.coords.insert(pc.coords.end(), {0.0, 0.0, 0.0});
    std::size_t collapsed = 0;
    for (const auto& e : cloud.entries()) {
        const double lr = e.log_radius + log_t;
        if (lr > log_R + 1e-12) continue;
        if (lr < opt.collapse_log) {
            ++collapsed;
            continue;
        }
        const double rad = std::exp(lr);
        pc.labels.push_back("k" + std::to_string(e.k) + "n" + std::to_string(e.n) + "i" + std::to_string(e.index));
        pc.coords.insert(pc.coords.end(), {rad * e.v[0], rad * e.v[1], rad * e.v[2]});
    }
    auto s = detail::finish_cloud(std::move(pc), log_t, R, opt);
    s.collapsed = collapsed;
    s.resolution = collapsed ? std::exp(opt.collapse_log) : 0.0;
    return s;
}

/// Snapshot of a finite pointed space: closed ball of radius R/t, distances
/// multiplied by t.
inline Snapshot snapshot(const PointedSpace& X, double log_t, double R, const SnapshotOptions& opt = {}) {
    require(R > 0, "snapshot radius must be positive");
    const double t = std::exp(log_t);
    point_set pts{X.base};
    for (auto y : ball(X.space, X.base, R / t, ball_kind::closed))
        if (y != X.base) pts.push_back(y);
    std::vector<std::string> labels;
    for (auto p : pts) labels.push_back(X.space.label(p));
    auto [keep, rad] = detail::farthest_points(
        pts.size(), opt.point_budget, [&](std::size_t i, std::size_t j) { return X.space(pts[i], pts[j]); }, labels);
    std::sort(keep.begin() + 1, keep.end());
    point_set chosen;
    for (auto i : keep) chosen.push_back(pts[i]);
    Snapshot s;
    s.log_t = log_t;
    s.R = R;
    s.source_points = pts.size();
    s.subsample_radius = rad * t;
    s.empty = chosen.size() <= 1;
    s.space = PointedSpace(X.space.subspace(chosen).scaled(t), 0);
    return s;
}

struct TangentCandidate {
    Snapshot representative;
    std::vector<std::size_t> members;  // indices into the snapshot list
    std::vector<double> log_ts;        // member scales
    double cluster_radius = 0;         // max pairwise pointed-GH upper bound
    bool approximate = false;          // some member pair had no exact bracket
    bool limit_point = false;          // >= 3 members spanning a factor >= 8 in t
};

struct ClusterResult {
    std::vector<TangentCandidate> candidates;
    std::vector<DistanceBracket> pairwise;  // row-major over the snapshot list
    double separation_lower = 0;            // min lower bound between different clusters
    double R = 1, threshold = 0;
};

/// Single-linkage clustering of snapshots under pointed-GH upper bounds.
/// Clusters whose diameter exceeds the threshold are re-split greedily so
/// every cluster radius stays within it.
inline ClusterResult tangent_clusters(const std::vector<Snapshot>& snaps, double R, double merge_threshold,
                                      const GhOptions& gh = {}, unsigned workers = worker_count()) {
    require(snaps.size() >= 2, "clustering needs at least 2 snapshots");
    require(R > 0 && merge_threshold >= 0, "radius must be positive and threshold nonnegative");
    const std::size_t n = snaps.size();
    ClusterResult out;
    out.R = R;
    out.threshold = merge_threshold;
    out.pairwise.assign(n * n, DistanceBracket{0, 0, true});
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<DistanceBracket> res(pairs.size());
    parallel_for(
        pairs.size(),
        [&](std::size_t k) { res[k] = pointed_gh_distance(snaps[pairs[k].first].space, snaps[pairs[k].second].space, R, gh); },
        workers);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        auto [i, j] = pairs[k];
        out.pairwise[i * n + j] = out.pairwise[j * n + i] = res[k];
    }
    auto up = [&](std::size_t i, std::size_t j) { return out.pairwise[i * n + j].upper; };

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [i, j] : pairs)
        if (up(i, j) <= merge_threshold) parent[std::max(find(i), find(j))] = std::min(find(i), find(j));
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> root_slot(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(i);
        if (root_slot[r] == n) {
            root_slot[r] = groups.size();
            groups.emplace_back();
        }
        groups[root_slot[r]].push_back(i);
    }
    std::vector<std::vector<std::size_t>> clusters;
    for (auto& g : groups) {
        std::vector<std::vector<std::size_t>> parts;
        for (auto i : g) {
            bool placed = false;
            for (auto& p : parts)
                if (std::all_of(p.begin(), p.end(), [&](std::size_t j) { return up(i, j) <= merge_threshold; })) {
                    p.push_back(i);
                    placed = true;
                    break;
                }
            if (!placed) parts.push_back({i});
        }
        for (auto& p : parts) clusters.push_back(std::move(p));
    }
    std::vector<std::size_t> label(n);
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (auto i : clusters[c]) label[i] = c;
    out.separation_lower = std::numeric_limits<double>::infinity();
    for (auto [i, j] : pairs)
        if (label[i] != label[j]) out.separation_lower = std::min(out.separation_lower, out.pairwise[i * n + j].lower);
    if (clusters.size() == 1) out.separation_lower = 0;

    for (auto& members : clusters) {
        TangentCandidate c;
        c.members = members;
        std::size_t best = members.front();
        double best_ecc = std::numeric_limits<double>::infinity();
        for (auto i : members) {
            double ecc = 0;
            for (auto j : members) {
                ecc = std::max(ecc, up(i, j));
                if (i != j && !out.pairwise[i * n + j].exact) c.approximate = true;
            }
            c.cluster_radius = std::max(c.cluster_radius, ecc);
            if (ecc < best_ecc) best_ecc = ecc, best = i;
            c.log_ts.push_back(snaps[i].log_t);
        }
        c.representative = snaps[best];
        auto [mn, mx] = std::minmax_element(c.log_ts.begin(), c.log_ts.end());
        c.limit_point = members.size() >= 3 && *mx - *mn >= std::log(8.0) - 1e-12;
        out.candidates.push_back(std::move(c));
    }
    return out;
}

/// log n_r(closed unit ball) / log(1/r) over a grid of log r values (< 0).
struct BallDimCurve {
    std::vector<double> log_r;
    std::vector<double> value, lo, hi;
    std::vector<CountBracket> counts;
    std::size_t ball_points = 0;
    double min_separation = 0;  // below this every ball holds one point
    double finest() const { return value.empty() ? 0.0 : value.back(); }
};

/// Exact covering numbers of the closed unit ball around the base. Below the
/// smallest positive pairwise distance the count is the ball cardinality.
inline BallDimCurve tangent_ball_dim(const PointedSpace& T, const std::vector<double>& log_r_grid,
                                     const CountOptions& opt = {}) {
    require(!T.space.empty(), "candidate must have at least one point");
    BallDimCurve c;
    auto B = ball(T.space, T.base, 1.0, ball_kind::closed);
    c.ball_points = B.size();
    c.min_separation = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < B.size(); ++a)
        for (std::size_t b = a + 1; b < B.size(); ++b)
            if (T.space(B[a], B[b]) > 0) c.min_separation = std::min(c.min_separation, T.space(B[a], B[b]));
    for (double lr : log_r_grid) {
        require(lr < 0, "dimension curve needs r < 1");
        CountBracket k;
        if (B.size() == 1 || std::exp(lr) < c.min_separation * (1 - 1e-9)) {
            const auto m = static_cast<std::int64_t>(B.size());
            k = {m, m, true};
        } else {
            k = covering_number(T.space, B, std::exp(lr), opt);
        }
        c.log_r.push_back(lr);
        c.counts.push_back(k);
        const double den = -lr;
        c.lo.push_back(std::log(static_cast<double>(std::max<std::int64_t>(1, k.lower))) / den);
        c.hi.push_back(std::log(static_cast<double>(std::max<std::int64_t>(1, k.upper))) / den);
        c.value.push_back(std::log(std::max(1.0, k.midpoint())) / den);
    }
    return c;
}

struct SelfSimilarReport {
    int q = 2;
    std::int64_t depth = 0;
    double R = 1;
    std::vector<std::int64_t> m;
    std::vector<DistanceBracket> gh;  // snapshot at t = s^(depth-m) vs t = s^(depth-m-1)
    std::vector<double> envelope;     // 2 s^-m R
    std::vector<std::size_t> points;  // snapshot sizes (finer side)
    bool monotone = false;
    bool below_envelope = false;
    double final_upper = 0;
};

/// Constant-q fractal of the given depth: successive rescalings by s at the
/// corner carry m levels of resolution below the ball; their pointed-GH
/// brackets shrink with m.
inline SelfSimilarReport verify_selfsimilar(family fam, int q, std::int64_t depth, const std::vector<std::int64_t>& m_list,
                                            double R = 1.0, const SnapshotOptions& opt = {4096, 8192, {}, -10.0}) {
    require(!m_list.empty(), "m list must be nonempty");
    FractalSpec spec{fam, Schedule::constant(q), depth};
    spec.validate();
    ScaleLadder L(spec);
    SelfSimilarReport r;
    r.q = q;
    r.depth = depth;
    r.R = R;
    const double s = static_cast<double>(side_factor(fam, q));
    for (auto m : m_list) {
        if (m < 0 || m + 1 > depth) throw input_error("m = " + std::to_string(m) + " outside 0.." + std::to_string(depth - 1));
        auto a = snapshot(spec, L.logQ(depth - m), R, opt);
        auto b = snapshot(spec, L.logQ(depth - m - 1), R, opt);
        r.m.push_back(m);
        r.gh.push_back(pointed_gh_distance(a.space, b.space, R));
        r.envelope.push_back(2 * std::pow(s, -static_cast<double>(m)) * R);
        r.points.push_back(b.space.space.size());
    }
    r.monotone = true;
    r.below_envelope = true;
    for (std::size_t i = 0; i < r.gh.size(); ++i) {
        if (i > 0 && r.gh[i].upper > r.gh[i - 1].upper + 1e-12) r.monotone = false;
        if (r.gh[i].upper > r.envelope[i] + 1e-12) r.below_envelope = false;
    }
    r.final_upper = r.gh.back().upper;
    return r;
}

struct ScheduleRun {
    std::int64_t start = 1;  // first level of the run
    std::int64_t length = 0;
    int q = 0;
};

/// Maximal constant runs lying entirely within levels 1..max_level.
inline std::vector<ScheduleRun> constant_runs(const Schedule& sched, std::int64_t max_level, std::int64_t min_length = 1) {
    std::vector<ScheduleRun> out;
    const auto qs = sched.prefix(max_level + 1);
    std::int64_t j = 1;
    while (j <= max_level) {
        std::int64_t k = j;
        while (k + 1 <= max_level + 1 && qs[static_cast<std::size_t>(k)] == qs[static_cast<std::size_t>(j - 1)]) ++k;
        const std::int64_t len = k - j + 1;
        const bool closed = k < max_level || qs[static_cast<std::size_t>(max_level)] != qs[static_cast<std::size_t>(k - 1)];
        if (len >= min_length && closed) out.push_back({j, len, qs[static_cast<std::size_t>(j - 1)]});
        j = k + 1;
    }
    return out;
}

struct WindowReport {
    ScheduleRun run;
    std::int64_t p = 0;
    double bound = 1;  // q^-p
    DistanceBracket gh;
    double slack = 0;  // subsampling radii of both snapshots
    std::int64_t relative_level = 0;
    bool pass = false;
};

/// Snapshot of S(q-vector) at t = Q_{start-1} against the constant-q fractal
/// at the same relative resolution.
inline WindowReport verify_schedule_window(const FractalSpec& spec, std::int64_t start, std::int64_t length, std::int64_t p,
                                           double R = 1.0, const SnapshotOptions& opt = {}) {
    spec.validate();
    if (start < 1 || length < 1 || start + length - 1 > spec.depth)
        throw input_error("run levels " + std::to_string(start) + ".." + std::to_string(start + length - 1) +
                          " outside the spec depth " + std::to_string(spec.depth));
    const int q = spec.schedule(start);
    for (std::int64_t j = start; j < start + length; ++j)
        if (spec.schedule(j) != q)
            throw input_error("no constant run at levels " + std::to_string(start) + ".." +
                              std::to_string(start + length - 1) + " (level " + std::to_string(j) + " has q=" +
                              std::to_string(spec.schedule(j)) + ")");
    require(p >= 0 && p <= length, "p must lie in 0..run length");
    ScaleLadder L(spec);
    WindowReport w;
    w.run = {start, length, q};
    w.p = p;
    w.bound = std::pow(static_cast<double>(q), -static_cast<double>(p));
    auto a = snapshot(spec, L.logQ(start - 1), R, opt);
    w.relative_level = a.level - (start - 1);
    FractalSpec flat{spec.fam, Schedule::constant(q), std::max<std::int64_t>(1, w.relative_level)};
    SnapshotOptions ob = opt;
    ob.level = w.relative_level;
    auto b = snapshot(flat, 0.0, R, ob);
    w.gh = pointed_gh_distance(a.space, b.space, R);
    w.slack = a.subsample_radius + b.subsample_radius;
    w.pass = w.gh.upper <= w.bound + w.slack + 1e-12;
    return w;
}

struct ShellRatio {
    int k = 0;
    double log_t = 0;         // -log a^k_1
    std::int64_t h_index = 0;  // smallest m with e^{-m kappa} < 1/k^3
    std::int64_t count = 0;    // exact closed-ball covering number of the unit ball
    double ratio = 0;          // log count / h
};

struct CounterexampleAudit {
    int K = 0, N = 0;
    std::vector<CapReport> caps;
    ClusterResult clusters;
    std::vector<BallDimCurve> curves;  // one per candidate
    std::vector<ShellRatio> shells;
    std::vector<double> assumption_c_hat;  // per k
    double sup_candidate_dim = 0;          // sup over candidates of the finest curve value
    double delta_upper_estimate = 0;       // min shell ratio over k in the upper half of 2..K
    double delta_upper_max = 0;
    double margin = 0;                     // delta_upper_estimate - sup_candidate_dim
    bool all_finite = false;
    bool caps_ok = false;
    bool pass = false;
    std::string k_plus_one_route = "unverified: the k+1-point realization is not constructible from the definition of F";
};

inline std::vector<double> default_log_r_grid(double finest = -64.0) {
    std::vector<double> g;
    for (double lr = -1.0; lr >= finest - 1e-12; lr -= 1.0) g.push_back(lr);
    return g;
}

/// Tangent candidates of F at 0 are finite (cS_k u {0}), while shell-scale
/// counts keep log n / log(1/r) near 2/3.
inline CounterexampleAudit counterexample_audit(int K, int N = 2, const std::vector<double>& log_r_grid = default_log_r_grid(),
                                                double kappa = std::log(2.0)) {
    require(K >= 2 && N >= 1, "counterexample audit needs K >= 2 and N >= 1");
    CounterexampleAudit a;
    a.K = K;
    a.N = N;
    a.caps_ok = true;
    for (int k = 1; k <= K; ++k) {
        a.caps.push_back(verify_cap(k));
        a.caps_ok = a.caps_ok && a.caps.back().ok;
    }
    LogRadiusCloud cloud(K, N);
    std::vector<Snapshot> snaps;
    for (int k = 1; k <= K; ++k)
        for (int n = 1; n <= N; ++n) snaps.push_back(snapshot(cloud, -counterexample_log_radius(k, n), 1.0));
    const double k3 = 1.0 / (double(K) * K * K);
    a.clusters = tangent_clusters(snaps, 1.0, std::min(0.05, 0.25 * k3));
    a.all_finite = true;
    for (const auto& c : a.clusters.candidates) {
        a.curves.push_back(tangent_ball_dim(c.representative.space, log_r_grid));
        a.sup_candidate_dim = std::max(a.sup_candidate_dim, a.curves.back().finest());
        if (c.representative.space.space.size() > static_cast<std::size_t>(K) * K + 1) a.all_finite = false;
    }
    CountOptions closed;
    closed.kind = ball_kind::closed;
    a.delta_upper_estimate = std::numeric_limits<double>::infinity();
    for (int k = 2; k <= K; ++k) {
        ShellRatio sr;
        sr.k = k;
        sr.log_t = -counterexample_log_radius(k, 1);
        const double kk = 1.0 / (double(k) * k * k);
        sr.h_index = 1;
        while (std::exp(-static_cast<double>(sr.h_index) * kappa) >= kk) ++sr.h_index;
        auto snap = snapshot(cloud, sr.log_t, 1.0);
        auto g = g_finite(snap.space, GGrid::tangential(1, sr.h_index, kappa), closed);
        sr.count = static_cast<std::int64_t>(std::llround(std::exp(g(0, sr.h_index))));
        sr.ratio = g(0, sr.h_index) / (static_cast<double>(sr.h_index) * kappa);
        a.shells.push_back(sr);
        a.delta_upper_max = std::max(a.delta_upper_max, sr.ratio);
        if (2 * k >= K) a.delta_upper_estimate = std::min(a.delta_upper_estimate, sr.ratio);

        // Homogeneity fails: centers on the shell see k^2 points, the base sees one.
        std::vector<std::int64_t> mus;
        for (std::int64_t b = 1; std::exp(-static_cast<double>(b) * kappa) >= 0.5 * kk; ++b) mus.push_back(b);
        mus.push_back(mus.back() + 1);
        a.assumption_c_hat.push_back(check_assumption(snap.space, {-0.01}, {1}, {mus.back()}, kappa, 8, closed).c_hat);
    }
    a.margin = a.delta_upper_estimate - a.sup_candidate_dim;
    a.pass = a.caps_ok && a.all_finite && a.sup_candidate_dim <= 0.1 && a.delta_upper_estimate >= 0.5 && a.margin >= 0.4;
    return a;
}

struct NewformulaAudit {
    std::string source;
    WindowedEstimate delta_lower, delta_upper;
    std::size_t candidates = 0;
    double sup_lower_dim = 0, sup_upper_dim = 0;  // sup over candidates of d_(T), d^-(T)
    double inf_lower_dim = 0, inf_upper_dim = 0;  // inf over candidates
    double upper_gap = 0;  // |delta_upper - sup d_(T)|
    double lower_gap = 0;  // |delta_lower - inf d^-(T)|
    std::vector<double> candidate_t;
    std::optional<AssumptionReport> assumption;
    bool pass = false;
};

/// Tangent candidates at scales t_n along the tail; each has lower/upper box
/// dimensions min/max over h in [H/2, H] of g(t_n, h)/h. Candidates include
/// the extremal-sequence rows.
inline NewformulaAudit newformula_audit(const FractalSpec& spec, const EstimatorShape& shape = {},
                                        std::size_t max_candidates = 512, bool with_assumption = true) {
    NewformulaAudit out;
    out.source = describe(spec);
    auto [tang, local] = estimator_tables(spec, shape);
    (void)local;
    auto lr = limit_ratios(tang);
    out.delta_lower = lr.delta_lower;
    out.delta_upper = lr.delta_upper;
    const std::int64_t H = tang.m_max();
    const auto n = static_cast<std::int64_t>(tang.nrows());
    const std::int64_t first = std::max<std::int64_t>(lr.t0, n / 2);
    std::vector<std::int64_t> rows;
    const std::int64_t stride = std::max<std::int64_t>(1, (n - first) / static_cast<std::int64_t>(max_candidates));
    for (std::int64_t i = first; i < n; i += stride) rows.push_back(i);
    auto cob = coboundary_bound(tang, lr.t0);
    auto ex = extremal_sequence(tang, cob.S, lr.t0);
    for (auto i : ex.t_index)
        if (i >= first) rows.push_back(i);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    out.sup_lower_dim = out.sup_upper_dim = -std::numeric_limits<double>::infinity();
    out.inf_lower_dim = out.inf_upper_dim = std::numeric_limits<double>::infinity();
    for (auto i : rows) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::int64_t m = H / 2; m <= H; ++m) {
            const double v = tang(i, m) / tang.grid().h(m);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        out.sup_lower_dim = std::max(out.sup_lower_dim, lo);
        out.sup_upper_dim = std::max(out.sup_upper_dim, hi);
        out.inf_lower_dim = std::min(out.inf_lower_dim, lo);
        out.inf_upper_dim = std::min(out.inf_upper_dim, hi);
        out.candidate_t.push_back(tang.grid().t(i));
    }
    out.candidates = rows.size();
    if (rows.empty()) throw range_error("no tangent candidates in the table tail");
    out.upper_gap = std::abs(out.delta_upper.value - out.sup_lower_dim);
    out.lower_gap = std::abs(out.delta_lower.value - out.inf_upper_dim);
    if (with_assumption) {
        AssumptionPlan plan;
        plan.last_octave = 10;
        out.assumption = check_assumption(FractalSpec{spec.fam, spec.schedule, std::min<std::int64_t>(spec.depth, 16)}, plan);
    }
    out.pass = out.upper_gap <= 0.05 && out.lower_gap <= 0.05;
    return out;
}

struct SemicontinuityCheck {
    std::vector<double> r;
    std::vector<bool> upper_ok;  // eventually n_r(X_n) <= n_r(T)
    std::vector<bool> lower_ok;  // eventually nbar_r(X_n) >= nbar_r(T)
    bool pass = false;
};

/// Finite surrogates of semicontinuity of r-covering numbers of unit balls
/// along a snapshot sequence converging to T, tested on the last `tail`
/// members of the sequence within count brackets.
inline SemicontinuityCheck semicontinuity_check(const std::vector<Snapshot>& seq, const PointedSpace& T,
                                                const std::vector<double>& r_grid, std::size_t tail = 2) {
    require(!seq.empty() && !r_grid.empty(), "semicontinuity check needs snapshots and radii");
    CountOptions open, closed;
    closed.kind = ball_kind::closed;
    auto unit = [](const PointedSpace& X) { return ball(X.space, X.base, 1.0, ball_kind::closed); };
    SemicontinuityCheck c;
    c.pass = true;
    const auto BT = unit(T);
    for (double r : r_grid) {
        const auto nT = covering_number(T.space, BT, r, open);
        const auto nbT = covering_number(T.space, BT, r, closed);
        bool up = true, lo = true;
        for (std::size_t i = seq.size() - std::min(tail, seq.size()); i < seq.size(); ++i) {
            const auto& X = seq[i].space;
            const auto B = unit(X);
            up = up && covering_number(X.space, B, r, open).lower <= nT.upper;
            lo = lo && covering_number(X.space, B, r, closed).upper >= nbT.lower;
        }
        c.r.push_back(r);
        c.upper_ok.push_back(up);
        c.lower_ok.push_back(lo);
        c.pass = c.pass && up && lo;
    }
    return c;
}

}  // namespace tandim
