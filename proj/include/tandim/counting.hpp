#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "tandim/bitset.hpp"
#include "tandim/errors.hpp"
#include "tandim/metric_space.hpp"

namespace tandim {

/// Certified answer to an NP-hard count: the true value lies in [lower, upper].
struct CountBracket {
    std::int64_t lower = 0;
    std::int64_t upper = 0;
    bool exact = false;

    static CountBracket of(std::int64_t v) { return {v, v, true}; }
    double midpoint() const noexcept { return 0.5 * static_cast<double>(lower + upper); }
    bool contains(std::int64_t v) const noexcept { return lower <= v && v <= upper; }
};

struct CountOptions {
    ball_kind kind = ball_kind::open;
    center_policy policy = center_policy::in_subset;
    /// Sets with at most this many elements are always solved exactly.
    std::size_t exact_threshold = 24;
    /// Branch-and-bound node limit for larger instances.
    std::uint64_t node_budget = 200000;
};

namespace detail {

/// Exact/bracketed minimum set cover over a universe of `m` elements.
class SetCoverSolver {
public:
    SetCoverSolver(std::size_t m, std::vector<Bitset> sets) : m_(m), sets_(std::move(sets)) {
        prune_dominated();
        containing_.assign(m_, {});
        for (std::size_t s = 0; s < sets_.size(); ++s) sets_[s].for_each([&](std::size_t e) { containing_[e].push_back(s); });
    }

    CountBracket solve(bool unlimited, std::uint64_t budget) {
        Bitset all(m_);
        all.set_all();
        best_ = greedy(all);
        const std::size_t root_lb = independent_bound(all);
        if (root_lb >= best_) return {static_cast<std::int64_t>(best_), static_cast<std::int64_t>(best_), true};
        budget_ = unlimited ? std::numeric_limits<std::uint64_t>::max() : budget;
        nodes_ = 0;
        aborted_ = false;
        search(all, 0);
        if (aborted_) return {static_cast<std::int64_t>(root_lb), static_cast<std::int64_t>(best_), false};
        return {static_cast<std::int64_t>(best_), static_cast<std::int64_t>(best_), true};
    }

    std::size_t greedy_count() {
        Bitset all(m_);
        all.set_all();
        return greedy(all);
    }

    std::size_t lower_bound() {
        Bitset all(m_);
        all.set_all();
        return independent_bound(all);
    }

private:
    // Drops duplicate and strictly dominated candidate sets; the earliest
    // (smallest center id) survives among equals.
    void prune_dominated() {
        std::vector<char> dead(sets_.size(), 0);
        for (std::size_t a = 0; a < sets_.size(); ++a) {
            if (dead[a]) continue;
            for (std::size_t b = 0; b < sets_.size(); ++b) {
                if (a == b || dead[b]) continue;
                if (sets_[a].is_subset_of(sets_[b]) && (!(sets_[a] == sets_[b]) || b < a)) {
                    dead[a] = 1;
                    break;
                }
            }
        }
        std::vector<Bitset> kept;
        for (std::size_t a = 0; a < sets_.size(); ++a)
            if (!dead[a]) kept.push_back(std::move(sets_[a]));
        sets_ = std::move(kept);
    }

    std::size_t greedy(Bitset uncovered) const {
        std::size_t used = 0;
        while (uncovered.any()) {
            std::size_t best_s = 0, best_gain = 0;
            for (std::size_t s = 0; s < sets_.size(); ++s) {
                const std::size_t g = sets_[s].count_and(uncovered);
                if (g > best_gain) best_gain = g, best_s = s;
            }
            if (best_gain == 0) throw internal_error("set cover instance has an uncoverable element");
            uncovered.subtract(sets_[best_s]);
            ++used;
        }
        return used;
    }

    // Elements no two of which share a candidate set each need their own set.
    std::size_t independent_bound(const Bitset& uncovered) const {
        Bitset blocked(m_);
        std::size_t count = 0;
        std::vector<std::pair<std::size_t, std::size_t>> order;
        uncovered.for_each([&](std::size_t e) { order.emplace_back(containing_[e].size(), e); });
        std::sort(order.begin(), order.end());
        for (auto [deg, e] : order) {
            if (blocked.test(e)) continue;
            ++count;
            for (std::size_t s : containing_[e]) blocked |= sets_[s];
        }
        return count;
    }

    void search(const Bitset& uncovered, std::size_t depth) {
        if (aborted_) return;
        if (++nodes_ > budget_) {
            aborted_ = true;
            return;
        }
        if (uncovered.none()) {
            best_ = std::min(best_, depth);
            return;
        }
        if (depth + independent_bound(uncovered) >= best_) return;
        // branch on the uncovered element with the fewest covering sets
        std::size_t pick = m_, pick_deg = std::numeric_limits<std::size_t>::max();
        uncovered.for_each([&](std::size_t e) {
            if (containing_[e].size() < pick_deg) pick_deg = containing_[e].size(), pick = e;
        });
        std::vector<std::pair<std::size_t, std::size_t>> branches;
        for (std::size_t s : containing_[pick]) branches.emplace_back(sets_[s].count_and(uncovered), s);
        std::stable_sort(branches.begin(), branches.end(), [](auto& a, auto& b) { return a.first > b.first; });
        for (auto [gain, s] : branches) {
            Bitset next = uncovered;
            next.subtract(sets_[s]);
            search(next, depth + 1);
            if (aborted_ || depth + 1 >= best_) return;
        }
    }

    std::size_t m_;
    std::vector<Bitset> sets_;
    std::vector<std::vector<std::size_t>> containing_;
    std::size_t best_ = 0;
    std::uint64_t budget_ = 0, nodes_ = 0;
    bool aborted_ = false;
};

/// Maximum independent set in a conflict graph, exact by branch and bound
/// with a greedy clique-partition bound.
class IndependentSetSolver {
public:
    explicit IndependentSetSolver(std::vector<Bitset> adj) : n_(adj.size()), adj_(std::move(adj)) {}

    CountBracket solve(bool unlimited, std::uint64_t budget) {
        Bitset all(n_);
        all.set_all();
        best_ = greedy(all);
        const std::size_t ub = clique_partition_size(all);
        if (best_ >= ub) return CountBracket::of(static_cast<std::int64_t>(best_));
        budget_ = unlimited ? std::numeric_limits<std::uint64_t>::max() : budget;
        nodes_ = 0;
        aborted_ = false;
        expand(all, 0);
        if (aborted_) return {static_cast<std::int64_t>(best_), static_cast<std::int64_t>(ub), false};
        return CountBracket::of(static_cast<std::int64_t>(best_));
    }

    std::size_t upper_bound() {
        Bitset all(n_);
        all.set_all();
        return clique_partition_size(all);
    }

private:
    // Min-degree greedy, ties by smallest vertex.
    std::size_t greedy(Bitset cand) const {
        std::size_t count = 0;
        while (cand.any()) {
            std::size_t pick = n_, deg = std::numeric_limits<std::size_t>::max();
            cand.for_each([&](std::size_t v) {
                const std::size_t d = adj_[v].count_and(cand);
                if (d < deg) deg = d, pick = v;
            });
            ++count;
            cand.reset(pick);
            cand.subtract(adj_[pick]);
        }
        return count;
    }

    // Greedy partition of `cand` into cliques of the conflict graph; every
    // independent set meets each clique at most once.
    std::vector<std::pair<std::size_t, std::size_t>> classify(const Bitset& cand) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;  // (vertex, class index 1-based)
        std::vector<std::vector<std::size_t>> classes;
        cand.for_each([&](std::size_t v) {
            std::size_t k = 0;
            for (; k < classes.size(); ++k) {
                bool ok = true;
                for (std::size_t u : classes[k])
                    if (!adj_[v].test(u)) {
                        ok = false;
                        break;
                    }
                if (ok) break;
            }
            if (k == classes.size()) classes.emplace_back();
            classes[k].push_back(v);
        });
        for (std::size_t k = 0; k < classes.size(); ++k)
            for (std::size_t v : classes[k]) out.emplace_back(v, k + 1);
        return out;
    }

    std::size_t clique_partition_size(const Bitset& cand) const {
        auto c = classify(cand);
        return c.empty() ? 0 : c.back().second;
    }

    void expand(Bitset cand, std::size_t size) {
        if (aborted_) return;
        if (++nodes_ > budget_) {
            aborted_ = true;
            return;
        }
        if (cand.none()) {
            best_ = std::max(best_, size);
            return;
        }
        auto order = classify(cand);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto [v, cls] = *it;
            if (size + cls <= best_) return;
            Bitset next = cand;
            next.reset(v);
            next.subtract(adj_[v]);
            expand(next, size + 1);
            if (aborted_) return;
            cand.reset(v);
        }
        best_ = std::max(best_, size);
    }

    std::size_t n_;
    std::vector<Bitset> adj_;
    std::size_t best_ = 0;
    std::uint64_t budget_ = 0, nodes_ = 0;
    bool aborted_ = false;
};

inline void check_subset(const FiniteMetricSpace& space, std::span<const point_id> subset) {
    if (subset.empty()) throw input_error("subset E must be nonempty");
    for (point_id p : subset) space.check_point(p);
}

}  // namespace detail

/// Minimum number of radius-r balls covering E (n_r for open balls,
/// n-bar_r for closed ones). Centers come from E or from the whole space.
inline CountBracket covering_number(const FiniteMetricSpace& space, std::span<const point_id> subset, double r,
                                    const CountOptions& opt = {}) {
    detail::check_subset(space, subset);
    require(r > 0.0, "covering radius must be positive");
    const std::size_t m = subset.size();
    const double tol = space.tolerance();
    std::vector<point_id> centers;
    if (opt.policy == center_policy::in_subset) {
        centers.assign(subset.begin(), subset.end());
        std::sort(centers.begin(), centers.end());
    } else {
        centers = all_points(space);
    }
    std::vector<Bitset> sets;
    sets.reserve(centers.size());
    for (point_id c : centers) {
        Bitset b(m);
        for (std::size_t e = 0; e < m; ++e)
            if (in_ball(space(c, subset[e]), r, opt.kind, tol)) b.set(e);
        if (b.any()) sets.push_back(std::move(b));
    }
    if (m == 1) return CountBracket::of(1);
    detail::SetCoverSolver solver(m, std::move(sets));
    return solver.solve(m <= opt.exact_threshold, opt.node_budget);
}

inline CountBracket covering_number(const FiniteMetricSpace& space, double r, const CountOptions& opt = {}) {
    auto all = all_points(space);
    return covering_number(space, all, r, opt);
}

/// Maximum number of points of E with pairwise distance >= 2r, i.e. centers
/// of pairwise disjoint open r-balls.
inline CountBracket packing_number(const FiniteMetricSpace& space, std::span<const point_id> subset, double r,
                                   const CountOptions& opt = {}) {
    detail::check_subset(space, subset);
    require(r > 0.0, "packing radius must be positive");
    const std::size_t m = subset.size();
    if (m == 1) return CountBracket::of(1);
    const double tol = space.tolerance();
    std::vector<Bitset> adj(m, Bitset(m));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            if (space(subset[a], subset[b]) < 2.0 * r - tol) {
                adj[a].set(b);
                adj[b].set(a);
            }
    detail::IndependentSetSolver solver(std::move(adj));
    return solver.solve(m <= opt.exact_threshold, opt.node_budget);
}

inline CountBracket packing_number(const FiniteMetricSpace& space, double r, const CountOptions& opt = {}) {
    auto all = all_points(space);
    return packing_number(space, all, r, opt);
}

}  // namespace tandim
