#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tandim/errors.hpp"
#include "tandim/metric_space.hpp"

namespace tandim {

/// Certified bracket on a real-valued distance.
struct DistanceBracket {
    double lower = 0.0;
    double upper = 0.0;
    bool exact = false;

    double width() const noexcept { return upper - lower; }
};

struct GhOptions {
    /// Exact enumeration when |X| + |Y| is at most this.
    std::size_t exact_limit = 10;
    /// Greedy abstract correspondence is tried while |X|*|Y|*(|X|+|Y|) stays below this.
    std::uint64_t greedy_work_limit = 400'000'000;
    /// Row-profile lower bound is computed while |X|*|Y|*(|X|+|Y|) stays below this.
    std::uint64_t profile_work_limit = 100'000'000;
};

using Correspondence = std::vector<std::pair<point_id, point_id>>;

/// max |d_X(a,a') - d_Y(b,b')| over pairs of related points.
inline double distortion(const FiniteMetricSpace& X, const FiniteMetricSpace& Y, const Correspondence& R) {
    double worst = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i)
        for (std::size_t j = i + 1; j < R.size(); ++j)
            worst = std::max(worst, std::abs(X(R[i].first, R[j].first) - Y(R[i].second, R[j].second)));
    return worst;
}

inline bool covers_both(const FiniteMetricSpace& X, const FiniteMetricSpace& Y, const Correspondence& R) {
    std::vector<char> cx(X.size(), 0), cy(Y.size(), 0);
    for (auto [a, b] : R) cx[a] = cy[b] = 1;
    return std::all_of(cx.begin(), cx.end(), [](char c) { return c; }) &&
           std::all_of(cy.begin(), cy.end(), [](char c) { return c; });
}

namespace detail {

inline double diameter(const FiniteMetricSpace& s) { return s.max_distance(); }

/// Hausdorff distance between two sorted sequences of reals.
inline double sorted_hausdorff(const std::vector<double>& a, const std::vector<double>& b) {
    auto one_side = [](const std::vector<double>& p, const std::vector<double>& q) {
        double worst = 0.0;
        std::size_t j = 0;
        for (double v : p) {
            while (j + 1 < q.size() && q[j + 1] <= v) ++j;
            double best = std::abs(v - q[j]);
            if (j + 1 < q.size()) best = std::min(best, std::abs(q[j + 1] - v));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_side(a, b), one_side(b, a));
}

inline std::vector<double> sorted_row(const FiniteMetricSpace& s, point_id i) {
    auto r = s.row(i);
    std::vector<double> v(r.begin(), r.end());
    std::sort(v.begin(), v.end());
    return v;
}

/// Separation of the first k points picked by farthest-point traversal from
/// `start`; ties broken by smallest id. Returns 0 when k > |S|.
inline double farthest_point_separation(const FiniteMetricSpace& s, std::size_t k, point_id start) {
    if (k > s.size() || k < 2) return 0.0;
    std::vector<double> near(s.size(), std::numeric_limits<double>::infinity());
    std::vector<point_id> picked{start};
    for (point_id p = 0; p < s.size(); ++p) near[p] = s(start, p);
    double sep = std::numeric_limits<double>::infinity();
    while (picked.size() < k) {
        point_id best = 0;
        double far = -1.0;
        for (point_id p = 0; p < s.size(); ++p)
            if (near[p] > far) far = near[p], best = p;
        sep = std::min(sep, far);
        picked.push_back(best);
        for (point_id p = 0; p < s.size(); ++p) near[p] = std::min(near[p], s(best, p));
    }
    return sep;
}

/// Lower bounds on 2*d_GH (i.e. on the minimal distortion).
inline double distortion_lower_bound(const FiniteMetricSpace& X, const FiniteMetricSpace& Y,
                                     std::optional<std::pair<point_id, point_id>> forced, const GhOptions& opt) {
    double lb = std::abs(diameter(X) - diameter(Y));
    // pigeonhole: a separated (|X|+1)-subset of Y forces two of its points onto one x
    if (X.size() < Y.size()) lb = std::max(lb, farthest_point_separation(Y, X.size() + 1, forced ? forced->second : 0));
    if (Y.size() < X.size()) lb = std::max(lb, farthest_point_separation(X, Y.size() + 1, forced ? forced->first : 0));
    if (forced) lb = std::max(lb, sorted_hausdorff(sorted_row(X, forced->first), sorted_row(Y, forced->second)));
    const std::uint64_t work = static_cast<std::uint64_t>(X.size()) * Y.size() * (X.size() + Y.size());
    if (work <= opt.profile_work_limit) {
        std::vector<std::vector<double>> rx(X.size()), ry(Y.size());
        for (point_id i = 0; i < X.size(); ++i) rx[i] = sorted_row(X, i);
        for (point_id j = 0; j < Y.size(); ++j) ry[j] = sorted_row(Y, j);
        std::vector<double> best_y(Y.size(), std::numeric_limits<double>::infinity());
        double side_x = 0.0;
        for (point_id i = 0; i < X.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (point_id j = 0; j < Y.size(); ++j) {
                const double h = sorted_hausdorff(rx[i], ry[j]);
                best = std::min(best, h);
                best_y[j] = std::min(best_y[j], h);
            }
            side_x = std::max(side_x, best);
        }
        double side_y = 0.0;
        for (double v : best_y) side_y = std::max(side_y, v);
        lb = std::max({lb, side_x, side_y});
    }
    return lb;
}

/// Greedy correspondence: pairs are added one at a time, each choosing the
/// partner that least increases the running distortion.
inline Correspondence greedy_correspondence(const FiniteMetricSpace& X, const FiniteMetricSpace& Y,
                                            std::pair<point_id, point_id> seed) {
    Correspondence R{seed};
    auto cost = [&](point_id x, point_id y) {
        double w = 0.0;
        for (auto [a, b] : R) w = std::max(w, std::abs(X(x, a) - Y(y, b)));
        return w;
    };
    std::vector<char> cx(X.size(), 0), cy(Y.size(), 0);
    cx[seed.first] = cy[seed.second] = 1;
    std::vector<point_id> xs, ys;
    for (point_id i = 0; i < X.size(); ++i)
        if (!cx[i]) xs.push_back(i);
    for (point_id j = 0; j < Y.size(); ++j)
        if (!cy[j]) ys.push_back(j);
    std::stable_sort(xs.begin(), xs.end(), [&](point_id a, point_id b) { return X(seed.first, a) < X(seed.first, b); });
    std::stable_sort(ys.begin(), ys.end(), [&](point_id a, point_id b) { return Y(seed.second, a) < Y(seed.second, b); });
    for (point_id x : xs) {
        point_id best = 0;
        double bc = std::numeric_limits<double>::infinity();
        for (point_id y = 0; y < Y.size(); ++y) {
            const double c = cost(x, y);
            if (c < bc) bc = c, best = y;
        }
        R.emplace_back(x, best);
        cy[best] = 1;
    }
    for (point_id y : ys) {
        if (cy[y]) continue;
        point_id best = 0;
        double bc = std::numeric_limits<double>::infinity();
        for (point_id x = 0; x < X.size(); ++x) {
            const double c = cost(x, y);
            if (c < bc) bc = c, best = x;
        }
        R.emplace_back(best, y);
        cy[y] = 1;
    }
    return R;
}

/// Nearest-neighbour correspondence through shared ambient coordinates.
inline Correspondence embedding_correspondence(const FiniteMetricSpace& X, const FiniteMetricSpace& Y,
                                               std::optional<std::pair<point_id, point_id>> forced) {
    const int dim = X.embedding_dim();
    auto sq = [dim](std::span<const double> a, std::span<const double> b) {
        double acc = 0.0;
        for (int k = 0; k < dim; ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
        return acc;
    };
    Correspondence R;
    if (forced) R.push_back(*forced);
    for (point_id x = 0; x < X.size(); ++x) {
        point_id best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (point_id y = 0; y < Y.size(); ++y) {
            const double d = sq(X.coords(x), Y.coords(y));
            if (d < bd) bd = d, best = y;
        }
        R.emplace_back(x, best);
    }
    for (point_id y = 0; y < Y.size(); ++y) {
        point_id best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (point_id x = 0; x < X.size(); ++x) {
            const double d = sq(X.coords(x), Y.coords(y));
            if (d < bd) bd = d, best = x;
        }
        R.emplace_back(best, y);
    }
    std::sort(R.begin(), R.end());
    R.erase(std::unique(R.begin(), R.end()), R.end());
    return R;
}

/// Exact minimal distortion for tiny spaces: binary search over the finite
/// set of candidate values, each tested by a covering-clique search over X*Y.
class ExactCorrespondenceSearch {
public:
    ExactCorrespondenceSearch(const FiniteMetricSpace& X, const FiniteMetricSpace& Y,
                              std::optional<std::pair<point_id, point_id>> forced)
        : X_(X), Y_(Y), forced_(forced) {
        for (point_id x = 0; x < X.size(); ++x)
            for (point_id y = 0; y < Y.size(); ++y) pairs_.emplace_back(x, y);
        if (pairs_.size() > 64) throw internal_error("exact correspondence search limited to 64 pairs");
    }

    double min_distortion() {
        std::vector<double> cand{0.0};
        for (point_id a = 0; a < X_.size(); ++a)
            for (point_id b = a; b < X_.size(); ++b)
                for (point_id c = 0; c < Y_.size(); ++c)
                    for (point_id d = c; d < Y_.size(); ++d) cand.push_back(std::abs(X_(a, b) - Y_(c, d)));
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        std::size_t lo = 0, hi = cand.size() - 1;  // cand.back() = max(diam) is always feasible
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (feasible(cand[mid])) hi = mid;
            else lo = mid + 1;
        }
        return cand[lo];
    }

private:
    bool feasible(double tau) {
        const std::size_t P = pairs_.size();
        const double slack = 1e-12 * std::max({X_.max_distance(), Y_.max_distance(), 1e-300});
        compat_.assign(P, 0);
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) {
                const double d = std::abs(X_(pairs_[i].first, pairs_[j].first) - Y_(pairs_[i].second, pairs_[j].second));
                if (d <= tau + slack) compat_[i] |= std::uint64_t{1} << j;
            }
        std::uint64_t allowed = P == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << P) - 1;
        std::uint64_t chosen = 0;
        if (forced_) {
            const std::size_t f = forced_->first * Y_.size() + forced_->second;
            chosen |= std::uint64_t{1} << f;
            allowed &= compat_[f];
        }
        return extend(chosen, allowed);
    }

    bool extend(std::uint64_t chosen, std::uint64_t allowed) {
        // most constrained uncovered element (x or y)
        std::size_t best_count = std::numeric_limits<std::size_t>::max();
        std::uint64_t best_opts = 0;
        bool done = true;
        for (point_id x = 0; x < X_.size(); ++x) {
            std::uint64_t row = 0;
            for (point_id y = 0; y < Y_.size(); ++y) row |= std::uint64_t{1} << (x * Y_.size() + y);
            if (chosen & row) continue;
            done = false;
            const std::uint64_t opts = row & allowed;
            const auto c = static_cast<std::size_t>(std::popcount(opts));
            if (c < best_count) best_count = c, best_opts = opts;
        }
        for (point_id y = 0; y < Y_.size(); ++y) {
            std::uint64_t col = 0;
            for (point_id x = 0; x < X_.size(); ++x) col |= std::uint64_t{1} << (x * Y_.size() + y);
            if (chosen & col) continue;
            done = false;
            const std::uint64_t opts = col & allowed;
            const auto c = static_cast<std::size_t>(std::popcount(opts));
            if (c < best_count) best_count = c, best_opts = opts;
        }
        if (done) return true;
        if (best_count == 0) return false;
        while (best_opts) {
            const auto p = static_cast<std::size_t>(std::countr_zero(best_opts));
            best_opts &= best_opts - 1;
            if (extend(chosen | (std::uint64_t{1} << p), allowed & compat_[p])) return true;
        }
        return false;
    }

    const FiniteMetricSpace& X_;
    const FiniteMetricSpace& Y_;
    std::optional<std::pair<point_id, point_id>> forced_;
    std::vector<std::pair<point_id, point_id>> pairs_;
    std::vector<std::uint64_t> compat_;
};

inline DistanceBracket gh_bracket(const FiniteMetricSpace& X, const FiniteMetricSpace& Y,
                                  std::optional<std::pair<point_id, point_id>> forced, const GhOptions& opt) {
    require(!X.empty() && !Y.empty(), "Gromov-Hausdorff distance needs nonempty spaces");
    if (X.size() + Y.size() <= opt.exact_limit && X.size() * Y.size() <= 64) {
        ExactCorrespondenceSearch search(X, Y, forced);
        const double v = 0.5 * search.min_distortion();
        return {v, v, true};
    }
    double upper = std::max(diameter(X), diameter(Y));
    if (X.has_embedding() && Y.has_embedding() && X.embedding_dim() == Y.embedding_dim())
        upper = std::min(upper, distortion(X, Y, embedding_correspondence(X, Y, forced)));
    const std::uint64_t work = static_cast<std::uint64_t>(X.size()) * Y.size() * (X.size() + Y.size());
    if (work <= opt.greedy_work_limit) {
        if (forced) {
            upper = std::min(upper, distortion(X, Y, greedy_correspondence(X, Y, *forced)));
        } else {
            auto ecc = [](const FiniteMetricSpace& s, bool want_max) {
                point_id best = 0;
                double bv = want_max ? -1.0 : std::numeric_limits<double>::infinity();
                for (point_id i = 0; i < s.size(); ++i) {
                    auto r = s.row(i);
                    const double e = *std::max_element(r.begin(), r.end());
                    if (want_max ? e > bv : e < bv) bv = e, best = i;
                }
                return best;
            };
            for (bool mx : {false, true})
                upper = std::min(upper, distortion(X, Y, greedy_correspondence(X, Y, {ecc(X, mx), ecc(Y, mx)})));
        }
    }
    const double lower = std::min(upper, distortion_lower_bound(X, Y, forced, opt));
    return {0.5 * lower, 0.5 * upper, lower == upper};
}

}  // namespace detail

/// Gromov-Hausdorff distance as half the minimal correspondence distortion.
inline DistanceBracket gh_distance(const FiniteMetricSpace& X, const FiniteMetricSpace& Y, const GhOptions& opt = {}) {
    return detail::gh_bracket(X, Y, std::nullopt, opt);
}

/// Closed R-ball around the base point, base point first.
inline PointedSpace truncate(const PointedSpace& p, double R) {
    require(R > 0.0, "truncation radius must be positive");
    point_set pts{p.base};
    for (point_id y : ball(p.space, p.base, R, ball_kind::closed))
        if (y != p.base) pts.push_back(y);
    return PointedSpace(p.space.subspace(pts), 0);
}

/// Pointed distance at radius R: both spaces truncated to closed R-balls,
/// base points forced into the correspondence.
inline DistanceBracket pointed_gh_distance(const PointedSpace& X, const PointedSpace& Y, double R,
                                           const GhOptions& opt = {}) {
    require(R > 0.0, "pointed GH radius must be positive");
    const PointedSpace tx = truncate(X, R);
    const PointedSpace ty = truncate(Y, R);
    return detail::gh_bracket(tx.space, ty.space, std::make_pair(tx.base, ty.base), opt);
}

}  // namespace tandim
