#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tandim/errors.hpp"
#include "tandim/schedule.hpp"

namespace tandim {

/// A cell at some level, by the lattice position of its origin corner in
/// units of 1/Q_level. Triangles use skew coordinates (A,B) -> (A + B/2, B*sqrt3/2).
struct LatticeCell {
    std::int64_t A = 0;
    std::int64_t B = 0;
    friend bool operator==(const LatticeCell&, const LatticeCell&) = default;
    friend auto operator<=>(const LatticeCell&, const LatticeCell&) = default;
};

/// Euclidean point of the skew/square lattice, in lattice units.
inline std::array<double, 2> lattice_to_plane(family f, double a, double b) {
    if (f == family::sierpinski) return {a + 0.5 * b, 0.5 * std::sqrt(3.0) * b};
    return {a, b};
}

/// Kept children (u,v) of one subdivision; index 0 is the origin corner.
inline std::vector<std::pair<int, int>> kept_children(family f, int q) {
    const auto s = static_cast<int>(side_factor(f, q));
    std::vector<std::pair<int, int>> out;
    for (int v = 0; v < s; ++v)
        for (int u = 0; u < s; ++u) {
            const bool keep = f == family::sierpinski ? u + v <= s - 1 : (u + v) % 2 == 0;
            if (keep) out.emplace_back(u, v);
        }
    return out;
}

/// Corner vertices of a cell in lattice units of its own level.
inline std::vector<std::pair<std::int64_t, std::int64_t>> cell_vertices(family f, const LatticeCell& c) {
    if (f == family::sierpinski) return {{c.A, c.B}, {c.A + 1, c.B}, {c.A, c.B + 1}};
    return {{c.A, c.B}, {c.A + 1, c.B}, {c.A + 1, c.B + 1}, {c.A, c.B + 1}};
}

/// Diameter of the level-0 cell.
inline double unit_cell_diameter(family f) { return f == family::sierpinski ? 1.0 : std::sqrt(2.0); }

namespace detail {

inline std::int64_t checked_child(std::int64_t x, std::int64_t s, int u) {
    std::int64_t r;
    if (__builtin_mul_overflow(x, s, &r) || __builtin_add_overflow(r, u, &r))
        throw range_error("cell lattice coordinate overflows 64 bits; reduce depth or radius");
    return r;
}

inline double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    double t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy);
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - ax - t * dx, py - ay - t * dy);
}

}  // namespace detail

/// Distance from the origin to the closed cell, in lattice units.
inline double origin_distance(family f, const LatticeCell& c) {
    if (f == family::chessboard) return std::hypot(static_cast<double>(c.A), static_cast<double>(c.B));
    if (c.A == 0 && c.B == 0) return 0.0;
    const auto v = cell_vertices(f, c);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % v.size()];
        auto P = lattice_to_plane(f, static_cast<double>(p.first), static_cast<double>(p.second));
        auto Q = lattice_to_plane(f, static_cast<double>(q.first), static_cast<double>(q.second));
        best = std::min(best, detail::segment_distance(0.0, 0.0, P[0], P[1], Q[0], Q[1]));
    }
    return best;
}

/// Level-j realization of a spec: every kept cell with its address.
class CellSet {
public:
    CellSet() = default;

    /// The level-0 set: the single unit cell.
    explicit CellSet(FractalSpec spec) : spec_(std::move(spec)), cells_{LatticeCell{}} { spec_.validate(); }

    const FractalSpec& spec() const noexcept { return spec_; }
    std::int64_t level() const noexcept { return level_; }
    std::size_t size() const noexcept { return cells_.size(); }
    const std::vector<LatticeCell>& cells() const noexcept { return cells_; }

    /// Address of cell i: per-level child indices, length level().
    std::vector<int> address(std::size_t i) const {
        return {addr_.begin() + static_cast<std::ptrdiff_t>(i * level_),
                addr_.begin() + static_cast<std::ptrdiff_t>((i + 1) * level_)};
    }

    std::string address_string(std::size_t i) const {
        std::string s;
        for (int c : address(i)) {
            if (!s.empty()) s += '.';
            s += std::to_string(c);
        }
        return s.empty() ? "-" : s;
    }

    /// s_1..s_level
    std::vector<std::int64_t> side_lengths() const {
        std::vector<std::int64_t> out;
        for (std::int64_t j = 1; j <= level_; ++j) out.push_back(side_factor(spec_.fam, spec_.schedule(j)));
        return out;
    }

    /// Q_level as a floating value.
    double Q() const {
        double q = 1.0;
        for (auto s : side_lengths()) q *= static_cast<double>(s);
        return q;
    }

    CellSet refine() const {
        if (level_ >= spec_.depth)
            throw input_error("cannot refine beyond depth " + std::to_string(spec_.depth));
        const int q = spec_.schedule(level_ + 1);
        const std::int64_t s = side_factor(spec_.fam, q);
        const auto kids = kept_children(spec_.fam, q);
        CellSet out;
        out.spec_ = spec_;
        out.level_ = level_ + 1;
        out.cells_.reserve(cells_.size() * kids.size());
        out.addr_.reserve(cells_.size() * kids.size() * static_cast<std::size_t>(out.level_));
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            for (std::size_t k = 0; k < kids.size(); ++k) {
                const auto [u, v] = kids[k];
                out.cells_.push_back({detail::checked_child(cells_[i].A, s, u), detail::checked_child(cells_[i].B, s, v)});
                out.addr_.insert(out.addr_.end(), addr_.begin() + static_cast<std::ptrdiff_t>(i * level_),
                                 addr_.begin() + static_cast<std::ptrdiff_t>((i + 1) * level_));
                out.addr_.push_back(static_cast<int>(k));
            }
        }
        return out;
    }

    /// Refines from level 0 to `level`.
    static CellSet build(const FractalSpec& spec, std::int64_t level) {
        CellSet c(spec);
        while (c.level() < level) c = c.refine();
        return c;
    }

    /// Plane coordinates of cell i's corners.
    std::vector<std::array<double, 2>> geometry(std::size_t i) const {
        const double inv = 1.0 / Q();
        std::vector<std::array<double, 2>> out;
        for (auto [a, b] : cell_vertices(spec_.fam, cells_.at(i))) {
            auto p = lattice_to_plane(spec_.fam, static_cast<double>(a), static_cast<double>(b));
            out.push_back({p[0] * inv, p[1] * inv});
        }
        return out;
    }

    double cell_diameter() const { return unit_cell_diameter(spec_.fam) / Q(); }

    /// Points inside each kept cell: the origin-nearest corner first, then
    /// per_cell-1 seeded uniform points. Row-major (x,y) pairs.
    std::vector<double> sample_points(int per_cell, std::uint64_t seed) const {
        require(per_cell >= 1, "per_cell must be >= 1");
        std::mt19937_64 rng(seed);
        auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        std::vector<double> out;
        out.reserve(cells_.size() * static_cast<std::size_t>(per_cell) * 2);
        const double inv = 1.0 / Q();
        for (const auto& c : cells_) {
            for (int k = 0; k < per_cell; ++k) {
                double a = static_cast<double>(c.A), b = static_cast<double>(c.B);
                if (k > 0) {
                    double u = unit(), v = unit();
                    if (spec_.fam == family::sierpinski && u + v > 1.0) u = 1.0 - u, v = 1.0 - v;
                    a += u, b += v;
                }
                auto p = lattice_to_plane(spec_.fam, a, b);
                out.push_back(p[0] * inv);
                out.push_back(p[1] * inv);
            }
        }
        return out;
    }

    /// CSV: address,level,x0,y0,...
    void write_csv(std::ostream& os) const {
        os << "address,level";
        const std::size_t nv = spec_.fam == family::sierpinski ? 3 : 4;
        for (std::size_t v = 0; v < nv; ++v) os << ",x" << v << ",y" << v;
        os << '\n';
        os.precision(17);
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            os << address_string(i) << ',' << level_;
            for (auto& p : geometry(i)) os << ',' << p[0] << ',' << p[1];
            os << '\n';
        }
    }

private:
    FractalSpec spec_;
    std::int64_t level_ = 0;
    std::vector<LatticeCell> cells_;
    std::vector<int> addr_;
};

/// Level-`level` cells meeting the ball B(0, e^{log_radius}), found by
/// descent from the unit cell. Open balls need distance < r, closed <= r
/// (relative slack 1e-9). Throws budget_error once more than `budget`
/// cells have been visited.
inline std::vector<LatticeCell> cells_in_ball(const ScaleLadder& ladder, std::int64_t level, double log_radius,
                                              bool closed = false, std::uint64_t budget = 50'000'000) {
    if (level < 0 || level > ladder.depth())
        throw range_error("level " + std::to_string(level) + " outside the generated depth " +
                          std::to_string(ladder.depth()));
    const family f = ladder.fam();
    std::vector<LatticeCell> cur{LatticeCell{}}, next;
    std::uint64_t visited = 1;
    for (std::int64_t j = 1; j <= level; ++j) {
        const int q = ladder.q(j);
        const std::int64_t s = side_factor(f, q);
        const auto kids = kept_children(f, q);
        const double r = std::exp(log_radius + ladder.logQ(j));
        const double lim = closed ? r * (1 + 1e-9) : r * (1 - 1e-9);
        next.clear();
        for (const auto& c : cur)
            for (auto [u, v] : kids) {
                if (++visited > budget)
                    throw budget_error("cell descent exceeded budget of " + std::to_string(budget) + " cells");
                LatticeCell k{detail::checked_child(c.A, s, u), detail::checked_child(c.B, s, v)};
                const double d = origin_distance(f, k);
                if (closed ? d <= lim : d < lim) next.push_back(k);
            }
        cur.swap(next);
    }
    return cur;
}

/// Distance from lattice point (a,b) to the closed cell, in lattice units
/// of the cell's level.
inline double point_cell_distance(family f, const LatticeCell& c, double a, double b) {
    const double da = a - static_cast<double>(c.A), db = b - static_cast<double>(c.B);
    if (f == family::chessboard) {
        const double x = std::max({0.0, -da, da - 1.0}), y = std::max({0.0, -db, db - 1.0});
        return std::hypot(x, y);
    }
    if (da >= 0 && db >= 0 && da + db <= 1) return 0.0;
    const auto P = lattice_to_plane(f, a, b);
    const auto v = cell_vertices(f, c);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % v.size()];
        auto X = lattice_to_plane(f, static_cast<double>(p.first), static_cast<double>(p.second));
        auto Y = lattice_to_plane(f, static_cast<double>(q.first), static_cast<double>(q.second));
        best = std::min(best, detail::segment_distance(P[0], P[1], X[0], X[1], Y[0], Y[1]));
    }
    return best;
}

/// Level-`level` cells meeting the ball of radius e^{log_radius} around the
/// lattice point (cA, cB) of level `center_level`.
inline std::vector<LatticeCell> cells_near_point(const ScaleLadder& ladder, std::int64_t level, std::int64_t center_level,
                                                 std::int64_t cA, std::int64_t cB, double log_radius,
                                                 bool closed = false, std::uint64_t budget = 50'000'000) {
    if (level < 0 || level > ladder.depth() || center_level < 0 || center_level > ladder.depth())
        throw range_error("level outside the generated depth " + std::to_string(ladder.depth()));
    const family f = ladder.fam();
    std::vector<LatticeCell> cur{LatticeCell{}}, next;
    std::uint64_t visited = 1;
    // Q_j / Q_center for j = 0..level
    std::vector<double> factor(static_cast<std::size_t>(level + 1), 1.0);
    {
        double q = 1.0;
        for (std::int64_t j = 1; j <= center_level; ++j) q *= static_cast<double>(ladder.s(j));
        double run = 1.0;
        for (std::int64_t j = 0; j <= level; ++j) {
            if (j > 0) run *= static_cast<double>(ladder.s(j));
            factor[static_cast<std::size_t>(j)] = run / q;
        }
    }
    for (std::int64_t j = 1; j <= level; ++j) {
        const int q = ladder.q(j);
        const std::int64_t s = side_factor(f, q);
        const auto kids = kept_children(f, q);
        const double r = std::exp(log_radius + ladder.logQ(j));
        const double lim = closed ? r * (1 + 1e-9) : r * (1 - 1e-9);
        const double a = static_cast<double>(cA) * factor[static_cast<std::size_t>(j)];
        const double b = static_cast<double>(cB) * factor[static_cast<std::size_t>(j)];
        next.clear();
        for (const auto& c : cur)
            for (auto [u, v] : kids) {
                if (++visited > budget)
                    throw budget_error("cell descent exceeded budget of " + std::to_string(budget) + " cells");
                LatticeCell k{detail::checked_child(c.A, s, u), detail::checked_child(c.B, s, v)};
                const double d = point_cell_distance(f, k, a, b);
                if (closed ? d <= lim : d < lim) next.push_back(k);
            }
        cur.swap(next);
    }
    return cur;
}

/// Distinct corner vertices of the given level cells, in lattice units.
inline std::vector<std::pair<std::int64_t, std::int64_t>> cell_vertex_set(family f,
                                                                            const std::vector<LatticeCell>& cells) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& c : cells)
        for (auto v : cell_vertices(f, c)) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace tandim
