#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tandim/cells.hpp"
#include "tandim/counting.hpp"
#include "tandim/errors.hpp"
#include "tandim/metric_space.hpp"
#include "tandim/parallel.hpp"
#include "tandim/schedule.hpp"

namespace tandim {

/// Sampling lattice of g: t = t_origin + i*kappa for i in `rows`,
/// h = m*kappa for m = 0..m_max.
struct GGrid {
    double kappa = std::log(2.0);
    double t_origin = 0.0;
    std::vector<std::int64_t> rows;
    std::int64_t m_max = 0;

    /// Rows 0..nt-1.
    static GGrid tangential(std::int64_t nt, std::int64_t m_max, double kappa = std::log(2.0), double t_origin = 0.0) {
        require(nt >= 1 && m_max >= 1 && kappa > 0, "grid needs nt >= 1, m_max >= 1, kappa > 0");
        GGrid g{kappa, t_origin, {}, m_max};
        for (std::int64_t i = 0; i < nt; ++i) g.rows.push_back(i);
        return g;
    }

    /// `count` rows spaced `stride` apart starting at row 0.
    static GGrid local(std::int64_t count, std::int64_t stride, std::int64_t m_max, double kappa = std::log(2.0),
                       double t_origin = 0.0) {
        require(count >= 1 && stride >= 1 && m_max >= 1 && kappa > 0, "invalid local grid");
        GGrid g{kappa, t_origin, {}, m_max};
        for (std::int64_t i = 0; i < count; ++i) g.rows.push_back(i * stride);
        return g;
    }

    double t(std::int64_t i) const noexcept { return t_origin + static_cast<double>(i) * kappa; }
    double h(std::int64_t m) const noexcept { return static_cast<double>(m) * kappa; }

    friend bool operator==(const GGrid&, const GGrid&) = default;
};

/// Sampled g(t,h) with per-entry brackets. Missing entries are NaN.
class GFunction {
public:
    GFunction() = default;
    GFunction(GGrid grid, std::string backend, std::string basepoint = "origin")
        : grid_(std::move(grid)), backend_(std::move(backend)), basepoint_(std::move(basepoint)) {
        require(!grid_.rows.empty(), "grid has no rows");
        require(std::is_sorted(grid_.rows.begin(), grid_.rows.end()) &&
                    std::adjacent_find(grid_.rows.begin(), grid_.rows.end()) == grid_.rows.end(),
                "grid rows must be strictly increasing");
        const std::size_t n = grid_.rows.size() * cols();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        value_.assign(n, nan);
        lower_.assign(n, nan);
        upper_.assign(n, nan);
    }

    /// Synthetic table g(i, m) = f(t, h) (exact brackets).
    static GFunction from_function(const GGrid& grid, const std::function<double(double, double)>& f,
                                   std::string backend = "synthetic") {
        GFunction g(grid, std::move(backend));
        for (std::size_t r = 0; r < grid.rows.size(); ++r)
            for (std::int64_t m = 0; m <= grid.m_max; ++m) {
                const double v = f(grid.t(grid.rows[r]), grid.h(m));
                g.set(r, m, v, v, v);
            }
        return g;
    }

    const GGrid& grid() const noexcept { return grid_; }
    double kappa() const noexcept { return grid_.kappa; }
    const std::string& backend() const noexcept { return backend_; }
    const std::string& basepoint() const noexcept { return basepoint_; }
    std::size_t nrows() const noexcept { return grid_.rows.size(); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(grid_.m_max + 1); }
    std::int64_t m_max() const noexcept { return grid_.m_max; }

    /// Row position of t-index i, or npos.
    std::size_t row_of(std::int64_t i) const noexcept {
        auto it = std::lower_bound(grid_.rows.begin(), grid_.rows.end(), i);
        if (it == grid_.rows.end() || *it != i) return npos;
        return static_cast<std::size_t>(it - grid_.rows.begin());
    }

    bool has(std::int64_t i, std::int64_t m) const noexcept {
        if (m < 0 || m > grid_.m_max) return false;
        const std::size_t r = row_of(i);
        return r != npos && !std::isnan(value_[r * cols() + static_cast<std::size_t>(m)]);
    }

    /// Value at a row position; NaN when unsampled. No bounds checks.
    double at_row(std::size_t r, std::int64_t m) const noexcept { return value_[r * cols() + static_cast<std::size_t>(m)]; }

    /// g at t-index i and h = m*kappa.
    double operator()(std::int64_t i, std::int64_t m) const {
        if (!has(i, m))
            throw input_error("g(t,h) not sampled at t-index " + std::to_string(i) + ", h-index " + std::to_string(m));
        return value_[row_of(i) * cols() + static_cast<std::size_t>(m)];
    }
    double lower(std::int64_t i, std::int64_t m) const {
        (*this)(i, m);
        return lower_[row_of(i) * cols() + static_cast<std::size_t>(m)];
    }
    double upper(std::int64_t i, std::int64_t m) const {
        (*this)(i, m);
        return upper_[row_of(i) * cols() + static_cast<std::size_t>(m)];
    }

    /// Grid index of a real t (or h when `is_h`); off-grid values are rejected
    /// with the neighbouring grid points.
    std::int64_t index_of(double x, bool is_h) const {
        const double origin = is_h ? 0.0 : grid_.t_origin;
        const double pos = (x - origin) / grid_.kappa;
        const double near = std::round(pos);
        if (std::abs(pos - near) > 1e-9 * std::max(1.0, std::abs(pos))) {
            std::ostringstream os;
            os.precision(12);
            os << (is_h ? "h" : "t") << " = " << x << " is off the grid; nearest grid points are "
               << origin + std::floor(pos) * grid_.kappa << " and " << origin + std::ceil(pos) * grid_.kappa;
            throw input_error(os.str());
        }
        return static_cast<std::int64_t>(near);
    }

    /// g at real arguments that must lie on the grid.
    double at(double t, double h) const { return (*this)(index_of(t, false), index_of(h, true)); }

    void set(std::size_t row, std::int64_t m, double v, double lo, double hi) {
        const std::size_t k = row * cols() + static_cast<std::size_t>(m);
        value_[k] = v;
        lower_[k] = lo;
        upper_[k] = hi;
    }

    /// Largest m sampled in row r (-1 if none).
    std::int64_t row_extent(std::size_t r) const noexcept {
        for (std::int64_t m = grid_.m_max; m >= 0; --m)
            if (!std::isnan(value_[r * cols() + static_cast<std::size_t>(m)])) return m;
        return -1;
    }

    /// Widest lower/upper spread over all entries.
    double max_bracket_width() const noexcept {
        double w = 0;
        for (std::size_t k = 0; k < value_.size(); ++k)
            if (!std::isnan(value_[k])) w = std::max(w, upper_[k] - lower_[k]);
        return w;
    }

    /// First (row, m) where h -> g decreases by more than tol, if any.
    std::optional<std::pair<std::int64_t, std::int64_t>> monotonicity_violation(double tol = 1e-9) const {
        for (std::size_t r = 0; r < nrows(); ++r) {
            double prev = -std::numeric_limits<double>::infinity();
            for (std::int64_t m = 0; m <= grid_.m_max; ++m) {
                const double v = value_[r * cols() + static_cast<std::size_t>(m)];
                if (std::isnan(v)) continue;
                if (v < prev - tol) return std::make_pair(grid_.rows[r], m);
                prev = v;
            }
        }
        return std::nullopt;
    }

    /// CSV: t,h,g,gLower,gUpper,backend
    void write_csv(std::ostream& os) const {
        os << "t,h,g,gLower,gUpper,backend\n";
        os.precision(17);
        for (std::size_t r = 0; r < nrows(); ++r)
            for (std::int64_t m = 0; m <= grid_.m_max; ++m) {
                const std::size_t k = r * cols() + static_cast<std::size_t>(m);
                if (std::isnan(value_[k])) continue;
                os << grid_.t(grid_.rows[r]) << ',' << grid_.h(m) << ',' << value_[k] << ',' << lower_[k] << ','
                   << upper_[k] << ',' << backend_ << '\n';
            }
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    GGrid grid_;
    std::string backend_;
    std::string basepoint_;
    std::vector<double> value_, lower_, upper_;
};

/// g at scheduled scales: sum of log a_i over levels j+1..j+m.
inline double g_scheduled(const ScaleLadder& ladder, std::int64_t j, std::int64_t m) {
    if (j < 0 || m < 0 || j + m > ladder.depth())
        throw input_error("scheduled range j=" + std::to_string(j) + ", m=" + std::to_string(m) + " exceeds depth " +
                          std::to_string(ladder.depth()));
    return ladder.log_descendants(j, m);
}

/// Piecewise-linear log A as a function of log Q, through the scheduled
/// points (log Q_j, log A_j).
class LogCountCurve {
public:
    explicit LogCountCurve(const ScaleLadder& ladder) : x_(ladder.logQs()) {
        y_.reserve(x_.size());
        for (std::int64_t j = 0; j <= ladder.depth(); ++j) y_.push_back(ladder.logA(j));
    }
    double max_x() const noexcept { return x_.back(); }
    double operator()(double x) const {
        if (x < -1e-12 || x > x_.back() * (1 + 1e-12) + 1e-12)
            throw range_error("log-scale " + std::to_string(x) + " outside [0, " + std::to_string(x_.back()) + "]");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        if (it == x_.end()) return y_.back();
        const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
        if (hi == 0) return y_.front();
        const double w = (x - x_[hi - 1]) / (x_[hi] - x_[hi - 1]);
        return y_[hi - 1] + w * (y_[hi] - y_[hi - 1]);
    }

private:
    std::vector<double> x_, y_;
};

/// Combinatorial g on a uniform grid: g(t,h) = L(t+h) - L(t) with L the
/// interpolated log count curve. Entries with t+h beyond log Q_depth are
/// left unsampled; a grid with no sampled entry is a range error.
inline GFunction g_combinatorial(const FractalSpec& spec, const GGrid& grid) {
    ScaleLadder ladder(spec);
    LogCountCurve L(ladder);
    require(grid.t_origin >= 0, "combinatorial grid must start at t >= 0");
    GFunction g(grid, "comb");
    bool any = false;
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        const double t = grid.t(grid.rows[r]);
        if (t > L.max_x()) continue;
        const double base = L(t);
        for (std::int64_t m = 0; m <= grid.m_max; ++m) {
            if (t + grid.h(m) > L.max_x()) break;
            const double v = L(t + grid.h(m)) - base;
            g.set(r, m, v, v, v);
            any = true;
        }
    }
    if (!any)
        throw range_error("grid lies beyond the generated depth; usable t+h <= " + std::to_string(L.max_x()));
    return g;
}

struct GeometricOptions {
    bool closed = false;
    std::uint64_t budget = 50'000'000;
};

/// Cell-count g: log of the number of level-j' cells meeting B(0, e^{-t}),
/// j' the level with log Q nearest t+h.
inline GFunction g_geometric(const FractalSpec& spec, const GGrid& grid, const GeometricOptions& opt = {}) {
    ScaleLadder ladder(spec);
    const double usable = ladder.logQ(ladder.depth()) - std::log(2.0 * unit_cell_diameter(spec.fam));
    double need = -std::numeric_limits<double>::infinity();
    for (auto i : grid.rows) need = std::max(need, grid.t(i) + grid.h(grid.m_max));
    if (need > usable + 1e-12) {
        std::ostringstream os;
        os << "resolution below the finest level: grid needs t+h up to " << need << ", usable t+h <= " << usable
           << " (t-index <= " << std::floor((usable - grid.t_origin) / grid.kappa) << " at h = 0)";
        throw range_error(os.str());
    }
    GFunction g(grid, "geom");
    const std::size_t cols = static_cast<std::size_t>(grid.m_max + 1);
    std::vector<double> vals(grid.rows.size() * cols);
    parallel_for(grid.rows.size() * cols, [&](std::size_t k) {
        const std::size_t r = k / cols;
        const auto m = static_cast<std::int64_t>(k % cols);
        const double t = grid.t(grid.rows[r]);
        const std::int64_t level = ladder.nearest_level(t + grid.h(m));
        vals[k] = std::log(static_cast<double>(cells_in_ball(ladder, level, -t, opt.closed, opt.budget).size()));
    });
    for (std::size_t k = 0; k < vals.size(); ++k)
        g.set(k / cols, static_cast<std::int64_t>(k % cols), vals[k], vals[k], vals[k]);
    return g;
}

/// Covering-number g on a finite pointed space:
/// log n(e^{-(t+h)}, B(base, e^{-t})).
inline GFunction g_finite(const PointedSpace& X, const GGrid& grid, const CountOptions& opt = {}) {
    GFunction g(grid, "finite", X.space.label(X.base));
    const std::size_t cols = static_cast<std::size_t>(grid.m_max + 1);
    std::vector<CountBracket> out(grid.rows.size() * cols);
    parallel_for(grid.rows.size() * cols, [&](std::size_t k) {
        const std::size_t r = k / cols;
        const auto m = static_cast<std::int64_t>(k % cols);
        const double t = grid.t(grid.rows[r]);
        auto B = ball(X.space, X.base, std::exp(-t), opt.kind);
        out[k] = covering_number(X.space, B, std::exp(-(t + grid.h(m))), opt);
    });
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& b = out[k];
        g.set(k / cols, static_cast<std::int64_t>(k % cols), std::log(b.midpoint()),
              std::log(static_cast<double>(b.lower)), std::log(static_cast<double>(b.upper)));
    }
    return g;
}

}  // namespace tandim
