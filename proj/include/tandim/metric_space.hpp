#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandim/errors.hpp"

namespace tandim {

using point_id = std::size_t;
using point_set = std::vector<point_id>;

enum class ball_kind { open, closed };
enum class center_policy { in_subset, ambient };

/// Relative tolerance applied to every distance comparison.
inline constexpr double distance_rel_tol = 1e-12;

/// Finite metric space stored as a dense row-major distance table.
///
/// Optionally carries Euclidean coordinates of an isometric embedding; they
/// are used only as correspondence hints and for export, never to recompute
/// distances.
class FiniteMetricSpace {
public:
    FiniteMetricSpace() = default;

    /// Builds a validated space; throws input_error naming the first
    /// violating entry or triple.
    FiniteMetricSpace(std::vector<std::string> labels, std::vector<double> dist)
        : labels_(std::move(labels)), dist_(std::move(dist)) {
        require(dist_.size() == labels_.size() * labels_.size(),
                "distance table must hold n*n entries for n labels");
        refresh_scale();
        if (auto v = violation()) throw input_error(*v);
    }

    /// Euclidean distances between the given points (row-major, `dim` coords each).
    /// Trusted construction: no axiom check beyond finiteness.
    static FiniteMetricSpace from_points(std::vector<std::string> labels, std::vector<double> coords,
                                         int dim) {
        require(dim > 0 && coords.size() == labels.size() * static_cast<std::size_t>(dim),
                "coordinate array does not match label count");
        FiniteMetricSpace s;
        const std::size_t n = labels.size();
        s.labels_ = std::move(labels);
        s.dist_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double d = coords[i * dim + k] - coords[j * dim + k];
                    acc += d * d;
                }
                s.dist_[i * n + j] = s.dist_[j * n + i] = std::sqrt(acc);
            }
        }
        s.coords_ = std::move(coords);
        s.dim_ = dim;
        s.refresh_scale();
        return s;
    }

    /// Trusted construction from a table already known to be a metric.
    static FiniteMetricSpace unchecked(std::vector<std::string> labels, std::vector<double> dist) {
        FiniteMetricSpace s;
        s.labels_ = std::move(labels);
        s.dist_ = std::move(dist);
        s.refresh_scale();
        return s;
    }

    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    double operator()(point_id i, point_id j) const noexcept { return dist_[i * size() + j]; }
    std::span<const double> row(point_id i) const noexcept {
        return {dist_.data() + i * size(), size()};
    }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(point_id i) const { return labels_.at(i); }
    const std::vector<double>& table() const noexcept { return dist_; }

    point_id index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw input_error("unknown point identifier '" + label + "'");
        return static_cast<point_id>(it - labels_.begin());
    }

    void check_point(point_id i) const {
        if (i >= size())
            throw input_error("unknown point identifier #" + std::to_string(i) + " (space has " +
                              std::to_string(size()) + " points)");
    }

    double max_distance() const noexcept { return max_entry_; }
    /// Absolute comparison slack: 1e-12 times the largest table entry.
    double tolerance() const noexcept { return distance_rel_tol * max_entry_; }

    bool has_embedding() const noexcept { return dim_ > 0; }
    int embedding_dim() const noexcept { return dim_; }
    std::span<const double> coords(point_id i) const noexcept {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    const std::vector<double>& all_coords() const noexcept { return coords_; }

    /// Subspace on the given points, in the given order.
    FiniteMetricSpace subspace(std::span<const point_id> pts) const {
        FiniteMetricSpace s;
        const std::size_t m = pts.size();
        s.labels_.reserve(m);
        s.dist_.assign(m * m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            check_point(pts[a]);
            s.labels_.push_back(labels_[pts[a]]);
            for (std::size_t b = 0; b < m; ++b) s.dist_[a * m + b] = (*this)(pts[a], pts[b]);
        }
        if (has_embedding()) {
            s.dim_ = dim_;
            for (point_id p : pts) {
                auto c = coords(p);
                s.coords_.insert(s.coords_.end(), c.begin(), c.end());
            }
        }
        s.refresh_scale();
        return s;
    }

    /// First metric-axiom violation, if any (within the table tolerance).
    std::optional<std::string> violation() const {
        const std::size_t n = size();
        const double tol = tolerance();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double d = (*this)(i, j);
                if (!std::isfinite(d) || d < 0.0)
                    return "distance (" + labels_[i] + "," + labels_[j] + ") is negative or not finite";
                if (i == j && d != 0.0) return "distance (" + labels_[i] + "," + labels_[i] + ") is not zero";
                if (std::abs(d - (*this)(j, i)) > tol)
                    return "distance table is not symmetric at (" + labels_[i] + "," + labels_[j] + ")";
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    if ((*this)(i, k) > (*this)(i, j) + (*this)(j, k) + tol) {
                        std::ostringstream os;
                        os << "triangle inequality violated by triple (" << labels_[i] << "," << labels_[j]
                           << "," << labels_[k] << "): d(" << labels_[i] << "," << labels_[k]
                           << ")=" << (*this)(i, k) << " > " << (*this)(i, j) + (*this)(j, k);
                        return os.str();
                    }
        return std::nullopt;
    }

    FiniteMetricSpace scaled(double t) const {
        FiniteMetricSpace s = *this;
        for (double& d : s.dist_) d *= t;
        for (double& c : s.coords_) c *= t;
        s.refresh_scale();
        return s;
    }

private:
    void refresh_scale() {
        max_entry_ = 0.0;
        for (double d : dist_)
            if (std::isfinite(d)) max_entry_ = std::max(max_entry_, d);
    }

    std::vector<std::string> labels_;
    std::vector<double> dist_;
    std::vector<double> coords_;
    int dim_ = 0;
    double max_entry_ = 0.0;
};

/// A metric space with a distinguished base point.
struct PointedSpace {
    FiniteMetricSpace space;
    point_id base = 0;

    PointedSpace() = default;
    PointedSpace(FiniteMetricSpace s, point_id b) : space(std::move(s)), base(b) { space.check_point(base); }
};

inline bool in_ball(double d, double r, ball_kind kind, double tol) noexcept {
    return kind == ball_kind::open ? d < r - tol : d <= r + tol;
}

/// Points of `space` within distance r of `center` (open: d < r, closed: d <= r).
inline point_set ball(const FiniteMetricSpace& space, point_id center, double r, ball_kind kind) {
    space.check_point(center);
    require(r > 0.0, "ball radius must be positive");
    point_set out;
    const double tol = space.tolerance();
    auto row = space.row(center);
    for (point_id y = 0; y < space.size(); ++y)
        if (in_ball(row[y], r, kind, tol)) out.push_back(y);
    return out;
}

/// Ball restricted to a subset E of the space.
inline point_set ball_within(const FiniteMetricSpace& space, std::span<const point_id> subset, point_id center,
                             double r, ball_kind kind) {
    space.check_point(center);
    require(r > 0.0, "ball radius must be positive");
    point_set out;
    const double tol = space.tolerance();
    for (point_id y : subset)
        if (in_ball(space(center, y), r, kind, tol)) out.push_back(y);
    return out;
}

/// Same points and labels with every distance multiplied by t.
inline FiniteMetricSpace rescale(const FiniteMetricSpace& space, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw input_error("rescale factor must be a positive finite number");
    return space.scaled(t);
}

inline PointedSpace rescale(const PointedSpace& p, double t) { return PointedSpace(rescale(p.space, t), p.base); }

inline point_set all_points(const FiniteMetricSpace& space) {
    point_set v(space.size());
    for (point_id i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

/// X*Y with the max metric; point (i,j) has index i*|Y| + j and label "xi|yj".
inline FiniteMetricSpace product_space(const FiniteMetricSpace& X, const FiniteMetricSpace& Y) {
    const std::size_t n = X.size(), m = Y.size(), N = n * m;
    std::vector<std::string> labels;
    labels.reserve(N);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) labels.push_back(X.label(i) + "|" + Y.label(j));
    std::vector<double> dist(N * N);
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = 0; b < N; ++b) dist[a * N + b] = std::max(X(a / m, b / m), Y(a % m, b % m));
    return FiniteMetricSpace::unchecked(std::move(labels), std::move(dist));
}

// JSON: {"labels": [...], "dist": [n*n row-major]} with optional "coords"/"dim".

inline nlohmann::json to_json(const FiniteMetricSpace& s) {
    nlohmann::json j;
    j["labels"] = s.labels();
    j["dist"] = s.table();
    if (s.has_embedding()) {
        j["dim"] = s.embedding_dim();
        j["coords"] = s.all_coords();
    }
    return j;
}

inline FiniteMetricSpace metric_space_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("labels") || !j.contains("dist"))
        throw input_error("metric space JSON needs \"labels\" and \"dist\"");
    std::vector<std::string> labels;
    std::vector<double> dist;
    try {
        labels = j.at("labels").get<std::vector<std::string>>();
        dist = j.at("dist").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed metric space JSON: ") + e.what());
    }
    if (labels.empty()) throw input_error("metric space must contain at least one point");
    FiniteMetricSpace s(std::move(labels), std::move(dist));
    return s;
}

}  // namespace tandim
