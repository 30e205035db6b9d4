#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandim/errors.hpp"

namespace tandim {

enum class family { sierpinski, chessboard };

inline std::string to_string(family f) { return f == family::sierpinski ? "sierpinski" : "chessboard"; }

inline family family_from_string(const std::string& s) {
    if (s == "sierpinski") return family::sierpinski;
    if (s == "chessboard") return family::chessboard;
    throw input_error("unknown fractal family '" + s + "' (expected sierpinski or chessboard)");
}

/// q_j of the modified Sierpinski gasket: 2 on (k-1)(2k-1) < j <= (2k-1)k,
/// 3 on k(2k-1) < j <= k(2k+1).
inline int schedule_sierpinski(std::int64_t j) {
    require(j >= 1, "schedule index must be >= 1");
    for (std::int64_t k = 1;; ++k) {
        if (j <= (2 * k - 1) * k) return 2;
        if (j <= k * (2 * k + 1)) return 3;
    }
}

/// q_j of the modified Vicsek set: 1 on k(2k-1) < j <= k(2k+1),
/// 2 on k(2k+1) < j <= (2k+1)(k+1), k >= 0.
inline int schedule_vicsek(std::int64_t j) {
    require(j >= 1, "schedule index must be >= 1");
    for (std::int64_t k = 0;; ++k) {
        if (j <= k * (2 * k + 1)) return 1;
        if (j <= (2 * k + 1) * (k + 1)) return 2;
    }
}

/// Number of kept children when a cell is subdivided with parameter q.
inline std::int64_t child_count(family f, int q) {
    if (f == family::sierpinski) {
        if (q < 2) throw input_error("sierpinski subdivision needs q >= 2, got " + std::to_string(q));
        return std::int64_t{q} * (q + 1) / 2;
    }
    if (q < 1) throw input_error("chessboard subdivision needs q >= 1, got " + std::to_string(q));
    return 2 * std::int64_t{q} * q + 2 * q + 1;
}

/// Linear subdivision factor s: q for triangles, 2q+1 for squares.
inline std::int64_t side_factor(family f, int q) {
    child_count(f, q);
    return f == family::sierpinski ? q : 2 * std::int64_t{q} + 1;
}

/// Level-indexed subdivision parameters.
///
/// Named rules: "sierpinski-23", "vicsek-12", and "vicsek-12-caption" (the
/// formula schedule with a leading 1). An explicit list is continued by
/// repeating its last entry.
class Schedule {
public:
    Schedule() = default;

    static Schedule named(const std::string& name) {
        if (name != "sierpinski-23" && name != "vicsek-12" && name != "vicsek-12-caption")
            throw input_error("unknown named schedule '" + name + "'");
        Schedule s;
        s.name_ = name;
        return s;
    }

    static Schedule explicit_values(std::vector<int> v) {
        require(!v.empty(), "explicit schedule must be nonempty");
        for (int q : v) require(q >= 1, "schedule values must be positive integers");
        Schedule s;
        s.values_ = std::move(v);
        return s;
    }

    static Schedule constant(int q) { return explicit_values({q}); }

    bool is_named() const noexcept { return !name_.empty(); }
    const std::string& name() const noexcept { return name_; }
    const std::vector<int>& values() const noexcept { return values_; }

    /// True when every level uses the same q.
    bool is_constant() const noexcept {
        return !is_named() && std::all_of(values_.begin(), values_.end(), [&](int q) { return q == values_[0]; });
    }

    int operator()(std::int64_t j) const {
        require(j >= 1, "schedule index must be >= 1");
        if (name_ == "sierpinski-23") return schedule_sierpinski(j);
        if (name_ == "vicsek-12") return schedule_vicsek(j);
        if (name_ == "vicsek-12-caption") return j == 1 ? 1 : schedule_vicsek(j - 1);
        const auto n = static_cast<std::int64_t>(values_.size());
        return values_[static_cast<std::size_t>(std::min(j, n) - 1)];
    }

    /// q_1..q_depth
    std::vector<int> prefix(std::int64_t depth) const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(depth));
        if (name_ == "sierpinski-23" || name_ == "vicsek-12" || name_ == "vicsek-12-caption") {
            // run-wise expansion; per-index evaluation is quadratic at large depth
            if (name_ == "vicsek-12-caption" && depth > 0) out.push_back(1);
            const bool sier = name_ == "sierpinski-23";
            for (std::int64_t k = sier ? 1 : 0; static_cast<std::int64_t>(out.size()) < depth; ++k) {
                const std::int64_t len1 = sier ? 2 * k - 1 : 2 * k, len2 = sier ? 2 * k : 2 * k + 1;
                const int v1 = sier ? 2 : 1, v2 = sier ? 3 : 2;
                for (std::int64_t i = 0; i < len1 && static_cast<std::int64_t>(out.size()) < depth; ++i) out.push_back(v1);
                for (std::int64_t i = 0; i < len2 && static_cast<std::int64_t>(out.size()) < depth; ++i) out.push_back(v2);
            }
            return out;
        }
        for (std::int64_t j = 1; j <= depth; ++j) out.push_back((*this)(j));
        return out;
    }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::string name_;
    std::vector<int> values_;
};

/// Declarative description of a translation fractal.
struct FractalSpec {
    family fam = family::sierpinski;
    Schedule schedule = Schedule::constant(2);
    std::int64_t depth = 1;

    void validate() const {
        if (depth < 1) throw input_error("depth must be >= 1");
        const int min_q = fam == family::sierpinski ? 2 : 1;
        if (!schedule.is_named()) {
            for (int q : schedule.values())
                if (q < min_q)
                    throw input_error(to_string(fam) + " schedule values must be >= " + std::to_string(min_q));
        } else if (fam == family::sierpinski && schedule.name() != "sierpinski-23") {
            throw input_error("schedule '" + schedule.name() + "' contains q = 1, invalid for sierpinski");
        }
    }

    friend bool operator==(const FractalSpec&, const FractalSpec&) = default;
};

inline nlohmann::json to_json(const Schedule& s) {
    if (s.is_named()) return {{"named", s.name()}};
    return {{"explicit", s.values()}};
}

inline nlohmann::json to_json(const FractalSpec& f) {
    return {{"family", to_string(f.fam)}, {"schedule", to_json(f.schedule)}, {"depth", f.depth}};
}

inline FractalSpec fractal_spec_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw input_error("fractal spec must be a JSON object");
        FractalSpec f;
        f.fam = family_from_string(j.at("family").get<std::string>());
        const auto& s = j.at("schedule");
        if (s.contains("named"))
            f.schedule = Schedule::named(s.at("named").get<std::string>());
        else if (s.contains("explicit"))
            f.schedule = Schedule::explicit_values(s.at("explicit").get<std::vector<int>>());
        else
            throw input_error("schedule needs \"named\" or \"explicit\"");
        f.depth = j.at("depth").get<std::int64_t>();
        f.validate();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed fractal spec: ") + e.what());
    }
}

/// Per-level data of a spec: q_j, s_j, a_j, and prefix logs
/// log Q_j = sum log s_i, log A_j = sum log a_i.
///
/// Prefix logs are evaluated from per-value occurrence counts, so each
/// entry carries only the rounding of a handful of products.
class ScaleLadder {
public:
    ScaleLadder() = default;

    explicit ScaleLadder(const FractalSpec& spec) : fam_(spec.fam) {
        spec.validate();
        q_ = spec.schedule.prefix(spec.depth);
        for (int q : q_)
            if (std::find(distinct_.begin(), distinct_.end(), q) == distinct_.end()) distinct_.push_back(q);
        std::sort(distinct_.begin(), distinct_.end());
        const std::size_t V = distinct_.size(), D = q_.size();
        log_s_.resize(V);
        log_a_.resize(V);
        for (std::size_t v = 0; v < V; ++v) {
            log_s_[v] = std::log(static_cast<double>(side_factor(fam_, distinct_[v])));
            log_a_[v] = std::log(static_cast<double>(child_count(fam_, distinct_[v])));
        }
        counts_.assign((D + 1) * V, 0);
        for (std::size_t j = 1; j <= D; ++j) {
            std::copy_n(counts_.begin() + (j - 1) * V, V, counts_.begin() + j * V);
            counts_[j * V + value_index(q_[j - 1])] += 1;
        }
        logQ_.resize(D + 1);
        logA_.resize(D + 1);
        for (std::size_t j = 0; j <= D; ++j) {
            double lq = 0.0, la = 0.0;
            for (std::size_t v = 0; v < V; ++v) {
                lq += static_cast<double>(counts_[j * V + v]) * log_s_[v];
                la += static_cast<double>(counts_[j * V + v]) * log_a_[v];
            }
            logQ_[j] = lq;
            logA_[j] = la;
        }
    }

    family fam() const noexcept { return fam_; }
    std::int64_t depth() const noexcept { return static_cast<std::int64_t>(q_.size()); }
    int q(std::int64_t j) const { return q_.at(static_cast<std::size_t>(j - 1)); }
    std::int64_t s(std::int64_t j) const { return side_factor(fam_, q(j)); }
    std::int64_t a(std::int64_t j) const { return child_count(fam_, q(j)); }
    const std::vector<int>& qs() const noexcept { return q_; }

    double logQ(std::int64_t j) const { return logQ_.at(static_cast<std::size_t>(j)); }
    double logA(std::int64_t j) const { return logA_.at(static_cast<std::size_t>(j)); }
    const std::vector<double>& logQs() const noexcept { return logQ_; }

    /// sum_{i=j+1}^{j+m} log a_i, evaluated from count differences.
    double log_descendants(std::int64_t j, std::int64_t m) const {
        return count_diff_sum(j, j + m, log_a_);
    }
    /// log(Q_{j+m}/Q_j)
    double log_ratio(std::int64_t j, std::int64_t m) const { return count_diff_sum(j, j + m, log_s_); }

    /// Level whose log Q is nearest to `logscale` (ties to the coarser level).
    std::int64_t nearest_level(double logscale) const {
        auto it = std::lower_bound(logQ_.begin(), logQ_.end(), logscale);
        if (it == logQ_.end()) return depth();
        const auto hi = static_cast<std::int64_t>(it - logQ_.begin());
        if (hi == 0) return 0;
        return (logscale - logQ_[hi - 1] <= logQ_[hi] - logscale) ? hi - 1 : hi;
    }

private:
    std::size_t value_index(int q) const {
        return static_cast<std::size_t>(std::lower_bound(distinct_.begin(), distinct_.end(), q) - distinct_.begin());
    }

    double count_diff_sum(std::int64_t j0, std::int64_t j1, const std::vector<double>& w) const {
        if (j0 < 0 || j1 < j0 || j1 > depth())
            throw input_error("level range [" + std::to_string(j0) + "," + std::to_string(j1) + "] outside depth " +
                              std::to_string(depth()));
        const std::size_t V = distinct_.size();
        double acc = 0.0;
        for (std::size_t v = 0; v < V; ++v)
            acc += static_cast<double>(counts_[static_cast<std::size_t>(j1) * V + v] -
                                       counts_[static_cast<std::size_t>(j0) * V + v]) *
                   w[v];
        return acc;
    }

    family fam_ = family::sierpinski;
    std::vector<int> q_;
    std::vector<int> distinct_;
    std::vector<double> log_s_, log_a_;
    std::vector<std::int64_t> counts_;
    std::vector<double> logQ_, logA_;
};

}  // namespace tandim
