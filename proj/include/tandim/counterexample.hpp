#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "tandim/errors.hpp"

namespace tandim {

using vec3 = std::array<double, 3>;

inline double dist3(const vec3& a, const vec3& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

/// log a^k_n = -((n+k)(n+k+1)/2 + k)^2, exact as an integer.
inline std::int64_t counterexample_log_radius_int(std::int64_t k, std::int64_t n) {
    require(k >= 1 && n >= 1, "shell indices k, n must be >= 1");
    const std::int64_t m = n + k;
    const std::int64_t e = m * (m + 1) / 2 + k;
    if (e > 3'000'000'000LL) throw range_error("shell exponent too large for exact 64-bit evaluation");
    return -e * e;
}

inline double counterexample_log_radius(std::int64_t k, std::int64_t n) {
    return static_cast<double>(counterexample_log_radius_int(k, n));
}

/// North pole; the caps S_k accumulate here.
inline constexpr vec3 v_infinity{0.0, 0.0, 1.0};

/// Polar angle of the center of cap k.
inline double cap_angle(int k) { return 3.0 / k; }

/// S_k: a k x k grid in the tangent plane at the cap center, projected to the
/// unit sphere. Spacing starts at 1/k^3 and is inflated until every pair of
/// points is at least 1/k^3 apart.
inline std::vector<vec3> make_cap(int k) {
    require(k >= 1, "cap index must be >= 1");
    const double th = cap_angle(k);
    const vec3 c{std::sin(th), 0.0, std::cos(th)};
    const vec3 e1{std::cos(th), 0.0, -std::sin(th)};  // along the meridian
    const vec3 e2{0.0, 1.0, 0.0};
    const double target = 1.0 / (double(k) * k * k);
    double spacing = target;
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<vec3> pts;
        pts.reserve(static_cast<std::size_t>(k) * k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double x = (i - 0.5 * (k - 1)) * spacing, y = (j - 0.5 * (k - 1)) * spacing;
                vec3 p{c[0] + x * e1[0] + y * e2[0], c[1] + x * e1[1] + y * e2[1], c[2] + x * e1[2] + y * e2[2]};
                const double nrm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                for (double& z : p) z /= nrm;
                pts.push_back(p);
            }
        double sep = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) sep = std::min(sep, dist3(pts[a], pts[b]));
        if (sep >= target) return pts;
        spacing *= 1.0 + 1e-6 + (target - sep) / target;
    }
    throw internal_error("could not realize cap S_" + std::to_string(k) + " with separation 1/k^3");
}

/// Numerical re-verification of one cap against its neighbours.
struct CapReport {
    int k = 0;
    std::size_t count = 0;
    double min_separation = 0;
    double diameter = 0;
    double gap_to_next = 0;          // min distance S_k to S_{k+1}
    double hausdorff_to_limit = 0;   // max distance from S_k to v_infinity
    bool ok = false;
};

inline CapReport verify_cap(int k) {
    auto S = make_cap(k), T = make_cap(k + 1);
    CapReport r;
    r.k = k;
    r.count = S.size();
    r.min_separation = S.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t a = 0; a < S.size(); ++a)
        for (std::size_t b = a + 1; b < S.size(); ++b) {
            const double d = dist3(S[a], S[b]);
            r.min_separation = std::min(r.min_separation, d);
            r.diameter = std::max(r.diameter, d);
        }
    r.gap_to_next = std::numeric_limits<double>::infinity();
    for (auto& p : S)
        for (auto& q : T) r.gap_to_next = std::min(r.gap_to_next, dist3(p, q));
    for (auto& p : S) r.hausdorff_to_limit = std::max(r.hausdorff_to_limit, dist3(p, v_infinity));
    const double k3 = 1.0 / (double(k) * k * k);
    r.ok = r.count == static_cast<std::size_t>(k) * k && (k == 1 || r.min_separation >= k3) &&
           r.diameter <= std::sqrt(2.0) / (double(k) * k) && r.gap_to_next >= k3;
    return r;
}

struct CloudEntry {
    int k = 0;
    int n = 0;
    int index = 0;  // position in S_k
    vec3 v{};
    double log_radius = 0;
};

/// F = {0} u {a^k_n v : v in S_k} truncated to k <= K, n <= N. Radii are
/// stored only as logarithms.
class LogRadiusCloud {
public:
    LogRadiusCloud() = default;
    LogRadiusCloud(int K, int N) : K_(K), N_(N) {
        require(K >= 1 && N >= 1, "K and N must be >= 1");
        for (int k = 1; k <= K; ++k) {
            auto S = make_cap(k);
            for (int n = 1; n <= N; ++n) {
                const double lr = counterexample_log_radius(k, n);
                for (std::size_t i = 0; i < S.size(); ++i)
                    entries_.push_back({k, n, static_cast<int>(i), S[i], lr});
            }
        }
        std::stable_sort(entries_.begin(), entries_.end(),
                         [](const CloudEntry& a, const CloudEntry& b) { return a.log_radius > b.log_radius; });
    }

    int K() const noexcept { return K_; }
    int N() const noexcept { return N_; }
    const std::vector<CloudEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// CSV: k,n,logRadius,vx,vy,vz
    void write_csv(std::ostream& os) const {
        os << "k,n,logRadius,vx,vy,vz\n";
        os.precision(17);
        for (const auto& e : entries_)
            os << e.k << ',' << e.n << ',' << e.log_radius << ',' << e.v[0] << ',' << e.v[1] << ',' << e.v[2] << '\n';
    }

private:
    int K_ = 0, N_ = 0;
    std::vector<CloudEntry> entries_;  // by decreasing radius
};

inline LogRadiusCloud counterexample_points(int K, int N) { return LogRadiusCloud(K, N); }

}  // namespace tandim
