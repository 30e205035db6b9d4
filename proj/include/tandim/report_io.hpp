#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandim/dimensions.hpp"
#include "tandim/gfunction.hpp"
#include "tandim/tangent.hpp"

#ifndef TANDIM_VERSION
#define TANDIM_VERSION "0.0.0"
#endif

namespace tandim {

inline constexpr const char* version = TANDIM_VERSION;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Parameters of one CLI run. Everything that can change a numerical
/// payload belongs in `params`.
struct RunConfig {
    std::string command;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::uint64_t budget = 0;

    nlohmann::json canonical() const {
        return {{"command", command}, {"params", params}, {"seed", seed}, {"budget", budget}};
    }
    std::string hash() const { return hex64(fnv1a(canonical().dump())); }
};

/// JSON artifact: provenance header plus the result payload.
inline nlohmann::json envelope(const RunConfig& cfg, nlohmann::json result) {
    return {{"tool", "tandim"},
            {"version", version},
            {"config_hash", cfg.hash()},
            {"seed", cfg.seed},
            {"budget", cfg.budget},
            {"config", cfg.canonical()},
            {"result", std::move(result)}};
}

/// Comment lines prepended to CSV artifacts.
inline std::string csv_preamble(const RunConfig& cfg) {
    return "# tandim " + std::string(version) + " config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) +
           " budget=" + std::to_string(cfg.budget) + "\n";
}

inline std::string svg_comment(const RunConfig& cfg) {
    return "<!-- tandim " + std::string(version) + " config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) +
           " -->\n";
}

namespace svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

struct Frame {
    double x0, x1, y0, y1;
    double W = 640, H = 420, L = 60, R = 20, T = 30, B = 50;
    double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
    double py(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

inline void axes(std::ostream& os, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl,
                 bool log_x, bool log_y) {
    os << "<rect x=\"0\" y=\"0\" width=\"" << f.W << "\" height=\"" << f.H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << f.W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << f.L << "\" y1=\"" << f.H - f.B << "\" x2=\"" << f.W - f.R << "\" y2=\"" << f.H - f.B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << f.L << "\" y1=\"" << f.T << "\" x2=\"" << f.L << "\" y2=\"" << f.H - f.B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double x = f.x0 + (f.x1 - f.x0) * k / 4, y = f.y0 + (f.y1 - f.y0) * k / 4;
        os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << f.H - f.B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << num(log_x ? std::exp(x) : x) << "</text>\n";
        os << "<text x=\"" << f.L - 6 << "\" y=\"" << num(f.py(y) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
           << num(log_y ? std::exp(y) : y) << "</text>\n";
    }
    os << "<text x=\"" << f.W / 2 << "\" y=\"" << f.H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xl)
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << f.H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << f.H / 2 << ")\">" << escape(yl) << "</text>\n";
}

inline const char* palette(std::size_t i) {
    static const char* c[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return c[i % 8];
}

}  // namespace svg

/// Log-log plot of g(t,h)/h against h for up to `max_rows` evenly spaced
/// rows, with the four estimates as dashed horizontals when given.
inline std::string svg_ratio_plot(const GFunction& g, const std::string& title, const DimensionReport* rep = nullptr,
                                  std::size_t max_rows = 8) {
    const auto& grid = g.grid();
    std::vector<std::size_t> rows;
    const std::size_t n = g.nrows(), step = std::max<std::size_t>(1, (n + max_rows - 1) / max_rows);
    for (std::size_t r = 0; r < n; r += step) rows.push_back(r);
    if (!rows.empty() && rows.back() != n - 1) rows.push_back(n - 1);

    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    std::vector<std::vector<std::pair<double, double>>> lines;
    for (auto r : rows) {
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t m = 1; m <= g.m_max(); ++m) {
            const auto i = grid.rows[r];
            if (!g.has(i, m)) continue;
            const double v = g(i, m) / grid.h(m);
            if (v <= 0) continue;
            pts.emplace_back(std::log(grid.h(m)), std::log(v));
            ymin = std::min(ymin, std::log(v));
            ymax = std::max(ymax, std::log(v));
        }
        lines.push_back(std::move(pts));
    }
    if (rep)
        for (const auto* e : {&rep->delta_lower, &rep->d_lower, &rep->d_upper, &rep->delta_upper})
            if (e->value > 0) ymin = std::min(ymin, std::log(e->value)), ymax = std::max(ymax, std::log(e->value));
    if (!std::isfinite(ymin)) ymin = -1, ymax = 1;
    if (ymax - ymin < 1e-6) ymin -= 0.1, ymax += 0.1;
    const double pad = 0.05 * (ymax - ymin);
    svg::Frame f{std::log(grid.h(1)), std::log(grid.h(std::max<std::int64_t>(g.m_max(), 2))), ymin - pad, ymax + pad};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.W << "\" height=\"" << f.H << "\">\n";
    svg::axes(os, f, title, "h", "g(t,h) / h", true, true);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << svg::palette(k) << "\" points=\"";
        for (auto [x, y] : lines[k]) os << svg::num(f.px(x)) << ',' << svg::num(f.py(y)) << ' ';
        os << "\"><title>t = " << svg::num(grid.t(grid.rows[rows[k]])) << "</title></polyline>\n";
    }
    if (rep) {
        const std::pair<const WindowedEstimate*, const char*> est[] = {
            {&rep->delta_lower, "delta_lower"}, {&rep->d_lower, "d_lower"}, {&rep->d_upper, "d_upper"},
            {&rep->delta_upper, "delta_upper"}};
        for (auto [e, name] : est) {
            if (e->value <= 0) continue;
            const double y = f.py(std::log(e->value));
            os << "<line x1=\"" << f.L << "\" y1=\"" << svg::num(y) << "\" x2=\"" << f.W - f.R << "\" y2=\"" << svg::num(y)
               << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
            os << "<text x=\"" << f.W - f.R - 2 << "\" y=\"" << svg::num(y - 3) << "\" text-anchor=\"end\" font-size=\"10\">"
               << name << " " << svg::num(e->value) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

/// Single-linkage dendrogram over the pairwise pointed-GH upper bounds.
/// Leaves are labelled by snapshot scale.
inline std::string svg_dendrogram(const ClusterResult& c, const std::vector<double>& log_ts, const std::string& title) {
    const std::size_t n = log_ts.size();
    struct Node {
        double height, x;
        std::vector<std::size_t> leaves;
    };
    std::vector<Node> nodes;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        nodes.push_back({0.0, 0.0, {i}});
        active.push_back(i);
    }
    struct Merge {
        std::size_t a, b, into;
    };
    std::vector<Merge> merges;
    auto link = [&](const Node& A, const Node& B) {
        double d = std::numeric_limits<double>::infinity();
        for (auto i : A.leaves)
            for (auto j : B.leaves) d = std::min(d, c.pairwise[i * n + j].upper);
        return d;
    };
    while (active.size() > 1) {
        std::size_t ba = 0, bb = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double d = link(nodes[active[a]], nodes[active[b]]);
                if (d < best) best = d, ba = a, bb = b;
            }
        Node m{best, 0.0, nodes[active[ba]].leaves};
        m.leaves.insert(m.leaves.end(), nodes[active[bb]].leaves.begin(), nodes[active[bb]].leaves.end());
        nodes.push_back(m);
        merges.push_back({active[ba], active[bb], nodes.size() - 1});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bb));
        active[ba] = nodes.size() - 1;
    }
    // leaf order from the final tree
    std::vector<std::size_t> order = n ? nodes.back().leaves : std::vector<std::size_t>{};
    for (std::size_t k = 0; k < order.size(); ++k) nodes[order[k]].x = static_cast<double>(k);
    for (const auto& m : merges) nodes[m.into].x = (nodes[m.a].x + nodes[m.b].x) / 2;

    double top = c.threshold;
    for (const auto& m : merges) top = std::max(top, nodes[m.into].height);
    if (top <= 0) top = 1;
    svg::Frame f{-0.5, std::max(0.5, n - 0.5), 0.0, top * 1.05};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.W << "\" height=\"" << f.H << "\">\n";
    svg::axes(os, f, title, "snapshot", "pointed GH upper bound", false, false);
    for (const auto& m : merges) {
        const auto &A = nodes[m.a], &B = nodes[m.b], &M = nodes[m.into];
        os << "<polyline fill=\"none\" stroke=\"black\" points=\"" << svg::num(f.px(A.x)) << ',' << svg::num(f.py(A.height))
           << ' ' << svg::num(f.px(A.x)) << ',' << svg::num(f.py(M.height)) << ' ' << svg::num(f.px(B.x)) << ','
           << svg::num(f.py(M.height)) << ' ' << svg::num(f.px(B.x)) << ',' << svg::num(f.py(B.height)) << "\"/>\n";
    }
    const double y = f.py(c.threshold);
    os << "<line x1=\"" << f.L << "\" y1=\"" << svg::num(y) << "\" x2=\"" << f.W - f.R << "\" y2=\"" << svg::num(y)
       << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < order.size(); ++k)
        os << "<text x=\"" << svg::num(f.px(static_cast<double>(k))) << "\" y=\"" << f.H - f.B + 28
           << "\" text-anchor=\"middle\" font-size=\"9\">" << svg::num(log_ts[order[k]]) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

inline nlohmann::json to_json(const DistanceBracket& b) { return {{"lower", b.lower}, {"upper", b.upper}, {"exact", b.exact}}; }

inline nlohmann::json to_json(const ClusterResult& c) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& t : c.candidates)
        cands.push_back({{"members", t.members},
                         {"log_ts", t.log_ts},
                         {"points", t.representative.space.space.size()},
                         {"representative_log_t", t.representative.log_t},
                         {"cluster_radius", t.cluster_radius},
                         {"approximate", t.approximate},
                         {"limit_point", t.limit_point}});
    nlohmann::json pw = nlohmann::json::array();
    for (const auto& b : c.pairwise) pw.push_back({b.lower, b.upper});
    return {{"R", c.R}, {"threshold", c.threshold}, {"separation_lower", c.separation_lower},
            {"candidates", cands}, {"pairwise", pw}};
}

}  // namespace tandim
