#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "tandim/tandim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tandim;

namespace {

struct Options {
    std::string spec;
    std::optional<std::int64_t> depth;
    std::string backend;
    double kappa = std::log(2.0);
    std::int64_t t_max = 0;
    std::int64_t h_max = 0;
    std::int64_t window = 0;
    double radius = 1.0;
    double threshold = -1;
    std::uint64_t budget = 0;
    std::uint64_t seed = 1;
    int samples = 0;
    std::string out;
    std::string format = "json";
    std::vector<std::string> suites;
};

struct FiniteInput {
    PointedSpace space;
    std::string name;
};

struct CloudInput {
    int K = 3, N = 2;
};

using Input = std::variant<FractalSpec, FiniteInput, CloudInput>;

// ---- input parsing ----------------------------------------------------------

FractalSpec named_fractal(const std::string& s, std::int64_t depth) {
    if (s == "sierpinski" || s == "sierpinski-23") return {family::sierpinski, Schedule::named("sierpinski-23"), depth};
    if (s == "vicsek" || s == "vicsek-12") return {family::chessboard, Schedule::named("vicsek-12"), depth};
    if (s == "vicsek-caption" || s == "vicsek-12-caption")
        return {family::chessboard, Schedule::named("vicsek-12-caption"), depth};
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw input_error("unknown spec '" + s + "'");
    std::vector<int> qs;
    std::stringstream ss(s.substr(colon + 1));
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            qs.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw input_error("bad schedule value '" + tok + "' in spec '" + s + "'");
        }
    }
    return {family_from_string(s.substr(0, colon)), Schedule::explicit_values(qs), depth};
}

Input input_from_json(const json& j, const Options& o) {
    if (!j.is_object()) throw input_error("spec JSON must be an object");
    if (j.contains("counterexample")) {
        const auto& c = j.at("counterexample");
        CloudInput in{c.value("K", 3), c.value("N", 2)};
        require(in.K >= 1 && in.N >= 1, "counterexample needs K >= 1 and N >= 1");
        return in;
    }
    if (j.contains("family")) {
        json f = j;
        if (o.depth) f["depth"] = *o.depth;
        if (!f.contains("depth")) f["depth"] = 1;
        return fractal_spec_from_json(f);
    }
    const auto base_of = [&](const FiniteMetricSpace& X) -> point_id {
        if (!j.contains("base")) return 0;
        const auto& b = j.at("base");
        if (b.is_number_integer()) return b.get<point_id>();
        const auto lab = b.get<std::string>();
        for (point_id i = 0; i < X.size(); ++i)
            if (X.label(i) == lab) return i;
        throw input_error("base label '" + lab + "' not found");
    };
    if (j.contains("points")) {
        const auto pts = j.at("points").get<std::vector<std::vector<double>>>();
        if (pts.empty()) throw input_error("input has no points");
        const std::size_t dim = pts.front().size();
        if (dim == 0) throw input_error("points need at least one coordinate");
        std::vector<std::string> labels;
        std::vector<double> coords;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].size() != dim) throw input_error("points have inconsistent dimensions");
            labels.push_back(j.contains("labels") ? j.at("labels").at(i).get<std::string>() : "p" + std::to_string(i));
            coords.insert(coords.end(), pts[i].begin(), pts[i].end());
        }
        auto X = FiniteMetricSpace::from_points(labels, coords, static_cast<int>(dim));
        const auto b = base_of(X);
        return FiniteInput{PointedSpace(std::move(X), b), "points"};
    }
    if (j.contains("dist")) {
        auto X = metric_space_from_json(j);
        const auto b = base_of(X);
        return FiniteInput{PointedSpace(std::move(X), b), "metric"};
    }
    throw input_error("spec JSON needs one of \"family\", \"points\", \"dist\", \"counterexample\"");
}

Input load_input(const Options& o) {
    const std::string& s = o.spec;
    if (s.empty()) throw input_error("--spec is required");
    try {
        if (s.front() == '{') return input_from_json(json::parse(s), o);
        if (fs::exists(s)) {
            std::ifstream f(s);
            std::stringstream buf;
            buf << f.rdbuf();
            const std::string text = buf.str();
            if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw input_error("input file '" + s + "' is empty");
            return input_from_json(json::parse(text), o);
        }
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed spec JSON: ") + e.what());
    }
    if (s.rfind("counterexample", 0) == 0) {
        CloudInput in;
        if (s.size() > 14) {
            if (std::sscanf(s.c_str(), "counterexample:%d:%d", &in.K, &in.N) < 1)
                throw input_error("expected counterexample:K[:N]");
        }
        require(in.K >= 1 && in.N >= 1, "counterexample needs K >= 1 and N >= 1");
        return in;
    }
    auto f = named_fractal(s, o.depth.value_or(1));
    f.validate();
    return f;
}

json input_json(const Input& in) {
    if (auto* f = std::get_if<FractalSpec>(&in)) return to_json(*f);
    if (auto* c = std::get_if<CloudInput>(&in)) return {{"counterexample", {{"K", c->K}, {"N", c->N}}}};
    const auto& fi = std::get<FiniteInput>(in);
    return {{"finite", to_json(fi.space.space)}, {"base", fi.space.base}};
}

// ---- output -----------------------------------------------------------------

RunConfig make_config(const std::string& cmd, const Options& o, const Input* in) {
    RunConfig c;
    c.command = cmd;
    c.seed = o.seed;
    c.budget = o.budget;
    c.workers = worker_count();
    c.params = {{"backend", o.backend}, {"kappa", o.kappa}, {"t_max", o.t_max}, {"h_max", o.h_max},
                {"window", o.window},   {"radius", o.radius}, {"threshold", o.threshold},
                {"samples", o.samples}, {"format", o.format}};
    if (in) c.params["input"] = input_json(*in);
    if (!o.suites.empty()) c.params["suites"] = o.suites;
    return c;
}

void emit(const Options& o, const std::string& content) {
    if (o.out.empty() || o.out == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw input_error("cannot write '" + o.out + "'");
    f << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- tables -----------------------------------------------------------------

GFunction finite_table(const PointedSpace& P, const Options& o) {
    double diam = 0;
    for (point_id i = 0; i < P.space.size(); ++i) diam = std::max(diam, P.space(P.base, i));
    const double t_origin = diam > 0 ? -std::log(diam) : 0.0;
    return g_finite(P, GGrid::tangential(o.t_max > 0 ? o.t_max : 8, o.h_max > 0 ? o.h_max : 8, o.kappa, t_origin));
}

PointedSpace as_finite(const Input& in, const Options& o) {
    SnapshotOptions so;
    if (auto* f = std::get_if<FractalSpec>(&in)) return snapshot(*f, 0.0, o.radius, so).space;
    if (auto* c = std::get_if<CloudInput>(&in)) return snapshot(LogRadiusCloud(c->K, c->N), 0.0, o.radius, so).space;
    return std::get<FiniteInput>(in).space;
}

std::string default_backend(const Input& in) { return std::holds_alternative<FractalSpec>(in) ? "comb" : "finite"; }

/// The table a plot or gtable call shows, plus the report it yields.
struct TableRun {
    GFunction table;
    DimensionReport report;
};

TableRun table_run(const Input& in, const Options& o) {
    const std::string backend = o.backend.empty() ? default_backend(in) : o.backend;
    if (backend == "comb" || backend == "geom") {
        const auto* f = std::get_if<FractalSpec>(&in);
        if (!f) throw input_error("backend '" + backend + "' needs a fractal spec");
        if (backend == "comb") {
            if (o.t_max == 0 && o.window == 0) {
                EstimatorShape shape;
                shape.kappa = o.kappa;
                if (o.h_max > 0) shape.tangential_h = o.h_max;
                auto tables = estimator_tables(*f, shape);
                return {tables.first, estimate_dimensions(*f, shape)};
            }
            GGrid grid = GGrid::tangential(o.t_max > 0 ? o.t_max : 64, o.h_max > 0 ? o.h_max : 64, o.kappa);
            auto g = g_combinatorial(*f, grid);
            return {g, report_from_table(g, o.window)};
        }
        GeometricOptions go;
        if (o.budget > 0) go.budget = o.budget;
        auto g = g_geometric(*f, GGrid::tangential(o.t_max > 0 ? o.t_max : 6, o.h_max > 0 ? o.h_max : 6, o.kappa), go);
        return {g, report_from_table(g, o.window)};
    }
    if (backend != "finite") throw input_error("unknown backend '" + backend + "'");
    auto g = finite_table(as_finite(in, o), o);
    return {g, report_from_table(g, o.window)};
}

// ---- commands ---------------------------------------------------------------

int cmd_gen(const Options& o) {
    const Input in = load_input(o);
    const RunConfig cfg = make_config("gen", o, &in);
    if (auto* c = std::get_if<CloudInput>(&in)) {
        LogRadiusCloud cloud(c->K, c->N);
        if (o.format == "csv") {
            std::ostringstream os;
            os << csv_preamble(cfg);
            cloud.write_csv(os);
            emit(o, os.str());
            return 0;
        }
        json pts = json::array();
        for (const auto& e : cloud.entries())
            pts.push_back({{"k", e.k}, {"n", e.n}, {"log_radius", e.log_radius}, {"v", e.v}});
        emit(o, dump(envelope(cfg, {{"points", cloud.size()}, {"K", c->K}, {"N", c->N}, {"cloud", pts}})));
        return 0;
    }
    if (!std::holds_alternative<FractalSpec>(in)) throw input_error("gen needs a fractal or counterexample spec");
    const auto& spec = std::get<FractalSpec>(in);
    auto cells = CellSet::build(spec, spec.depth);
    if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg);
        cells.write_csv(os);
        emit(o, os.str());
        return 0;
    }
    if (o.format == "svg") {
        std::ostringstream os;
        const double W = 600, pad = 10;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W << "\">\n" << svg_comment(cfg);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << "<polygon fill=\"black\" points=\"";
            for (auto& p : cells.geometry(i))
                os << svg::num(pad + p[0] * (W - 2 * pad)) << ',' << svg::num(W - pad - p[1] * (W - 2 * pad)) << ' ';
            os << "\"/>\n";
        }
        os << "</svg>\n";
        emit(o, os.str());
        return 0;
    }
    json res = {{"spec", to_json(spec)}, {"level", cells.level()}, {"cells", cells.size()}, {"Q", cells.Q()},
                {"side_lengths", cells.side_lengths()}};
    json list = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) list.push_back({{"address", cells.address_string(i)}, {"vertices", cells.geometry(i)}});
    res["cell_list"] = list;
    if (o.samples > 0) res["samples"] = cells.sample_points(o.samples, o.seed);
    emit(o, dump(envelope(cfg, res)));
    return 0;
}

int cmd_dims(const Options& o) {
    const Input in = load_input(o);
    const RunConfig cfg = make_config("dims", o, &in);
    auto run = table_run(in, o);
    if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg);
        write_csv_row(os, run.report, true);
        emit(o, os.str());
    } else if (o.format == "svg") {
        emit(o, svg_comment(cfg) + svg_ratio_plot(run.table, run.report.source, &run.report));
    } else {
        json res = {{"report", to_json(run.report)}};
        if (auto* f = std::get_if<FractalSpec>(&in)) res["closed_form"] = to_json(closed_form_dims(f->schedule, f->fam, f->depth));
        emit(o, dump(envelope(cfg, res)));
    }
    return 0;
}

int cmd_gtable(const Options& o) {
    const Input in = load_input(o);
    const RunConfig cfg = make_config("gtable", o, &in);
    auto run = table_run(in, o);
    const auto& g = run.table;
    if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg);
        g.write_csv(os);
        emit(o, os.str());
    } else if (o.format == "svg") {
        emit(o, svg_comment(cfg) + svg_ratio_plot(g, g.backend() + ":" + g.basepoint()));
    } else {
        json rows = json::array();
        for (std::size_t r = 0; r < g.nrows(); ++r) {
            const auto i = g.grid().rows[r];
            json vals = json::array();
            for (std::int64_t m = 0; m <= g.m_max(); ++m)
                vals.push_back(g.has(i, m) ? json({g(i, m), g.lower(i, m), g.upper(i, m)}) : json(nullptr));
            rows.push_back({{"t", g.grid().t(i)}, {"g", vals}});
        }
        auto cob = coboundary_bound(g, default_t0(g));
        emit(o, dump(envelope(cfg, {{"backend", g.backend()},
                                    {"kappa", g.kappa()},
                                    {"h_max_index", g.m_max()},
                                    {"rows", rows},
                                    {"coboundary", to_json(cob)}})));
    }
    return 0;
}

int cmd_tangents(const Options& o) {
    const Input in = load_input(o);
    const RunConfig cfg = make_config("tangents", o, &in);
    const double R = o.radius;
    std::vector<Snapshot> snaps;
    double threshold = o.threshold >= 0 ? o.threshold : 0.05 * R;
    if (auto* f = std::get_if<FractalSpec>(&in)) {
        ScaleLadder L(*f);
        // keep at least 5 resolved levels below each snapshot scale
        const std::int64_t last = std::max<std::int64_t>(0, f->depth - 5);
        const std::int64_t count = std::min(last, o.t_max > 0 ? o.t_max : 6);
        for (std::int64_t j = last - count + 1; j <= last; ++j) snaps.push_back(snapshot(*f, L.logQ(j), R));
    } else if (auto* c = std::get_if<CloudInput>(&in)) {
        LogRadiusCloud cloud(c->K, c->N);
        for (int k = 1; k <= c->K; ++k)
            for (int n = 1; n <= c->N; ++n) snaps.push_back(snapshot(cloud, -counterexample_log_radius(k, n), R));
        if (o.threshold < 0) threshold = std::min(0.05 * R, 0.25 / (double(c->K) * c->K * c->K));
    } else {
        const auto& P = std::get<FiniteInput>(in).space;
        const std::int64_t count = o.t_max > 0 ? o.t_max : 6;
        for (std::int64_t i = 0; i < count; ++i) snaps.push_back(snapshot(P, static_cast<double>(i) * o.kappa, R));
    }
    GhOptions gh;
    bool exhausted = false;
    if (o.budget > 0) {
        gh.greedy_work_limit = gh.profile_work_limit = o.budget;
        for (std::size_t i = 0; i < snaps.size(); ++i)
            for (std::size_t j = i + 1; j < snaps.size(); ++j) {
                const std::uint64_t a = snaps[i].space.space.size(), b = snaps[j].space.space.size();
                if (a * b * (a + b) > o.budget) exhausted = true;
            }
    }
    auto clusters = tangent_clusters(snaps, R, threshold, gh);
    std::vector<double> log_ts;
    for (const auto& s : snaps) log_ts.push_back(s.log_t);
    if (o.format == "svg") {
        emit(o, svg_comment(cfg) + svg_dendrogram(clusters, log_ts, "tangent candidates"));
    } else if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg) << "candidate,members,points,representative_log_t,cluster_radius,limit_point\n";
        for (std::size_t k = 0; k < clusters.candidates.size(); ++k) {
            const auto& c = clusters.candidates[k];
            os << k << ',' << c.members.size() << ',' << c.representative.space.space.size() << ','
               << c.representative.log_t << ',' << c.cluster_radius << ',' << (c.limit_point ? 1 : 0) << '\n';
        }
        emit(o, os.str());
    } else {
        json snaps_j = json::array();
        for (const auto& s : snaps)
            snaps_j.push_back({{"log_t", s.log_t}, {"points", s.space.space.size()}, {"empty", s.empty},
                               {"subsample_radius", s.subsample_radius}});
        emit(o, dump(envelope(cfg, {{"snapshots", snaps_j}, {"clusters", to_json(clusters)}, {"partial", exhausted}})));
    }
    if (exhausted) {
        std::cerr << "tandim: GH work budget " << o.budget << " exhausted; brackets are partial\n";
        return static_cast<int>(exit_code::budget);
    }
    return 0;
}

int cmd_verify(const Options& o) {
    std::vector<const NamedSuite*> chosen;
    for (const auto& s : all_suites()) {
        bool want = o.suites.empty();
        for (const auto& n : o.suites)
            if (n == "all" || n == s.name || n == std::to_string(s.id)) want = true;
        if (want) chosen.push_back(&s);
    }
    for (const auto& n : o.suites) {
        bool known = n == "all";
        for (const auto& s : all_suites()) known = known || n == s.name || n == std::to_string(s.id);
        if (!known) throw input_error("unknown suite '" + n + "'");
    }
    const RunConfig cfg = make_config("verify", o, nullptr);
    json results = json::array();
    bool all = true;
    for (const auto* s : chosen) {
        auto r = run_suite(*s);
        all = all && r.pass;
        std::fprintf(stderr, "criterion %2d %s %-22s %7.2fs  %s\n", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(),
                     r.seconds, r.summary.c_str());
        auto j = to_json(r);
        j.erase("seconds");
        results.push_back(j);
    }
    if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg) << "id,name,pass\n";
        for (const auto& r : results) os << r["id"] << ',' << r["name"].get<std::string>() << ',' << (r["pass"].get<bool>() ? 1 : 0) << '\n';
        emit(o, os.str());
    } else {
        emit(o, dump(envelope(cfg, {{"pass", all}, {"suites", results}})));
    }
    return all ? 0 : 1;
}

int cmd_report(const Options& o) {
    const Input in = load_input(o);
    const RunConfig cfg = make_config("report", o, &in);
    if (auto* c = std::get_if<CloudInput>(&in)) {
        require(c->K >= 2, "counterexample report needs K >= 2");
        auto a = counterexample_audit(c->K, c->N);
        json res = {{"K", a.K},
                    {"N", a.N},
                    {"candidates", a.clusters.candidates.size()},
                    {"sup_candidate_dim", a.sup_candidate_dim},
                    {"delta_upper_estimate", a.delta_upper_estimate},
                    {"margin", a.margin},
                    {"pass", a.pass},
                    {"clusters", to_json(a.clusters)}};
        if (o.format == "svg") {
            std::vector<double> log_ts;
            for (int k = 1; k <= a.K; ++k)
                for (int n = 1; n <= a.N; ++n) log_ts.push_back(-counterexample_log_radius(k, n));
            emit(o, svg_comment(cfg) + svg_dendrogram(a.clusters, log_ts, "counterexample tangent candidates"));
        } else {
            emit(o, dump(envelope(cfg, res)));
        }
        return 0;
    }
    auto run = table_run(in, o);
    auto& rep = run.report;
    json extra = json::object();
    if (auto* f = std::get_if<FractalSpec>(&in)) {
        AssumptionPlan plan;
        plan.last_octave = 10;
        rep.assumption = check_assumption(FractalSpec{f->fam, f->schedule, std::min<std::int64_t>(f->depth, 16)}, plan);
        extra["closed_form"] = to_json(closed_form_dims(f->schedule, f->fam, f->depth));
    } else {
        const auto& P = std::get<FiniteInput>(in).space;
        std::vector<double> ts;
        for (int i = 0; i < 4; ++i) ts.push_back(i * o.kappa);
        rep.assumption = check_assumption(P, ts, {1, 2}, {1, 2}, o.kappa, 16);
    }
    auto chain = dim_chain_check(rep);
    extra["chain"] = {{"pass", chain.pass}, {"worst_margin", chain.worst_margin}, {"detail", chain.detail}};
    if (o.format == "csv") {
        std::ostringstream os;
        os << csv_preamble(cfg);
        write_csv_row(os, rep, true);
        emit(o, os.str());
    } else if (o.format == "svg") {
        emit(o, svg_comment(cfg) + svg_ratio_plot(run.table, rep.source, &rep));
    } else {
        extra["report"] = to_json(rep);
        emit(o, dump(envelope(cfg, extra)));
    }
    return 0;
}

void add_common(CLI::App* sub, Options& o, bool needs_spec = true) {
    if (needs_spec)
        sub->add_option("--spec", o.spec, "fractal name, family:q1,q2,..., counterexample:K[:N], JSON file or inline JSON")
            ->required();
    sub->add_option("--depth", o.depth, "fractal depth");
    sub->add_option("--backend", o.backend, "g-table backend")->check(CLI::IsMember({"comb", "geom", "finite"}));
    sub->add_option("--kappa", o.kappa, "grid step")->check(CLI::PositiveNumber);
    sub->add_option("--t-max", o.t_max, "t rows (snapshot count for tangents)")->check(CLI::NonNegativeNumber);
    sub->add_option("--h-max", o.h_max, "h columns")->check(CLI::NonNegativeNumber);
    sub->add_option("--window", o.window, "t window of the estimators")->check(CLI::NonNegativeNumber);
    sub->add_option("--radius", o.radius, "pointed radius R")->check(CLI::PositiveNumber);
    sub->add_option("--threshold", o.threshold, "cluster merge threshold (default 0.05 R)");
    sub->add_option("--budget", o.budget, "work budget (cells for geom, GH work for tangents)");
    sub->add_option("--seed", o.seed, "seed recorded in artifacts and used for sampling");
    sub->add_option("--samples", o.samples, "sample points per cell (gen json)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv", "svg"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tandim: tangential dimensions of fractals and finite metric spaces"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    Options o;
    auto* gen = app.add_subcommand("gen", "generate fractal cells or the counterexample cloud");
    auto* dims = app.add_subcommand("dims", "estimate the four dimensions");
    auto* gtable = app.add_subcommand("gtable", "write a g(t,h) table");
    auto* tangents = app.add_subcommand("tangents", "cluster rescaled snapshots into tangent candidates");
    auto* verify = app.add_subcommand("verify", "run acceptance suites by name or number");
    auto* report = app.add_subcommand("report", "dimensions, assumption check and chain check in one artifact");
    for (auto* s : {gen, dims, gtable, tangents, report}) add_common(s, o);
    add_common(verify, o, false);
    verify->add_option("suites", o.suites, "suite names or ids (default all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(exit_code::input);
    }
    try {
        if (*gen) return cmd_gen(o);
        if (*dims) return cmd_dims(o);
        if (*gtable) return cmd_gtable(o);
        if (*tangents) return cmd_tangents(o);
        if (*verify) return cmd_verify(o);
        if (*report) return cmd_report(o);
    } catch (const tandim::error& e) {
        std::cerr << "tandim: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const json::exception& e) {
        std::cerr << "tandim: " << e.what() << '\n';
        return static_cast<int>(exit_code::input);
    } catch (const std::exception& e) {
        std::cerr << "tandim: internal error: " << e.what() << '\n';
        return static_cast<int>(exit_code::internal);
    }
    return static_cast<int>(exit_code::internal);
}
