#pragma once

// Experiment runner behind the ergolab command line: config parsing with
// path-tagged errors, one runner per experiment, report and CSV emission.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ergolab/classify.hpp"
#include "ergolab/entropy.hpp"
#include "ergolab/measures.hpp"
#include "ergolab/spec_properties.hpp"
#include "ergolab/tracing.hpp"

namespace ergolab::cli {

inline constexpr const char* kVersion = "0.1.0";

inline json module_versions() {
    return {{"core", 1}, {"tracing", 1}, {"spec_properties", 1}, {"entropy", 1}, {"measures", 1}, {"interval", 1}, {"cli", 1}};
}

/// FNV-1a, 64 bit, printed as 16 hex digits.
inline std::string config_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Config access

/// A view into the config that remembers its JSON-pointer path, so every
/// error names the offending field.
class Cfg {
public:
    Cfg(const json& j, std::string path = "") : j_(&j), path_(std::move(path)) {}

    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
    std::string path(const std::string& key) const { return path_ + "/" + key; }
    const json& raw() const { return *j_; }

    Cfg at(const std::string& key) const {
        if (!has(key)) fail(path(key), "required field is missing");
        return Cfg(j_->at(key), path(key));
    }

    template <class T>
    T get(const std::string& key, T fallback) const {
        if (!has(key)) return fallback;
        return as<T>(key);
    }

    template <class T>
    T req(const std::string& key) const {
        if (!has(key)) fail(path(key), "required field is missing");
        return as<T>(key);
    }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw Error(ErrorCode::ConfigError, (where.empty() ? "/" : where) + ": " + what);
    }

private:
    template <class T>
    T as(const std::string& key) const {
        try {
            return j_->at(key).get<T>();
        } catch (const json::exception& e) {
            fail(path(key), std::string("wrong type (") + e.what() + ")");
        }
    }

    const json* j_;
    std::string path_;
};

/// Error text without the leading code name.
inline std::string bare_message(const Error& e) {
    const std::string w = e.what(), code = to_string(e.code());
    return w.rfind(code + ": ", 0) == 0 ? w.substr(code.size() + 2) : w;
}

/// Wraps library errors raised while interpreting a config field.
template <class Fn>
auto at_path(const std::string& where, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError && bare_message(e).rfind('/', 0) == 0) throw;
        Cfg::fail(where, bare_message(e));
    } catch (const json::exception& e) {
        Cfg::fail(where, e.what());
    }
}

inline System system_of(const Cfg& c, const std::string& key = "system") {
    if (!c.has(key)) Cfg::fail(c.path(key), "required field is missing");
    return at_path(c.path(key), [&] { return system_from_json(c.raw().at(key)); });
}

inline Point point_of(const System& sys, const json& j, const std::string& where) {
    return at_path(where, [&] {
        Point p = point_from_json(j);
        validate(sys, p);
        return p;
    });
}

inline std::vector<double> positive_list(const Cfg& c, const std::string& key, std::vector<double> fallback) {
    auto v = c.get<std::vector<double>>(key, std::move(fallback));
    if (v.empty()) Cfg::fail(c.path(key), "list must be nonempty");
    for (double x : v)
        if (!(x > 0)) Cfg::fail(c.path(key), "values must be positive");
    return v;
}

inline std::vector<std::size_t> size_list(const Cfg& c, const std::string& key, std::vector<std::size_t> fallback) {
    auto v = c.get<std::vector<std::size_t>>(key, std::move(fallback));
    if (v.empty()) Cfg::fail(c.path(key), "list must be nonempty");
    for (auto x : v)
        if (x < 1) Cfg::fail(c.path(key), "values must be >= 1");
    return v;
}

inline std::size_t positive_size(const Cfg& c, const std::string& key, std::size_t fallback) {
    auto v = c.get<long long>(key, static_cast<long long>(fallback));
    if (v < 1) Cfg::fail(c.path(key), "must be >= 1");
    return static_cast<std::size_t>(v);
}

inline double positive_real(const Cfg& c, const std::string& key, double fallback) {
    auto v = c.get<double>(key, fallback);
    if (!(v > 0)) Cfg::fail(c.path(key), "must be positive");
    return v;
}

// ---------------------------------------------------------------------------
// Tables

inline std::string num(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}
inline std::string num(std::size_t x) { return std::to_string(x); }

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const {
        std::ostringstream o;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) o << ',';
                const bool quote = r[i].find_first_of(",\"\n") != std::string::npos;
                if (!quote) {
                    o << r[i];
                    continue;
                }
                o << '"';
                for (char c : r[i]) o << (c == '"' ? "\"\"" : std::string(1, c));
                o << '"';
            }
            o << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return o.str();
    }
};

struct Outcome {
    json result;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, json>> artifacts; // extra JSON files
    std::string summary;
};

struct RunContext {
    std::uint64_t seed = 1;
    std::filesystem::path base_dir = "."; // relative file references in the config
};

inline json load_json_file(const std::filesystem::path& p, const std::string& where) {
    std::ifstream in(p);
    if (!in) Cfg::fail(where, "cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        Cfg::fail(where, "invalid JSON in " + p.string() + ": " + e.what());
    }
}

/// A config field that is either an inline object or a path to a JSON file.
inline json inline_or_file(const Cfg& c, const std::string& key, const RunContext& ctx) {
    const Cfg f = c.at(key);
    if (f.raw().is_string()) return load_json_file(ctx.base_dir / f.raw().get<std::string>(), c.path(key));
    if (!f.raw().is_object()) Cfg::fail(c.path(key), "expected an object or a file path");
    return f.raw();
}

// ---------------------------------------------------------------------------
// Shared pieces

/// Adversarial pair, cheap fixed points, then seeded random points.
inline std::vector<Point> probe_starts(const System& sys, std::size_t count, std::uint64_t seed, std::size_t scale) {
    std::vector<Point> out;
    // symbolic points can agree on the metric window yet differ later on
    auto same = [&](const Point& p, const Point& q) {
        if (!sys.is_symbolic()) return dist(sys, p, q) == 0.0;
        for (std::size_t j = 0; j < scale + kMetricResolution; ++j)
            if (p.symbolic().at(j) != q.symbolic().at(j)) return false;
        return true;
    };
    auto add = [&](const Point& p) {
        for (const auto& q : out)
            if (same(p, q)) return;
        if (out.size() < count) out.push_back(p);
    };
    try {
        auto [a, b] = adversarial_pair(sys);
        add(a);
        add(b);
    } catch (const Error&) {
    }
    for (const auto& p : known_fixed_points(sys)) add(p);
    for (std::size_t i = 0; out.size() < count && i < 64 * count; ++i) {
        auto rng = stream(seed, 0x57a7, i);
        add(random_point(sys, rng, scale));
    }
    return out;
}

/// Orbit statistics are floating point; exact interval starts would only
/// grow rational denominators along long orbits.
inline Point statistics_start(const System& sys, const Point& p) {
    return sys.is_interval() ? Point(RealPoint::inexact(p.real_point().value)) : p;
}

inline PropertyGrid grid_of(const Cfg& c, std::uint64_t seed, bool allow_zero, PropertyGrid g = {}) {
    if (c.has("delta1")) g.delta1 = positive_list(c, "delta1", {});
    if (c.has("delta2")) g.delta2 = c.get<std::vector<double>>("delta2", {});
    if (c.has("eps")) g.eps = positive_list(c, "eps", {});
    if (c.has("n")) g.n = size_list(c, "n", {});
    g.blocks = positive_size(c, "blocks", g.blocks);
    g.trials = positive_size(c, "trials", g.trials);
    if (c.has("policy")) g.policy = at_path(c.path("policy"), [&] { return parse_policy(c.req<std::string>("policy")); });
    g.seed = seed;
    at_path(c.path(""), [&] {
        g.check(allow_zero);
        return 0;
    });
    return g;
}

inline TesterBudget budget_of(const Cfg& c) {
    TesterBudget b;
    if (!c.has("budget")) return b;
    const Cfg bc = c.at("budget");
    b.candidates = positive_size(bc, "candidates", b.candidates);
    b.beam = positive_size(bc, "beam", b.beam);
    return b;
}

inline Table cells_table(const PropertyReport& rep) {
    Table t{"cells", {"property", "delta1", "delta2", "eps", "n", "M", "outcome", "reused"}, {}};
    for (const auto& c : rep.cells)
        t.rows.push_back({rep.property, num(c.delta1), num(c.delta2), num(c.eps), num(c.n), c.gap_M ? num(*c.gap_M) : "",
                          to_string(c.outcome), c.reused ? "1" : "0"});
    return t;
}

inline Table certificate_table(const TracingCertificate& c, const std::vector<std::size_t>& recomputed) {
    Table t{"trace", {"block", "start", "length", "stored_mistakes", "recomputed_mistakes", "allowed"}, {}};
    const auto s = c.instance.schedule.starts();
    for (std::size_t k = 0; k < s.size(); ++k)
        t.rows.push_back({num(k), num(static_cast<std::size_t>(s[k])), num(c.instance.schedule.lengths[k]),
                          k < c.mistakes.size() ? num(c.mistakes[k]) : "", k < recomputed.size() ? num(recomputed[k]) : "",
                          num(mistake_budget(c.instance.delta, c.instance.schedule.lengths[k]))});
    return t;
}

inline Table entropy_table(const EntropyEstimate& e) {
    Table t{"entropy", {"n", "eps", "count", "log_count", "saturated", "method", "slope"}, {}};
    for (const auto& r : e.rows) {
        std::string slope;
        for (const auto& p : e.per_eps)
            if (p.eps == r.eps && p.fitted) slope = num(p.slope);
        t.rows.push_back({num(r.n), num(r.eps), num(r.count), num(r.log_count), r.saturated ? "1" : "0", to_string(r.method), slope});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Experiments

inline Outcome run_entropy(const Cfg& c, const RunContext&) {
    const System sys = system_of(c);
    const bool sym = sys.is_symbolic();
    auto eps = positive_list(c, "eps", sym ? std::vector<double>{0.5, 0.25} : std::vector<double>{0.01});
    auto ns = size_list(c, "n", sym ? std::vector<std::size_t>{4, 8, 12, 16} : std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
    if (ns.size() < 3) Cfg::fail(c.path("n"), "need at least three n values");
    const std::string m = c.get<std::string>("method", sym ? "brute" : "greedy");
    if (m != "brute" && m != "greedy") Cfg::fail(c.path("method"), "expected 'brute' or 'greedy'");
    SeparationBudget b;
    b.pool = positive_size(c, "pool", std::size_t{1} << 16);
    b.max_words = positive_size(c, "max_words", b.max_words);
    auto est = entropy_estimate(sys, eps, ns, m == "brute" ? SeparationMethod::Brute : SeparationMethod::Greedy, b);
    Outcome o;
    o.result = entropy_to_json(est);
    o.result["system"] = system_to_json(sys);
    o.tables.push_back(entropy_table(est));
    o.summary = "entropy estimate " + num(est.estimate);
    return o;
}

inline Outcome run_trace_verify(const Cfg& c, const RunContext& ctx) {
    const json cj = inline_or_file(c, "certificate", ctx);
    auto [sys, cert] = at_path(c.path("certificate"), [&] { return certificate_from_json(cj); });
    std::optional<std::vector<std::uint64_t>> stored;
    if (cj.contains("starts")) stored = at_path(c.path("certificate") + "/starts", [&] { return cj.at("starts").get<std::vector<std::uint64_t>>(); });
    auto v = verify_certificate(sys, cert, stored ? &*stored : nullptr);
    Outcome o;
    o.result = {{"verdict", v.valid ? "certificate valid" : "certificate invalid"}, {"reason", v.reason}, {"recomputed", v.recomputed}};
    o.result["failing_block"] = v.failing_block ? json(*v.failing_block) : json(nullptr);
    o.tables.push_back(certificate_table(cert, v.recomputed));
    o.summary = o.result["verdict"].get<std::string>() + (v.failing_block ? " (block " + std::to_string(*v.failing_block) + ")" : "");
    return o;
}

inline Outcome run_trace_search(const Cfg& c, const RunContext& ctx) {
    const System sys = system_of(c);
    SearchParams p;
    p.n = positive_size(c, "n", 16);
    p.delta1 = c.get<double>("delta1", 0.25);
    p.delta2 = c.get<double>("delta2", 0.1);
    p.eps = positive_real(c, "eps", 0.25);
    p.budget = positive_size(c, "budget", p.budget);
    if (p.delta1 < 0) Cfg::fail(c.path("delta1"), "must be >= 0");
    if (p.delta2 < 0) Cfg::fail(c.path("delta2"), "must be >= 0");
    std::vector<Point> targets;
    if (c.has("targets")) {
        const Cfg tc = c.at("targets");
        if (!tc.raw().is_array() || tc.raw().empty()) Cfg::fail(c.path("targets"), "expected a nonempty list of points");
        for (std::size_t i = 0; i < tc.raw().size(); ++i) targets.push_back(point_of(sys, tc.raw()[i], c.path("targets") + "/" + std::to_string(i)));
    } else {
        const auto policy = at_path(c.path("policy"), [&] { return parse_policy(c.get<std::string>("policy", "mixed")); });
        targets = sample_targets(sys, positive_size(c, "blocks", 8), p.n, c.get<std::size_t>("trial", 0), policy, ctx.seed);
    }
    p.extra_candidates = known_fixed_points(sys);
    auto cert = at_path(c.path(""), [&] { return search_tracing_point(sys, targets, p); });
    Outcome o;
    o.result = {{"found", cert.has_value()}};
    if (cert) {
        json cj = certificate_to_json(sys, *cert);
        o.result["certificate"] = cj;
        o.artifacts.emplace_back("certificate", cj);
        o.tables.push_back(certificate_table(*cert, cert->mistakes));
        o.summary = "tracer found by " + cert->method;
    } else {
        o.result["outcome"] = to_string(CellOutcome::NoWitness);
        o.summary = to_string(CellOutcome::NoWitness);
    }
    return o;
}

inline Outcome run_app(const Cfg& c, const RunContext& ctx, bool strict) {
    const System sys = system_of(c);
    const PropertyGrid g = c.has("grid") ? grid_of(c.at("grid"), ctx.seed, true) : grid_of(Cfg(json::object(), "/grid"), ctx.seed, true);
    const auto budget = budget_of(c);
    auto rep = strict ? test_strict_app(sys, g, budget) : test_app(sys, g, budget);
    Outcome o;
    o.result = property_report_to_json(sys, rep, c.get<bool>("embed_certificates", true));
    o.tables.push_back(cells_table(rep));
    std::size_t pass = 0;
    for (const auto& cell : rep.cells) pass += passes(cell.outcome);
    o.summary = rep.property + ": " + std::to_string(pass) + "/" + std::to_string(rep.cells.size()) + " cells pass";
    return o;
}

inline Outcome run_spec(const Cfg& c, const RunContext& ctx) {
    const System sys = system_of(c);
    PeriodicSpecParams pp;
    if (c.has("profiles")) {
        pp.profiles = c.req<std::vector<std::vector<std::size_t>>>("profiles");
        if (pp.profiles.empty()) Cfg::fail(c.path("profiles"), "list must be nonempty");
        for (const auto& pr : pp.profiles)
            if (pr.empty() || std::find(pr.begin(), pr.end(), 0u) != pr.end()) Cfg::fail(c.path("profiles"), "profiles need positive lengths");
    }
    pp.eps = positive_list(c, "eps", pp.eps);
    pp.max_gap_M = c.get<std::size_t>("max_gap_M", pp.max_gap_M);
    pp.trials = positive_size(c, "trials", pp.trials);
    pp.max_period = positive_size(c, "max_period", pp.max_period);
    if (c.has("policy")) pp.policy = at_path(c.path("policy"), [&] { return parse_policy(c.req<std::string>("policy")); });
    pp.seed = ctx.seed;
    auto rep = at_path(c.path("system"), [&] { return test_periodic_exact_spec(sys, pp); });
    Outcome o;
    o.result = property_report_to_json(sys, rep, c.get<bool>("embed_certificates", true));
    o.tables.push_back(cells_table(rep));
    o.summary = rep.property + ": " + rep.trend;
    return o;
}

struct UeSetup {
    std::vector<Point> starts;
    std::vector<std::size_t> ns;
    UniqueErgodicityParams params;
    double radius = 0.2;
};

inline UeSetup ue_setup(const System& sys, const Cfg& c, std::uint64_t seed) {
    UeSetup s;
    s.ns = size_list(c, "n", {100, 1000, 10000});
    s.params.threshold = positive_real(c, "threshold", s.params.threshold);
    s.params.improvement = positive_real(c, "improvement", s.params.improvement);
    s.radius = positive_real(c, "radius", s.radius);
    if (c.has("starts") && c.at("starts").raw().is_array()) {
        const auto& arr = c.at("starts").raw();
        for (std::size_t i = 0; i < arr.size(); ++i) s.starts.push_back(statistics_start(sys, point_of(sys, arr[i], c.path("starts") + "/" + std::to_string(i))));
    } else {
        for (const auto& p : probe_starts(sys, positive_size(c, "starts", 8), seed, *std::max_element(s.ns.begin(), s.ns.end())))
            s.starts.push_back(statistics_start(sys, p));
    }
    if (s.starts.size() < 8) Cfg::fail(c.path("starts"), "need at least 8 start points");
    if (!std::is_sorted(s.ns.begin(), s.ns.end()) || std::adjacent_find(s.ns.begin(), s.ns.end()) != s.ns.end())
        Cfg::fail(c.path("n"), "must be strictly increasing");
    return s;
}

inline json ue_to_json(const UniqueErgodicityReport& r) {
    json j{{"n", r.ns},         {"spread", r.spread},         {"worst_function", r.worst_function},
           {"consistent", r.consistent}, {"verdict", r.verdict}};
    j["improvement"] = std::isfinite(r.improvement) ? json(r.improvement) : json("inf");
    return j;
}

inline Outcome run_unique_ergodicity(const Cfg& c, const RunContext& ctx) {
    const System sys = system_of(c);
    const auto s = ue_setup(sys, c, ctx.seed);
    const auto fam = default_family(sys, s.radius);
    auto rep = unique_ergodicity_test(sys, fam, s.starts, s.ns, s.params);
    Outcome o;
    o.result = ue_to_json(rep);
    o.result["system"] = system_to_json(sys);
    json starts = json::array();
    for (const auto& p : s.starts) starts.push_back(point_to_json(p));
    o.result["starts"] = starts;
    o.result["family"] = fam.labels;
    Table t{"unique_ergodicity", {"start", "n", "phi", "average"}, {}};
    for (std::size_t ni = 0; ni < rep.ns.size(); ++ni)
        for (std::size_t st = 0; st < s.starts.size(); ++st)
            for (std::size_t i = 0; i < fam.size(); ++i) t.rows.push_back({num(st), num(rep.ns[ni]), num(i), num(rep.averages[ni][st][i])});
    o.tables.push_back(std::move(t));
    o.summary = rep.verdict;
    return o;
}

inline std::vector<OrbitSpec> orbit_specs(const System& sys, const Cfg& c, std::uint64_t seed) {
    const std::size_t n = positive_size(c, "n", 2000);
    std::vector<OrbitSpec> specs;
    if (c.has("orbits") && c.at("orbits").raw().is_array()) {
        const auto& arr = c.at("orbits").raw();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = c.path("orbits") + "/" + std::to_string(i);
            const Cfg oc(arr[i], where);
            specs.push_back({statistics_start(sys, point_of(sys, oc.at("start").raw(), where + "/start")), positive_size(oc, "n", n)});
        }
    } else {
        for (const auto& p : probe_starts(sys, positive_size(c, "orbits", 8), seed, n)) specs.push_back({statistics_start(sys, p), n});
    }
    if (specs.size() < 2) Cfg::fail(c.path("orbits"), "need at least two orbits");
    return specs;
}

inline Outcome run_cluster(const Cfg& c, const RunContext& ctx) {
    const System sys = system_of(c);
    const auto specs = orbit_specs(sys, c, ctx.seed);
    const double eta = positive_real(c, "eta", 0.05);
    auto cl = detect_measure_multiplicity(sys, specs, eta, default_family(sys, positive_real(c, "radius", 0.2)));
    Outcome o;
    o.result = clusters_to_json(cl);
    o.result["system"] = system_to_json(sys);
    Table t{"distances", {"i", "j", "distance"}, {}};
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t j = i + 1; j < specs.size(); ++j) t.rows.push_back({num(i), num(j), num(cl.distance[i][j])});
    o.tables.push_back(std::move(t));
    o.summary = std::to_string(cl.count()) + " cluster(s) at linkage " + num(2 * eta);
    return o;
}

inline System map_of(const std::string& spec, const std::string& where) {
    return at_path(where, [&] {
        for (const auto& e : zoo_catalog())
            if (e.name == spec) return e.make(json::object());
        return interval_map(spec);
    });
}

struct ClassifyOverrides {
    std::optional<std::string> map;
    std::optional<int> period_bound;
    std::optional<std::size_t> samples;
};

inline Outcome run_classify(const Cfg& c, const RunContext& ctx, const ClassifyOverrides& ov = {}) {
    System sys = ov.map ? map_of(*ov.map, "--map") : (c.has("map") ? map_of(c.req<std::string>("map"), c.path("map")) : system_of(c));
    if (!sys.is_interval()) Cfg::fail(ov.map ? "--map" : c.path(c.has("map") ? "map" : "system"), "classification needs an interval map");
    ClassifyParams p;
    p.period_bound = ov.period_bound.value_or(c.get<int>("period_bound", p.period_bound));
    if (p.period_bound < 1) Cfg::fail(ov.period_bound ? "--period-bound" : c.path("period_bound"), "must be >= 1");
    p.attraction.samples = ov.samples.value_or(positive_size(c, "samples", p.attraction.samples));
    if (p.attraction.samples < 1) Cfg::fail("--samples", "must be >= 1");
    p.scan.grid = positive_size(c, "grid", p.scan.grid);
    p.attraction.horizon = positive_size(c, "horizon", p.attraction.horizon);
    p.entropy_eps = positive_real(c, "entropy_eps", p.entropy_eps);
    p.entropy_n = size_list(c, "entropy_n", p.entropy_n);
    p.entropy_pool = positive_size(c, "entropy_pool", p.entropy_pool);
    p.eta = positive_real(c, "eta", p.eta);
    p.seed = ctx.seed;
    auto v = classify_zero_entropy_app(sys, p);
    Outcome o;
    o.result = classify_to_json(sys, v);
    Table t{"fixed_points", {"period", "location", "lo", "hi", "exact", "attraction", "inconclusive"}, {}};
    auto row = [&](int q, const FixedPointRecord& r) {
        t.rows.push_back({std::to_string(q), num(r.location), num(r.lo), num(r.hi), r.exact ? r.exact->str() : "", to_string(r.attraction),
                          r.inconclusive ? "1" : "0"});
    };
    for (const auto& r : v.census.fixed) row(1, v.attractor && v.census.fixed.size() == 1 ? *v.attractor : r);
    for (const auto& [q, r] : v.census.higher) row(q, r);
    o.tables.push_back(std::move(t));
    o.tables.push_back(entropy_table(v.entropy));
    o.summary = v.characterization ? "characterization satisfied (" + v.scope + ")" : "characterization fails: " + v.reasons.front();
    return o;
}

inline FamilyParams family_params(const Cfg& c) {
    FamilyParams p;
    p.m = positive_size(c, "m", p.m);
    p.delta = c.get<double>("delta", p.delta);
    p.depth = positive_size(c, "N", p.depth);
    p.eps_trace = positive_real(c, "eps_trace", p.eps_trace);
    p.gamma = positive_real(c, "gamma", p.gamma);
    p.budget = positive_size(c, "budget", p.budget);
    at_path(c.path("delta"), [&] {
        check_family_params(p);
        return 0;
    });
    return p;
}

inline Table family_table(const SeparatedFamily& f) {
    Table t{"family", {"xi", "max_gap", "total_mistakes", "horizon", "method"}, {}};
    for (const auto& m : f.members) {
        std::size_t tot = 0;
        for (auto x : m.certificate.mistakes) tot += x;
        t.rows.push_back({xi_string(m.xi), num(m.certificate.instance.schedule.max_gap()), num(tot), num(static_cast<std::size_t>(m.certificate.horizon)),
                          m.certificate.method});
    }
    return t;
}

inline Outcome run_family_build(const Cfg& c, const RunContext&) {
    const System sys = system_of(c);
    const FamilyParams p = family_params(c);
    std::array<Point, 4> base;
    if (c.has("base")) {
        const auto& arr = c.at("base").raw();
        if (!arr.is_array() || arr.size() != 4) Cfg::fail(c.path("base"), "expected four points");
        for (std::size_t i = 0; i < 4; ++i) base[i] = point_of(sys, arr[i], c.path("base") + "/" + std::to_string(i));
    } else {
        auto cands = known_fixed_points(sys);
        for (const auto& q : landmarks(sys, 16)) cands.push_back(q);
        auto sel = four_point_selector(sys, cands, positive_size(c, "selector_horizon", 32), p.gamma);
        if (!sel) Cfg::fail(c.path("base"), "no four candidate points are 4*gamma apart; give the base points explicitly");
        base = *sel;
    }
    Outcome o;
    try {
        auto fam = build_separated_family(sys, base, p);
        json fj = family_to_json(fam);
        o.artifacts.emplace_back("family", fj);
        std::size_t max_gap = 0, mistakes = 0;
        for (const auto& m : fam.members) {
            max_gap = std::max(max_gap, m.certificate.instance.schedule.max_gap());
            for (auto x : m.certificate.mistakes) mistakes += x;
        }
        o.result = {{"built", true}, {"members", fam.members.size()}, {"max_gap", max_gap}, {"total_mistakes", mistakes}, {"family", fj}};
        o.tables.push_back(family_table(fam));
        o.summary = "built " + std::to_string(fam.members.size()) + " members";
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SearchFailed) throw;
        o.result = {{"built", false}, {"reason", e.what()}};
        o.summary = "family not built: " + std::string(e.what());
    }
    return o;
}

inline Outcome run_family_verify(const Cfg& c, const RunContext& ctx) {
    const json fj = inline_or_file(c, "family", ctx);
    auto fam = at_path(c.path("family"), [&] { return family_from_json(fj); });
    const std::string idx = c.get<std::string>("horizon_index", "pair");
    if (idx != "pair" && idx != "target") Cfg::fail(c.path("horizon_index"), "expected 'pair' or 'target'");
    auto rep = at_path(c.path("family"), [&] { return check_pairwise_separation(fam, idx == "pair" ? HorizonIndex::Pair : HorizonIndex::Target); });
    Outcome o;
    o.result = {{"verdict", rep.separated ? "separated" : "not separated"},
                {"horizon_index", to_string(rep.index)},
                {"pairs", rep.pairs},
                {"case1", rep.case1},
                {"case2", rep.case2},
                {"failures", rep.failures},
                {"first_failure", rep.first_failure},
                {"min_achieved", rep.min_achieved},
                {"bound", rep.separated ? json(rep.bound) : json(nullptr)}};
    o.tables.push_back({"separation",
                        {"horizon_index", "pairs", "case1", "case2", "failures", "bound"},
                        {{to_string(rep.index), num(rep.pairs), num(rep.case1), num(rep.case2), num(rep.failures), rep.separated ? num(rep.bound) : ""}}});
    o.summary = o.result["verdict"].get<std::string>() + " (" + std::to_string(rep.failures) + " of " + std::to_string(rep.pairs) + " pairs fail)";
    return o;
}

// ---------------------------------------------------------------------------
// Dichotomy

inline Outcome run_dichotomy(const Cfg& c, const RunContext& ctx) {
    const System sys = system_of(c);
    const bool sym = sys.is_symbolic();
    const double slope_max = positive_real(c, "slope_threshold", 0.05);

    // entropy
    const Cfg ec = c.has("entropy") ? c.at("entropy") : Cfg(json::object(), "/entropy");
    const auto eps = positive_list(ec, "eps", sym ? std::vector<double>{0.25} : std::vector<double>{0.01});
    const auto ns = size_list(ec, "n", sym ? std::vector<std::size_t>{256, 512, 1024, 2048} : std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
    if (ns.size() < 3) Cfg::fail(ec.path("n"), "need at least three n values");
    SeparationBudget sb;
    sb.pool = positive_size(ec, "pool", std::size_t{1} << 16);
    sb.seed = ctx.seed;
    auto est = entropy_estimate(sys, eps, ns, sym ? SeparationMethod::Brute : SeparationMethod::Greedy, sb);
    const double slope = sym && est.word_count_fit ? std::max(0.0, est.word_count_fit->slope) : est.estimate;

    // unique ergodicity and clusters on the same starts
    const Cfg uc = c.has("unique_ergodicity") ? c.at("unique_ergodicity") : Cfg(json::object(), "/unique_ergodicity");
    const auto ue = ue_setup(sys, uc, ctx.seed);
    const auto fam = default_family(sys, ue.radius);
    auto uer = unique_ergodicity_test(sys, fam, ue.starts, ue.ns, ue.params);
    const Cfg cc = c.has("clusters") ? c.at("clusters") : Cfg(json::object(), "/clusters");
    const double eta = positive_real(cc, "eta", 0.05);
    std::vector<OrbitSpec> specs;
    for (const auto& p : ue.starts) specs.push_back({p, ue.ns.back()});
    auto cl = detect_measure_multiplicity(sys, specs, eta, fam);

    // approximate product evidence
    PropertyGrid g;
    g.delta1 = {0.25};
    g.delta2 = {0.1};
    g.eps = {0.25};
    g.n = {256};
    g = c.has("app") ? grid_of(c.at("app"), ctx.seed, false, g) : grid_of(Cfg(json::object(), "/app"), ctx.seed, false, g);
    auto app = test_app(sys, g, budget_of(c));
    const bool app_ok = std::all_of(app.cells.begin(), app.cells.end(), [](const CellResult& x) { return passes(x.outcome); });

    const bool zero_entropy = slope <= slope_max;
    const bool single = cl.count() == 1 && uer.consistent;
    std::string verdict = !app_ok ? "HYPOTHESIS-UNMET" : (zero_entropy == single ? "CONSISTENT" : "INCONSISTENT");

    Outcome o;
    o.result = {{"system", system_to_json(sys)},
                {"verdict", verdict},
                {"entropy", entropy_to_json(est)},
                {"entropy_slope", slope},
                {"zero_entropy", zero_entropy},
                {"unique_ergodicity", ue_to_json(uer)},
                {"clusters", clusters_to_json(cl)},
                {"single_measure", single},
                {"app", property_report_to_json(sys, app, false)},
                {"app_passes", app_ok},
                {"thresholds",
                 {{"slope", slope_max}, {"spread", ue.params.threshold}, {"improvement", ue.params.improvement}, {"eta", eta}}}};
    o.tables.push_back({"dichotomy",
                        {"check", "value", "threshold", "holds"},
                        {{"entropy_slope_zero", num(slope), num(slope_max), zero_entropy ? "1" : "0"},
                         {"birkhoff_spread", num(uer.spread.back()), num(ue.params.threshold), uer.consistent ? "1" : "0"},
                         {"measure_clusters", num(cl.count()), "1", cl.count() == 1 ? "1" : "0"},
                         {"app_cells", num(app.cells.size()), "all pass", app_ok ? "1" : "0"}}});
    o.tables.push_back(entropy_table(est));
    o.summary = verdict;
    return o;
}

// ---------------------------------------------------------------------------
// Dispatch and files

inline const std::vector<std::string>& experiments() {
    static const std::vector<std::string> names = {"entropy",   "trace-verify",      "trace-search",     "app",
                                                   "sapp",      "spec",              "unique-ergodicity", "cluster",
                                                   "interval-classify", "family-build", "family-verify",    "dichotomy"};
    return names;
}

inline Outcome run_experiment(const std::string& kind, const json& config, const RunContext& ctx, const ClassifyOverrides& ov = {}) {
    if (!config.is_object()) Cfg::fail("", "config must be a JSON object");
    const Cfg c(config);
    if (kind == "entropy") return run_entropy(c, ctx);
    if (kind == "trace-verify") return run_trace_verify(c, ctx);
    if (kind == "trace-search") return run_trace_search(c, ctx);
    if (kind == "app") return run_app(c, ctx, false);
    if (kind == "sapp") return run_app(c, ctx, true);
    if (kind == "spec") return run_spec(c, ctx);
    if (kind == "unique-ergodicity") return run_unique_ergodicity(c, ctx);
    if (kind == "cluster") return run_cluster(c, ctx);
    if (kind == "interval-classify") return run_classify(c, ctx, ov);
    if (kind == "family-build") return run_family_build(c, ctx);
    if (kind == "family-verify") return run_family_verify(c, ctx);
    if (kind == "dichotomy") return run_dichotomy(c, ctx);
    Cfg::fail("", "unknown experiment '" + kind + "'");
}

/// The report document: run metadata plus the experiment result. Contains no
/// timestamps, so equal (config bytes, seed) give equal bytes.
inline json make_report(const std::string& kind, const std::string& config_bytes, const json& config, std::uint64_t seed, const Outcome& o) {
    return {{"experiment", kind},
            {"version", kVersion},
            {"modules", module_versions()},
            {"seed", seed},
            {"config_hash", config_hash(config_bytes)},
            {"config", config},
            {"summary", o.summary},
            {"result", o.result}};
}

/// Parses config text, applies the seed override and runs. Returns the
/// report and the outcome (for CSVs and artifacts).
inline std::pair<json, Outcome> run_text(const std::string& kind, const std::string& config_bytes, std::optional<std::uint64_t> seed_override,
                                         const std::filesystem::path& base_dir, const ClassifyOverrides& ov = {}) {
    json config;
    try {
        config = config_bytes.empty() ? json::object() : json::parse(config_bytes);
    } catch (const json::exception& e) {
        Cfg::fail("", std::string("config is not valid JSON: ") + e.what());
    }
    RunContext ctx;
    ctx.base_dir = base_dir;
    ctx.seed = seed_override ? *seed_override : Cfg(config).get<std::uint64_t>("seed", 1);
    Outcome o = run_experiment(kind, config, ctx, ov);
    return {make_report(kind, config_bytes, config, ctx.seed, o), std::move(o)};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
    out << text;
}

/// report.json, one CSV per table, one JSON per artifact, and a
/// report.meta.json sidecar holding the wall-clock data.
inline void write_outputs(const std::filesystem::path& dir, const json& report, const Outcome& o, double seconds) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "--out: cannot create " + dir.string());
    write_file(dir / "report.json", report.dump(2) + "\n");
    for (const auto& t : o.tables) write_file(dir / (t.name + ".csv"), t.csv());
    for (const auto& [name, j] : o.artifacts) write_file(dir / (name + ".json"), j.dump(2) + "\n");
    const auto now = std::chrono::system_clock::now();
    json meta{{"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
              {"elapsed_seconds", seconds},
              {"threads", thread_count()}};
    write_file(dir / "report.meta.json", meta.dump(2) + "\n");
}

/// Exit code for a library error: 2 when the input was at fault.
inline int exit_code_for(ErrorCode c) {
    switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownSystem:
    case ErrorCode::InvalidSystem:
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidEpsilon:
    case ErrorCode::NonPositiveRadius:
    case ErrorCode::EmptySchedule:
    case ErrorCode::NonPositiveEntry:
    case ErrorCode::IllegalPoint:
    case ErrorCode::UnsupportedSystem:
    case ErrorCode::NotFixedPoint:
    case ErrorCode::FamilyMismatch: return 2;
    default: return 1;
    }
}

} // namespace ergolab::cli
