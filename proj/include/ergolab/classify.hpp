#pragma once

// Zero-entropy classification of interval maps: a unique attracting fixed
// point, cross-checked against entropy slopes, measure clusters and
// fixed-point tracing.

#include <string>
#include <vector>

#include "ergolab/entropy.hpp"
#include "ergolab/interval.hpp"
#include "ergolab/measures.hpp"
#include "ergolab/spec_properties.hpp"

namespace ergolab {

struct ClassifyParams {
    int period_bound = 8;
    ScanParams scan{4096, 1e-10};
    AttractionParams attraction;
    double entropy_eps = 1e-3;
    std::vector<std::size_t> entropy_n = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18};
    std::size_t entropy_pool = std::size_t{1} << 20;
    double app_delta1 = 0.25, app_delta2 = 0.1, app_eps = 0.1;
    std::size_t app_n = 512, app_blocks = 32, app_trials = 2;
    std::size_t measure_starts = 8, measure_length = 2000;
    double eta = 0.05;
    std::uint64_t seed = 1;
};

struct ClassifyVerdict {
    PeriodicCensus census;
    std::optional<FixedPointRecord> attractor; // the unique fixed point with its attraction verdict
    bool characterization = false;
    std::vector<std::string> reasons;          // why the characterization fails
    EntropyEstimate entropy;
    MeasureClusters clusters;
    std::optional<PropertyReport> app;         // fixed-point tracing cells
    bool app_passes = false;
    std::optional<FnxgexReport> fnxgex;
    std::string scope;
};

inline ClassifyVerdict classify_zero_entropy_app(const System& sys, const ClassifyParams& p = {}) {
    if (!sys.is_interval()) throw Error(ErrorCode::UnsupportedSystem, "classification needs an interval map");
    ClassifyVerdict v;
    v.census = periodic_census(sys, p.period_bound, p.scan);
    v.scope = "up to period " + std::to_string(p.period_bound) + " at resolution " + std::to_string(p.scan.grid);

    if (v.census.fixed.size() != 1) v.reasons.push_back(std::to_string(v.census.fixed.size()) + " fixed points");
    else if (v.census.fixed.front().inconclusive) v.reasons.push_back("fixed-point scan inconclusive");
    if (!v.census.no_higher_periods()) v.reasons.push_back(std::to_string(v.census.higher.size()) + " higher-period points");
    if (v.census.fixed.size() == 1 && !v.census.fixed.front().inconclusive) {
        FixedPointRecord r = v.census.fixed.front();
        is_attracting(sys, r, p.attraction);
        if (r.attraction != Attraction::Attracting) v.reasons.push_back(std::string("fixed point ") + to_string(r.attraction));
        v.attractor = r;
    }
    v.characterization = v.reasons.empty();

    SeparationBudget sb;
    sb.pool = p.entropy_pool;
    sb.seed = p.seed;
    v.entropy = entropy_estimate(sys, {p.entropy_eps}, p.entropy_n, SeparationMethod::Greedy, sb);

    // measures from the located fixed points and interior rational starts
    std::vector<OrbitSpec> specs;
    for (const auto& r : v.census.fixed)
        if (!r.inconclusive) specs.push_back({r.point(), p.measure_length});
    for (std::size_t k = 1; k <= p.measure_starts; ++k) specs.push_back({start_point(sys.interval_map(), k, p.measure_starts), p.measure_length});
    v.clusters = detect_measure_multiplicity(sys, specs, p.eta, default_family(sys));

    if (v.attractor) {
        PropertyGrid g;
        g.delta1 = {p.app_delta1};
        g.delta2 = {p.app_delta2};
        g.eps = {p.app_eps};
        g.n = {p.app_n};
        g.blocks = p.app_blocks;
        g.trials = p.app_trials;
        g.seed = p.seed;
        v.app = test_app(sys, g);
        v.app_passes = std::all_of(v.app->cells.begin(), v.app->cells.end(), [](const CellResult& c) { return passes(c.outcome); });
    }
    if (v.characterization) {
        FnxgexParams fp;
        fp.period_bound = p.period_bound;
        fp.scan = p.scan;
        v.fnxgex = check_fnxgex(sys, *v.attractor, fp);
    }
    return v;
}

inline json fixed_point_to_json(const FixedPointRecord& r) {
    json j{{"location", r.location}, {"bracket", {r.lo, r.hi}}, {"inconclusive", r.inconclusive}, {"attraction", to_string(r.attraction)}};
    if (r.exact) j["exact"] = r.exact->str();
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline json entropy_to_json(const EntropyEstimate& e) {
    json rows = json::array();
    for (const auto& r : e.rows)
        rows.push_back({{"n", r.n}, {"eps", r.eps}, {"count", r.count}, {"log_count", r.log_count}, {"saturated", r.saturated},
                        {"method", to_string(r.method)}});
    json per = json::array();
    for (const auto& p : e.per_eps) {
        json x{{"eps", p.eps}, {"slope", p.slope}, {"raw_slope", p.raw_slope}, {"rms_residual", p.rms_residual}, {"fitted", p.fitted}};
        if (p.fitted) x["fit_window"] = {p.fit_from, p.fit_to};
        if (!p.note.empty()) x["note"] = p.note;
        per.push_back(x);
    }
    json j{{"rows", rows}, {"per_eps", per}, {"estimate", e.estimate}};
    if (e.word_count_fit) j["word_count_slope"] = e.word_count_fit->slope;
    return j;
}

inline json clusters_to_json(const MeasureClusters& c) {
    return {{"eta", c.eta}, {"count", c.count()}, {"clusters", c.clusters}, {"distance", c.distance}};
}

inline json classify_to_json(const System& sys, const ClassifyVerdict& v) {
    json fixed = json::array();
    for (const auto& r : v.census.fixed) fixed.push_back(fixed_point_to_json(r));
    json higher = json::array();
    for (const auto& [q, r] : v.census.higher) {
        json x = fixed_point_to_json(r);
        x["period"] = q;
        higher.push_back(x);
    }
    json j{{"system", system_to_json(sys)},
           {"characterization", v.characterization},
           {"reasons", v.reasons},
           {"scope", v.scope},
           {"fixed_points", fixed},
           {"higher_period_points", higher},
           {"entropy", entropy_to_json(v.entropy)},
           {"clusters", clusters_to_json(v.clusters)},
           {"app_passes", v.app_passes}};
    if (v.attractor) j["attractor"] = fixed_point_to_json(*v.attractor);
    if (v.app) j["app"] = property_report_to_json(sys, *v.app, false);
    if (v.fnxgex)
        j["fnxgex"] = {{"hypothesis_met", v.fnxgex->hypothesis_met},
                       {"hypothesis_note", v.fnxgex->hypothesis_note},
                       {"checked", v.fnxgex->checked},
                       {"violations", v.fnxgex->violations.size()}};
    return j;
}

} // namespace ergolab
