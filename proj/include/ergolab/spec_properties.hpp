#pragma once

// Finite-scale testers for the approximate product property, its strict
// variant and periodic exact specification, plus the minimality
// obstruction and the averages that make strict APP contradictory.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/sampling.hpp"
#include "ergolab/tracing.hpp"

namespace ergolab {

enum class CellOutcome { Certified, WitnessFound, NoWitness };

inline const char* to_string(CellOutcome o) {
    switch (o) {
    case CellOutcome::Certified: return "certified";
    case CellOutcome::WitnessFound: return "witness-found";
    case CellOutcome::NoWitness: return "no-witness-at-budget";
    }
    return "?";
}

inline bool passes(CellOutcome o) { return o != CellOutcome::NoWitness; }

struct PropertyGrid {
    std::vector<double> delta1 = {0.25};
    std::vector<double> delta2 = {0.1};
    std::vector<double> eps = {0.25};
    std::vector<std::size_t> n = {16, 32, 64};
    std::size_t blocks = 32;
    std::size_t trials = 2;
    SamplingPolicy policy = SamplingPolicy::Mixed;
    std::uint64_t seed = 1;

    void check(bool allow_zero_delta2) const {
        if (delta1.empty() || delta2.empty() || eps.empty() || n.empty())
            throw Error(ErrorCode::ConfigError, "grid lists must be nonempty");
        for (double v : delta1)
            if (!(v > 0)) throw Error(ErrorCode::ConfigError, "delta1 values must be positive");
        for (double v : delta2)
            if (!(v > 0 || (allow_zero_delta2 && v == 0))) throw Error(ErrorCode::ConfigError, "delta2 values must be positive");
        for (double v : eps)
            if (!(v > 0)) throw Error(ErrorCode::ConfigError, "eps values must be positive");
        for (auto v : n)
            if (v < 1) throw Error(ErrorCode::ConfigError, "n values must be >= 1");
        if (blocks < 1 || trials < 1) throw Error(ErrorCode::ConfigError, "blocks and trials must be >= 1");
    }
    void normalize() {
        std::sort(delta1.begin(), delta1.end());
        std::sort(delta2.begin(), delta2.end());
        std::sort(eps.begin(), eps.end());
        std::sort(n.begin(), n.end());
    }
};

struct CellResult {
    double delta1 = 0, delta2 = 0, eps = 0;
    std::size_t n = 0;
    std::optional<std::size_t> gap_M; // periodic exact specification: uniform gap M + 1
    CellOutcome outcome = CellOutcome::NoWitness;
    std::vector<TracingCertificate> certificates; // one per trial while passing
    bool reused = false;
    std::string note;
};

struct Threshold {
    double delta1 = 0, delta2 = 0, eps = 0;
    std::optional<std::size_t> M;
};

struct PropertyReport {
    std::string property;
    PropertyGrid grid;
    std::vector<CellResult> cells;
    std::vector<Threshold> thresholds;
    std::vector<std::pair<std::size_t, double>> pass_fraction_by_n;
    std::string trend;
};

struct TesterBudget {
    std::size_t candidates = 256;
    std::size_t beam = 256;
};

namespace detail {

/// Every distinct point of the density-zero shift up to its first
/// `horizon` symbols: 0^inf, 0^a 1 0^inf with a < horizon, and generator
/// shifts below 2*horizon (later shifts see at most one 1 in the window).
inline std::vector<Point> density_zero_cylinder_points(std::size_t horizon) {
    std::vector<Point> out{SymbolicPoint::periodic({0})};
    for (std::uint64_t o = 0; o <= 2 * horizon; ++o) out.push_back(SymbolicPoint::generator(o));
    for (std::size_t a = 0; a < horizon; ++a) {
        Word w(a, 0);
        w.push_back(1);
        out.push_back(SymbolicPoint(w, Word{0}));
    }
    return out;
}

inline CellOutcome outcome_of(const TracingCertificate& c) {
    return c.method == "candidate-search" ? CellOutcome::WitnessFound : CellOutcome::Certified;
}

/// A passing certificate from a dominated cell re-verified at new
/// parameters; the tracer and gaps are kept.
inline std::optional<TracingCertificate> reuse(const System& sys, const TracingCertificate& c, double delta1, double delta2,
                                                double eps) {
    TracingInstance inst = c.instance;
    inst.delta = delta2;
    inst.eps = eps;
    if (inst.schedule.max_gap() > max_gap(delta1, inst.schedule.lengths.front())) return std::nullopt;
    if (!is_traced(sys, c.tracer, inst).traced) return std::nullopt;
    TracingCertificate out = make_certificate(sys, c.tracer, std::move(inst), c.method);
    return out;
}

inline std::optional<TracingCertificate> find_certificate(const System& sys, const std::vector<Point>& targets, std::size_t n,
                                                          double delta1, double delta2, double eps, const TesterBudget& b) {
    const auto fixed = known_fixed_points(sys);
    if (delta2 > 0) {
        for (const auto& p : fixed) {
            if (auto c = fixed_point_certificate(sys, p, targets, n, delta2, eps)) return c;
        }
    }
    SearchParams sp;
    sp.n = n;
    sp.delta1 = delta1;
    sp.delta2 = delta2;
    sp.eps = eps;
    sp.budget = b.candidates;
    sp.beam = b.beam;
    if (std::holds_alternative<OrbitClosureShift>(sys.root().kind)) {
        const std::size_t horizon = targets.size() * (n + max_gap(delta1, n)) + agreement_length(sys, eps) + 1;
        sp.extra_candidates = density_zero_cylinder_points(horizon);
        sp.budget = sp.extra_candidates.size();
    } else {
        sp.extra_candidates = fixed;
    }
    return search_tracing_point(sys, targets, sp);
}

inline void summarize(PropertyReport& rep) {
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> byn;
    for (const auto& c : rep.cells) {
        auto& [pass, total] = byn[c.n];
        ++total;
        if (passes(c.outcome)) ++pass;
    }
    rep.pass_fraction_by_n.clear();
    std::string trend;
    for (auto& [n, pt] : byn) {
        const double f = static_cast<double>(pt.first) / static_cast<double>(pt.second);
        rep.pass_fraction_by_n.emplace_back(n, f);
        if (!trend.empty()) trend += ", ";
        trend += "n=" + std::to_string(n) + ": " + std::to_string(pt.first) + "/" + std::to_string(pt.second);
    }
    rep.trend = "passing cells by n: " + trend;
}

} // namespace detail

/// Runs the tracer search on every grid cell and trial. Cells are visited in
/// increasing (n, eps, delta2, delta1); a certificate from a dominated
/// passing cell is re-verified and reused before any new search.
inline PropertyReport test_app(const System& sys, PropertyGrid grid, const TesterBudget& budget = {}, bool strict = false) {
    if (strict) grid.delta2 = {0.0};
    grid.check(strict);
    grid.normalize();
    PropertyReport rep;
    rep.property = strict ? "strict_approximate_product" : "approximate_product";
    rep.grid = grid;

    for (std::size_t n : grid.n) {
        std::vector<std::vector<Point>> targets(grid.trials);
        for (std::size_t t = 0; t < grid.trials; ++t) targets[t] = sample_targets(sys, grid.blocks, n, t, grid.policy, grid.seed);
        std::vector<std::size_t> done; // indices into rep.cells for this n
        for (double eps : grid.eps)
            for (double d2 : grid.delta2)
                for (double d1 : grid.delta1) {
                    CellResult cell;
                    cell.delta1 = d1;
                    cell.delta2 = d2;
                    cell.eps = eps;
                    cell.n = n;
                    cell.outcome = CellOutcome::Certified;
                    bool reused_all = true;
                    for (std::size_t t = 0; t < grid.trials; ++t) {
                        std::optional<TracingCertificate> cert;
                        for (std::size_t idx : done) {
                            const auto& prev = rep.cells[idx];
                            if (!passes(prev.outcome) || prev.delta1 > d1 || prev.delta2 > d2 || prev.eps > eps) continue;
                            if ((cert = detail::reuse(sys, prev.certificates[t], d1, d2, eps))) break;
                        }
                        if (!cert) {
                            reused_all = false;
                            cert = detail::find_certificate(sys, targets[t], n, d1, d2, eps, budget);
                        }
                        if (!cert) {
                            cell.outcome = CellOutcome::NoWitness;
                            cell.certificates.clear();
                            cell.note = "trial " + std::to_string(t) + " has no tracer within budget";
                            break;
                        }
                        if (detail::outcome_of(*cert) == CellOutcome::WitnessFound) cell.outcome = CellOutcome::WitnessFound;
                        cell.certificates.push_back(std::move(*cert));
                    }
                    cell.reused = passes(cell.outcome) && reused_all;
                    done.push_back(rep.cells.size());
                    rep.cells.push_back(std::move(cell));
                }
    }
    for (double eps : grid.eps)
        for (double d2 : grid.delta2)
            for (double d1 : grid.delta1) {
                Threshold th{d1, d2, eps, std::nullopt};
                for (auto it = grid.n.rbegin(); it != grid.n.rend(); ++it) {
                    auto cell = std::find_if(rep.cells.begin(), rep.cells.end(), [&](const CellResult& c) {
                        return c.n == *it && c.eps == eps && c.delta1 == d1 && c.delta2 == d2;
                    });
                    if (!passes(cell->outcome)) break;
                    th.M = *it;
                }
                rep.thresholds.push_back(th);
            }
    detail::summarize(rep);
    return rep;
}

inline PropertyReport test_strict_app(const System& sys, PropertyGrid grid, const TesterBudget& budget = {}) {
    return test_app(sys, std::move(grid), budget, true);
}

// ---------------------------------------------------------------------------
// Periodic exact specification

struct PeriodicSpecParams {
    std::vector<std::vector<std::size_t>> profiles = {{4, 6, 5}, {8, 3}}; // block lengths per target sequence
    std::vector<double> eps = {0.5, 0.25};
    std::size_t max_gap_M = 8;
    std::size_t trials = 2;
    SamplingPolicy policy = SamplingPolicy::Mixed;
    std::uint64_t seed = 1;
    std::size_t max_period = 16; // interval maps: largest f^s scanned for periodic points
};

namespace detail {

/// Periodic tracer for an SFT: a cyclic word of length N*s spelling each
/// target's first N(m_k - 1) + L symbols at N*s_k.
inline std::optional<Point> sft_periodic_tracer(const System& sys, const std::vector<Point>& targets,
                                                const std::vector<std::size_t>& lengths, std::size_t M, double eps) {
    const auto matrix = sys.transition_matrix();
    const std::size_t N = static_cast<std::size_t>(sys.stride());
    const std::size_t L = agreement_length(sys, eps);
    std::size_t s = 0;
    for (auto m : lengths) s += m + M;
    const std::size_t P = N * s;
    std::vector<int> cyc(P, -1);
    std::size_t start = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const Word w = targets[k].symbolic().word(0, N * (lengths[k] - 1) + L);
        for (std::size_t i = 0; i < w.size(); ++i) {
            int& c = cyc[(N * start + i) % P];
            if (c >= 0 && c != w[i]) return std::nullopt;
            c = w[i];
        }
        start += lengths[k] + M;
    }
    std::vector<std::size_t> fixed;
    for (std::size_t i = 0; i < P; ++i)
        if (cyc[i] >= 0) fixed.push_back(i);
    if (fixed.empty()) return std::nullopt;
    for (std::size_t f = 0; f < fixed.size(); ++f) {
        const std::size_t i = fixed[f], j = fixed[(f + 1) % fixed.size()];
        const std::size_t gap = (j + P - i - 1) % P + 1; // steps from i to j going forward, P when i == j
        const std::size_t inner = gap - 1;
        auto br = sft_bridge(matrix, static_cast<Symbol>(cyc[i]), static_cast<Symbol>(cyc[j]), inner);
        if (!br) return std::nullopt;
        for (std::size_t q = 0; q < inner; ++q) cyc[(i + 1 + q) % P] = (*br)[q];
    }
    Word cycle(P);
    for (std::size_t i = 0; i < P; ++i) cycle[i] = static_cast<Symbol>(cyc[i]);
    return SymbolicPoint::periodic(cycle);
}

inline std::optional<Point> interval_periodic_tracer(const System& sys, const TracingInstance& inst, std::size_t period,
                                                     std::size_t max_period) {
    if (period > max_period) return std::nullopt;
    ScanParams sp;
    sp.grid = std::size_t{1} << 14;
    for (const auto& r : scan_periodic_roots(sys.interval_map(), static_cast<int>(period), sp)) {
        if (r.inconclusive) continue;
        Point z = r.point();
        if (is_traced(sys, z, inst).traced) return z;
    }
    return std::nullopt;
}

} // namespace detail

/// For each eps, the smallest uniform gap M + 1 at which a periodic tracer
/// of period sum(m_k + M) with zero mistakes exists for every sampled
/// target sequence and length profile.
inline PropertyReport test_periodic_exact_spec(const System& sys, const PeriodicSpecParams& pp) {
    const System& r = sys.root();
    if (std::holds_alternative<OrbitClosureShift>(r.kind))
        throw Error(ErrorCode::UnsupportedSystem, sys.name + " has no periodic structure to search");
    if (sys.is_rotation()) throw Error(ErrorCode::UnsupportedSystem, sys.name + " has no periodic points");
    if (!sys.is_sft() && !sys.is_interval()) throw Error(ErrorCode::UnsupportedSystem, "periodic search not available for " + sys.name);
    if (pp.profiles.empty() || pp.eps.empty()) throw Error(ErrorCode::ConfigError, "need profiles and eps values");
    for (const auto& prof : pp.profiles) {
        if (prof.empty()) throw Error(ErrorCode::ConfigError, "empty length profile");
        for (auto m : prof)
            if (m < 1) throw Error(ErrorCode::ConfigError, "block lengths must be >= 1");
    }

    PropertyReport rep;
    rep.property = "periodic_exact_specification";
    rep.grid.eps = pp.eps;
    rep.grid.delta2 = {0.0};
    rep.grid.trials = pp.trials;
    rep.grid.policy = pp.policy;
    rep.grid.seed = pp.seed;
    rep.grid.n.clear();
    for (const auto& prof : pp.profiles) rep.grid.n.push_back(*std::min_element(prof.begin(), prof.end()));

    for (double eps : pp.eps) {
        Threshold th{0, 0, eps, std::nullopt};
        for (std::size_t M = 0; M <= pp.max_gap_M; ++M) {
            CellResult cell;
            cell.eps = eps;
            cell.gap_M = M;
            cell.outcome = CellOutcome::Certified;
            for (std::size_t pi = 0; pi < pp.profiles.size() && passes(cell.outcome); ++pi) {
                const auto& prof = pp.profiles[pi];
                cell.n = std::max(cell.n, *std::max_element(prof.begin(), prof.end()));
                for (std::size_t t = 0; t < pp.trials; ++t) {
                    const std::size_t trial = t == 0 ? 0 : t + 1000 * pi;
                    auto targets = sample_targets(sys, prof.size(), prof.front(), trial, pp.policy, pp.seed);
                    TracingInstance inst{targets, GapSchedule{prof, std::vector<std::size_t>(prof.size() - 1, M + 1)}, 0.0, eps};
                    std::size_t period = 0;
                    for (auto m : prof) period += m + M;
                    std::optional<Point> z = sys.is_sft() ? detail::sft_periodic_tracer(sys, targets, prof, M, eps)
                                                          : detail::interval_periodic_tracer(sys, inst, period, pp.max_period);
                    if (z && !(is_traced(sys, *z, inst).traced && dist(sys, iterate(sys, *z, period), *z) == 0.0)) z.reset();
                    if (!z) {
                        cell.outcome = CellOutcome::NoWitness;
                        cell.certificates.clear();
                        cell.note = "profile " + std::to_string(pi) + ", trial " + std::to_string(t) + ": no periodic tracer";
                        break;
                    }
                    cell.certificates.push_back(make_certificate(sys, *z, inst, "periodic"));
                }
            }
            const bool ok = passes(cell.outcome);
            rep.cells.push_back(std::move(cell));
            if (ok) {
                th.M = M;
                break;
            }
        }
        rep.thresholds.push_back(th);
    }
    std::string trend;
    for (const auto& th : rep.thresholds) {
        if (!trend.empty()) trend += ", ";
        trend += "eps=" + std::to_string(th.eps) + ": M=" + (th.M ? std::to_string(*th.M) : std::string("none up to ") + std::to_string(pp.max_gap_M));
    }
    rep.trend = trend;
    return rep;
}

// ---------------------------------------------------------------------------
// Minimality obstruction and strict-APP averages

struct Obstruction {
    Point x, x_prime;
    double gamma = 0;
    double min_distance = 0;
};

/// First ordered pair (x, x') of samples, scanning the gamma grid from the
/// largest value down, whose orbit segment f^0..f^n(x) stays >= gamma away
/// from x'.
inline std::optional<Obstruction> minimality_obstruction(const System& sys, const std::vector<Point>& samples, std::size_t horizon,
                                                         std::vector<double> gammas) {
    if (horizon < 1) throw Error(ErrorCode::InvalidParams, "horizon must be >= 1");
    std::sort(gammas.rbegin(), gammas.rend());
    const std::size_t S = samples.size();
    std::vector<double> mind(S * S, INFINITY);
    parallel_for(S, [&](std::size_t i) {
        Point y = samples[i];
        for (std::size_t j = 0; j <= horizon; ++j) {
            for (std::size_t k = 0; k < S; ++k) mind[i * S + k] = std::min(mind[i * S + k], dist(sys, y, samples[k]));
            if (j < horizon) y = step_unchecked(sys, y);
        }
    });
    for (double g : gammas)
        for (std::size_t i = 0; i < S; ++i)
            for (std::size_t k = 0; k < S; ++k)
                if (mind[i * S + k] >= g) return Obstruction{samples[i], samples[k], g, mind[i * S + k]};
    return std::nullopt;
}

struct ContradictionQuantities {
    double left_average = 0;               // Birkhoff average of the bump along x
    std::optional<double> tracer_average;  // average along the tracer up to the last start
    std::optional<double> start_ratio;     // (K - 1) / s_K
    double lower_bound = 0;                // 1 / (2m)
};

/// The two sides of the contradiction: phi = bump(x', eps) averages to ~0
/// along x, while a zero-mistake tracer of targets x' visits B(x', eps) at
/// every start time, so its average up to s_K is at least (K-1)/s_K >= 1/(2m)
/// when gaps are at most 1 + m.
inline ContradictionQuantities strict_app_contradiction_quantities(const System& sys, const Point& x, const Point& x_prime,
                                                                   double gamma, double eps, std::size_t m, std::size_t horizon,
                                                                   const TracingCertificate* cert = nullptr) {
    if (!(eps > 0 && eps < gamma / 3)) throw Error(ErrorCode::InvalidEpsilon, "eps must lie in (0, gamma/3)");
    if (m < 1 || horizon < 1) throw Error(ErrorCode::InvalidParams, "m and horizon must be >= 1");
    const TestFunction phi = bump_function(x_prime, eps);
    ContradictionQuantities q;
    q.lower_bound = 1.0 / (2.0 * static_cast<double>(m));
    double sum = 0;
    Point y = x;
    for (std::size_t j = 0; j < horizon; ++j) {
        sum += phi(sys, y);
        if (j + 1 < horizon) y = step_unchecked(sys, y);
    }
    q.left_average = sum / static_cast<double>(horizon);
    if (cert) {
        const auto s = cert->instance.schedule.starts();
        const std::uint64_t sK = s.back();
        if (sK > 0) {
            double zs = 0;
            Point z = cert->tracer;
            for (std::uint64_t j = 0; j < sK; ++j) {
                zs += phi(sys, z);
                z = step_unchecked(sys, z);
            }
            q.tracer_average = zs / static_cast<double>(sK);
            q.start_ratio = static_cast<double>(s.size() - 1) / static_cast<double>(sK);
        }
    }
    return q;
}

// ---------------------------------------------------------------------------
// Reports

inline json property_report_to_json(const System& sys, const PropertyReport& rep, bool with_certificates = true) {
    json j;
    j["property"] = rep.property;
    j["system"] = system_to_json(sys);
    j["grid"] = {{"delta1", rep.grid.delta1}, {"delta2", rep.grid.delta2}, {"eps", rep.grid.eps},  {"n", rep.grid.n},
                 {"blocks", rep.grid.blocks}, {"trials", rep.grid.trials}, {"policy", to_string(rep.grid.policy)},
                 {"seed", rep.grid.seed}};
    json cells = json::array();
    for (const auto& c : rep.cells) {
        json jc{{"delta1", c.delta1}, {"delta2", c.delta2}, {"eps", c.eps},
                {"n", c.n},           {"outcome", to_string(c.outcome)}, {"reused", c.reused}};
        if (c.gap_M) jc["M"] = *c.gap_M;
        if (!c.note.empty()) jc["note"] = c.note;
        if (with_certificates) {
            json certs = json::array();
            for (const auto& cert : c.certificates) {
                json jc2 = certificate_to_json(sys, cert);
                jc2.erase("system");
                certs.push_back(jc2);
            }
            jc["certificates"] = certs;
        }
        cells.push_back(jc);
    }
    j["cells"] = cells;
    json th = json::array();
    for (const auto& t : rep.thresholds) {
        json jt{{"delta1", t.delta1}, {"delta2", t.delta2}, {"eps", t.eps}};
        jt["M"] = t.M ? json(*t.M) : json(nullptr);
        th.push_back(jt);
    }
    j["empirical_M"] = th;
    j["trend"] = rep.trend;
    return j;
}

} // namespace ergolab
