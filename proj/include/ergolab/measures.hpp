#pragma once

// Empirical invariant measures, a weighted test-function metric for the
// weak-* topology, Birkhoff-spread tests and single-linkage clustering.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ergolab/parallel.hpp"
#include "ergolab/sampling.hpp"

namespace ergolab {

struct EmpiricalMeasure {
    std::string system;
    Point base;
    std::vector<Point> support; // weight 1/n each
    std::size_t size() const { return support.size(); }
};

inline EmpiricalMeasure empirical_measure(const System& sys, const Point& x, std::size_t n) {
    if (n < 1) throw Error(ErrorCode::InvalidParams, "n must be >= 1");
    return {sys.name, x, orbit_segment(sys, x, n).states};
}

inline double integrate(const System& sys, const EmpiricalMeasure& mu, const TestFunction& phi) {
    double s = 0;
    for (const auto& y : mu.support) s += phi(sys, y);
    return s / static_cast<double>(mu.size());
}

/// (1/n) sum_{k<n} phi(f^k x), computed along the orbit without storing it.
inline double birkhoff_average(const System& sys, const Point& x, std::size_t n, const TestFunction& phi) {
    if (n < 1) throw Error(ErrorCode::InvalidParams, "n must be >= 1");
    double s = 0;
    Point y = x;
    for (std::size_t k = 0; k < n; ++k) {
        s += phi(sys, y);
        if (k + 1 < n) y = step_unchecked(sys, y);
    }
    return s / static_cast<double>(n);
}

/// phi_1, phi_2, ... with weights 1/2, 1/4, ...; every phi is bounded by 1.
struct TestFunctionFamily {
    std::vector<TestFunction> functions;
    std::vector<std::string> labels;

    double weight(std::size_t i) const { return std::ldexp(1.0, -static_cast<int>(i) - 1); }
    std::size_t size() const { return functions.size(); }
    void check() const {
        if (functions.size() < 4) throw Error(ErrorCode::InvalidParams, "a test-function family needs at least 4 members");
        if (functions.size() > 60) throw Error(ErrorCode::InvalidParams, "a test-function family is capped at 60 members");
    }
};

namespace detail {

inline void add_center(const System& sys, std::vector<Point>& centers, const Point& p) {
    for (const auto& c : centers)
        if (dist(sys, c, p) < 1e-12) return;
    centers.push_back(p);
}

} // namespace detail

/// Bump centers for a system: known fixed points, the adversarial pair, then
/// a deterministic fill (short legal cylinders or an even grid).
inline std::vector<Point> landmarks(const System& sys, std::size_t count = 8) {
    std::vector<Point> centers;
    for (const auto& p : known_fixed_points(sys)) detail::add_center(sys, centers, p);
    try {
        auto [a, b] = adversarial_pair(sys);
        detail::add_center(sys, centers, a);
        detail::add_center(sys, centers, b);
    } catch (const Error&) {
    }
    if (sys.is_symbolic()) {
        const int k = sys.alphabet();
        for (std::size_t len = 1; len <= 6 && centers.size() < count; ++len) {
            std::size_t all = 1;
            for (std::size_t i = 0; i < len; ++i) all *= static_cast<std::size_t>(k);
            for (std::size_t code = 0; code < all && centers.size() < count; ++code) {
                Word w(len);
                std::size_t c = code;
                for (std::size_t i = 0; i < len; ++i, c /= k) w[len - 1 - i] = static_cast<Symbol>(c % k);
                if (!word_legal(sys, w)) continue;
                detail::add_center(sys, centers, extend_word(sys, w));
            }
        }
    } else if (sys.is_rotation() || sys.is_interval()) {
        for (std::size_t den = 2; centers.size() < count && den < 64; den *= 2)
            for (std::size_t i = 1; i < den && centers.size() < count; i += 2) {
                const double t = static_cast<double>(i) / static_cast<double>(den);
                if (sys.is_rotation()) {
                    detail::add_center(sys, centers, Point::circle(t));
                } else {
                    const auto& m = sys.interval_map();
                    Rational q = m.lo + (m.hi - m.lo) * Rational(static_cast<long long>(i), static_cast<long long>(den));
                    detail::add_center(sys, centers, m.exact() ? Point(RealPoint::from_rational(q)) : Point(RealPoint::inexact(to_double(q))));
                }
            }
    }
    if (centers.size() > count) centers.resize(count);
    return centers;
}

/// Bumps of radius 0.2 around the landmarks, then four coordinate harmonics
/// for interval and circle systems.
inline TestFunctionFamily default_family(const System& sys, double radius = 0.2) {
    TestFunctionFamily fam;
    for (const auto& c : landmarks(sys, 8)) {
        fam.functions.push_back(bump_function(c, radius));
        fam.labels.push_back("bump");
    }
    if (sys.is_interval() || sys.is_rotation())
        for (int k = 1; k <= 4; ++k) {
            fam.functions.push_back(harmonic_function(k));
            fam.labels.push_back("cos" + std::to_string(k));
        }
    while (fam.functions.size() < 4) {
        fam.functions.push_back(constant_function(1.0));
        fam.labels.push_back("const");
    }
    return fam;
}

/// Integrals of every phi_i, in family order.
inline std::vector<double> moments(const System& sys, const EmpiricalMeasure& mu, const TestFunctionFamily& fam) {
    std::vector<double> out(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) out[i] = integrate(sys, mu, fam.functions[i]);
    return out;
}

inline double weak_star_distance(const std::vector<double>& a, const std::vector<double>& b, const TestFunctionFamily& fam) {
    if (a.size() != fam.size() || b.size() != fam.size()) throw Error(ErrorCode::FamilyMismatch, "moment vectors do not match the family");
    double d = 0;
    for (std::size_t i = 0; i < fam.size(); ++i) d += fam.weight(i) * std::fabs(a[i] - b[i]);
    return d;
}

/// D(mu, nu) = sum_i 2^-i |int phi_i dmu - int phi_i dnu|.
inline double weak_star_distance(const System& sys, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const TestFunctionFamily& fam) {
    if (mu.system != nu.system || mu.system != sys.name) throw Error(ErrorCode::FamilyMismatch, "measures live on different systems");
    return weak_star_distance(moments(sys, mu, fam), moments(sys, nu, fam), fam);
}

/// Upper bound on D between the measures of (x, n) and (f x, n).
inline double pushforward_bound(const TestFunctionFamily& fam, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < fam.size(); ++i) s += fam.weight(i);
    return 2.0 * s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Unique ergodicity

struct UniqueErgodicityParams {
    double threshold = 0.05;
    double improvement = 2.0;
};

struct UniqueErgodicityReport {
    std::vector<std::size_t> ns;
    std::vector<Point> starts;
    std::vector<std::vector<std::vector<double>>> averages; // [n][start][phi]
    std::vector<double> spread;                             // per n: max over phi of (max - min over starts)
    std::vector<std::size_t> worst_function;                // per n
    double improvement = 0;                                 // spread(first n) / spread(last n)
    bool consistent = false;
    std::string verdict;
};

/// Seeded start points: legal random points from independent streams.
inline std::vector<Point> random_starts(const System& sys, std::size_t count, std::uint64_t seed, std::size_t scale = 64) {
    std::vector<Point> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = stream(seed, 0x5eed, i);
        out.push_back(random_point(sys, rng, scale));
    }
    return out;
}

inline UniqueErgodicityReport unique_ergodicity_test(const System& sys, const TestFunctionFamily& fam, const std::vector<Point>& starts,
                                                     const std::vector<std::size_t>& ns, const UniqueErgodicityParams& p = {}) {
    if (starts.size() < 8) throw Error(ErrorCode::InvalidParams, "need at least 8 start points");
    if (ns.empty() || ns.front() < 1 || !std::is_sorted(ns.begin(), ns.end()) ||
        std::adjacent_find(ns.begin(), ns.end()) != ns.end())
        throw Error(ErrorCode::InvalidParams, "n list must be strictly increasing and positive");
    fam.check();
    UniqueErgodicityReport rep;
    rep.ns = ns;
    rep.starts = starts;
    rep.averages.assign(ns.size(), std::vector<std::vector<double>>(starts.size(), std::vector<double>(fam.size(), 0.0)));
    // one pass per start with running sums, read off at each n
    parallel_for(starts.size(), [&](std::size_t s) {
        std::vector<double> sum(fam.size(), 0.0);
        Point y = starts[s];
        std::size_t k = 0;
        for (std::size_t ni = 0; ni < ns.size(); ++ni) {
            for (; k < ns[ni]; ++k) {
                for (std::size_t i = 0; i < fam.size(); ++i) sum[i] += fam.functions[i](sys, y);
                y = step_unchecked(sys, y);
            }
            for (std::size_t i = 0; i < fam.size(); ++i) rep.averages[ni][s][i] = sum[i] / static_cast<double>(ns[ni]);
        }
    });
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        double worst = 0;
        std::size_t wi = 0;
        for (std::size_t i = 0; i < fam.size(); ++i) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t s = 0; s < starts.size(); ++s) {
                lo = std::min(lo, rep.averages[ni][s][i]);
                hi = std::max(hi, rep.averages[ni][s][i]);
            }
            if (hi - lo > worst) {
                worst = hi - lo;
                wi = i;
            }
        }
        rep.spread.push_back(worst);
        rep.worst_function.push_back(wi);
    }
    const double first = rep.spread.front(), last = rep.spread.back();
    rep.improvement = last > 0 ? first / last : INFINITY;
    const bool small = last < p.threshold;
    // A spread that is already negligible needs no further improvement.
    const bool improving = last <= 1e-12 || (ns.size() > 1 && rep.improvement >= p.improvement);
    rep.consistent = small && improving;
    rep.verdict = rep.consistent ? "consistent with unique ergodicity" : small ? "spread small but not improving" : "not uniquely ergodic at tested scales";
    return rep;
}

// ---------------------------------------------------------------------------
// Multiplicity of measures

struct OrbitSpec {
    Point start;
    std::size_t n = 1000;
};

struct MeasureClusters {
    std::vector<std::vector<std::size_t>> clusters; // ordered by smallest member index
    std::vector<std::vector<double>> distance;      // pairwise D
    std::vector<std::vector<double>> moments;       // per orbit
    double eta = 0;
    std::size_t count() const { return clusters.size(); }
};

/// Single-linkage clusters: orbits i and j are linked when D <= 2 eta.
inline MeasureClusters detect_measure_multiplicity(const System& sys, const std::vector<OrbitSpec>& specs, double eta,
                                                   const TestFunctionFamily& fam) {
    if (specs.size() < 2) throw Error(ErrorCode::InvalidParams, "need at least two orbits");
    if (!(eta > 0)) throw Error(ErrorCode::InvalidParams, "eta must be positive");
    fam.check();
    const std::size_t K = specs.size();
    MeasureClusters out;
    out.eta = eta;
    out.moments.resize(K);
    parallel_for(K, [&](std::size_t i) { out.moments[i] = moments(sys, empirical_measure(sys, specs[i].start, specs[i].n), fam); });
    out.distance.assign(K, std::vector<double>(K, 0.0));
    std::vector<std::size_t> parent(K);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = i + 1; j < K; ++j) {
            const double d = weak_star_distance(out.moments[i], out.moments[j], fam);
            out.distance[i][j] = out.distance[j][i] = d;
            if (d <= 2 * eta) {
                const auto a = find(i), b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    std::vector<std::ptrdiff_t> slot(K, -1);
    for (std::size_t i = 0; i < K; ++i) {
        const auto r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<std::ptrdiff_t>(out.clusters.size());
            out.clusters.emplace_back();
        }
        out.clusters[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return out;
}

} // namespace ergolab
