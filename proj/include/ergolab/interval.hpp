#pragma once

// Fixed and periodic points of interval maps, attraction and the
// f^n(x) > x test on either side of a fixed point.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/parallel.hpp"
#include "ergolab/systems.hpp"

namespace ergolab {

enum class Attraction { Attracting, NotAttracting, Inconclusive };

inline const char* to_string(Attraction a) {
    switch (a) {
    case Attraction::Attracting: return "attracting-on-samples";
    case Attraction::NotAttracting: return "not-attracting";
    case Attraction::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct FixedPointRecord {
    double location = 0.0;
    double lo = 0.0, hi = 0.0;        // bracket
    double g_lo = 0.0, g_hi = 0.0;    // f^q(x) - x at the bracket ends
    std::optional<Rational> exact;    // set when f^q(p) = p holds in exact arithmetic
    bool inconclusive = false;
    std::string note;
    Attraction attraction = Attraction::Inconclusive;
    std::vector<double> basin_starts;
    std::vector<char> basin_converged;

    Point point() const { return exact ? Point(RealPoint::from_rational(*exact)) : Point(RealPoint::inexact(location)); }
};

struct ScanParams {
    std::size_t grid = 4096;
    double tol = 1e-10;
};

namespace detail {

inline double iterate_d(const IntervalMap& m, double x, int q) {
    for (int i = 0; i < q; ++i) x = std::clamp(m.eval(x), m.lo_d(), m.hi_d());
    return x;
}

inline Rational iterate_q(const IntervalMap& m, Rational x, int q) {
    for (int i = 0; i < q; ++i) x = m.eval(x);
    return x;
}

/// Upgrades a located root of f^q(x) - x to an exact rational when the map
/// is piecewise affine and the local affine solve checks out exactly.
inline std::optional<Rational> exact_root(const IntervalMap& m, double p, int q) {
    if (!m.exact()) return std::nullopt;
    if (Rational x0 = rational_from_double(p); iterate_q(m, x0, q) == x0) return x0;
    const Rational h(1, 1 << 20);
    Rational x0 = rational_from_double(p);
    Rational a = std::max<Rational>(m.lo, x0 - h), b = std::min<Rational>(m.hi, x0 + h);
    if (a == b) return std::nullopt;
    Rational fa = iterate_q(m, a, q), fb = iterate_q(m, b, q);
    Rational slope = (fb - fa) / (b - a);
    if (slope == 1) return std::nullopt;
    Rational x = (fa - slope * a) / (1 - slope);
    if (x < m.lo || x > m.hi) return std::nullopt;
    if (iterate_q(m, x, q) != x) return std::nullopt;
    return x;
}

} // namespace detail

/// Roots of f^q(x) - x located by a grid scan and bisection. A run of three
/// or more grid points where |f^q(x) - x| <= tol is reported once as an
/// inconclusive continuum.
inline std::vector<FixedPointRecord> scan_periodic_roots(const IntervalMap& m, int q, const ScanParams& sp) {
    if (sp.grid < 2) throw Error(ErrorCode::InvalidParams, "grid needs at least 2 points");
    if (q < 1) throw Error(ErrorCode::InvalidParams, "period must be >= 1");
    const double lo = m.lo_d(), hi = m.hi_d();
    const std::size_t R = sp.grid - 1;
    auto xs = [&](std::size_t i) { return i == R ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(R); };
    auto g = [&](double x) { return detail::iterate_d(m, x, q) - x; };
    std::vector<double> gv(sp.grid);
    for (std::size_t i = 0; i <= R; ++i) gv[i] = g(xs(i));
    auto zero = [&](double v) { return std::fabs(v) <= sp.tol; };

    std::vector<FixedPointRecord> out;
    for (std::size_t i = 0; i <= R;) {
        if (zero(gv[i])) {
            std::size_t j = i;
            while (j + 1 <= R && zero(gv[j + 1])) ++j;
            FixedPointRecord r;
            r.lo = xs(i);
            r.hi = xs(j);
            r.g_lo = gv[i];
            r.g_hi = gv[j];
            if (j - i + 1 >= 3) {
                r.location = 0.5 * (r.lo + r.hi);
                r.inconclusive = true;
                r.note = "continuum of solutions";
            } else {
                r.location = std::fabs(gv[i]) <= std::fabs(gv[j]) ? xs(i) : xs(j);
            }
            out.push_back(r);
            i = j + 1;
            continue;
        }
        if (i < R && !zero(gv[i + 1]) && ((gv[i] < 0) != (gv[i + 1] < 0))) {
            double a = xs(i), b = xs(i + 1), ga = gv[i];
            for (int it = 0; it < 200 && b - a > sp.tol; ++it) {
                double mid = 0.5 * (a + b), gm = g(mid);
                if (gm == 0.0) {
                    a = b = mid;
                    break;
                }
                if ((gm < 0) == (ga < 0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            FixedPointRecord r;
            r.lo = a;
            r.hi = b;
            r.g_lo = g(a);
            r.g_hi = g(b);
            r.location = 0.5 * (a + b);
            out.push_back(r);
        }
        ++i;
    }
    for (auto& r : out) {
        if (r.inconclusive) continue;
        r.exact = detail::exact_root(m, r.location, q);
        if (r.exact) r.location = to_double(*r.exact);
    }
    // distinct records can converge to one root from adjacent cells
    std::vector<FixedPointRecord> dedup;
    for (auto& r : out)
        if (dedup.empty() || dedup.back().inconclusive || r.inconclusive || std::fabs(dedup.back().location - r.location) > 10 * sp.tol)
            dedup.push_back(std::move(r));
    if (dedup.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i <= R; ++i)
            if (std::fabs(gv[i]) < std::fabs(gv[best])) best = i;
        FixedPointRecord r;
        r.location = r.lo = r.hi = xs(best);
        r.g_lo = r.g_hi = gv[best];
        r.inconclusive = true;
        r.note = "no sign change found; closest grid point";
        dedup.push_back(r);
    }
    return dedup;
}

inline std::vector<FixedPointRecord> find_fixed_points(const System& sys, const ScanParams& sp = {}) {
    return scan_periodic_roots(sys.interval_map(), 1, sp);
}

/// Points of least period q: roots of f^q(x) = x that are not roots for a
/// proper divisor of q.
inline std::vector<FixedPointRecord> find_periodic_points(const System& sys, int q, const ScanParams& sp = {}) {
    const auto& m = sys.interval_map();
    auto all = scan_periodic_roots(m, q, sp);
    if (q == 1) return all;
    std::vector<FixedPointRecord> lower;
    for (int d = 1; d < q; ++d)
        if (q % d == 0) {
            auto v = scan_periodic_roots(m, d, sp);
            lower.insert(lower.end(), v.begin(), v.end());
        }
    const double same = std::max(1e-7, 100 * sp.tol);
    std::vector<FixedPointRecord> out;
    for (auto& r : all) {
        bool old = std::any_of(lower.begin(), lower.end(), [&](const FixedPointRecord& l) {
            if (r.exact && l.exact) return *r.exact == *l.exact;
            if (l.inconclusive) return r.location >= l.lo - same && r.location <= l.hi + same;
            return std::fabs(l.location - r.location) <= same;
        });
        if (!old) out.push_back(std::move(r));
    }
    return out;
}

struct AttractionParams {
    std::size_t samples = 64;
    std::size_t horizon = 1000;
    double tol = 1e-9;
    double escape = 1e-3; // distance that counts as leaving p over the final half
};

inline std::vector<double> sample_starts(const IntervalMap& m, std::size_t S) {
    std::vector<double> xs;
    for (std::size_t k = 1; k <= S; ++k)
        xs.push_back(m.lo_d() + (m.hi_d() - m.lo_d()) * static_cast<double>(k) / static_cast<double>(S + 1));
    return xs;
}

inline Point start_point(const IntervalMap& m, std::size_t k, std::size_t S) {
    if (m.exact()) return RealPoint::from_rational(m.lo + (m.hi - m.lo) * Rational(static_cast<long long>(k), static_cast<long long>(S + 1)));
    return RealPoint::inexact(m.lo_d() + (m.hi_d() - m.lo_d()) * static_cast<double>(k) / static_cast<double>(S + 1));
}

/// Attracting-on-samples when every start ends within tol of p with
/// non-increasing distance over the second half of the horizon;
/// not-attracting when some orbit is farther than `escape` from p somewhere
/// in that half.
inline Attraction is_attracting(const System& sys, FixedPointRecord& p, const AttractionParams& ap = {}) {
    const auto& m = sys.interval_map();
    if (std::fabs(m.eval(p.location) - p.location) > std::max(ap.tol, 1e-12))
        throw Error(ErrorCode::NotFixedPoint, "not a fixed point at " + std::to_string(p.location));
    const std::size_t S = ap.samples, n = ap.horizon;
    std::vector<char> converged(S, 0), escaped(S, 0);
    const Point target = p.point();
    parallel_for(S, [&](std::size_t i) {
        Point x = start_point(m, i + 1, S);
        double prev = INFINITY, worst = 0.0;
        bool monotone = true;
        for (std::size_t j = 0; j <= n; ++j) {
            double d = dist(sys, x, target);
            if (j >= n / 2) {
                worst = std::max(worst, d);
                if (d > prev + 1e-15) monotone = false;
                prev = d;
            }
            if (j < n) x = step_unchecked(sys, x);
        }
        converged[i] = (prev <= ap.tol && monotone) ? 1 : 0;
        escaped[i] = worst > ap.escape ? 1 : 0;
    });
    p.basin_starts = sample_starts(m, S);
    p.basin_converged = converged;
    if (std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; }))
        p.attraction = Attraction::Attracting;
    else if (std::any_of(escaped.begin(), escaped.end(), [](char c) { return c != 0; }))
        p.attraction = Attraction::NotAttracting;
    else
        p.attraction = Attraction::Inconclusive;
    return p.attraction;
}

struct PeriodicCensus {
    std::vector<FixedPointRecord> fixed;
    std::vector<std::pair<int, FixedPointRecord>> higher; // (least period, point)
    int period_bound = 8;
    std::size_t grid = 4096;

    bool unique_fixed_point() const { return fixed.size() == 1 && !fixed.front().inconclusive; }
    bool no_higher_periods() const { return higher.empty(); }
};

inline PeriodicCensus periodic_census(const System& sys, int period_bound = 8, const ScanParams& sp = {}) {
    PeriodicCensus c;
    c.period_bound = period_bound;
    c.grid = sp.grid;
    c.fixed = find_fixed_points(sys, sp);
    for (int q = 2; q <= period_bound; ++q)
        for (auto& r : find_periodic_points(sys, q, sp)) c.higher.emplace_back(q, std::move(r));
    return c;
}

struct FnxgexReport {
    bool hypothesis_met = false;
    std::string hypothesis_note;
    std::size_t checked = 0;
    std::vector<std::pair<double, std::size_t>> violations; // (x, j)
};

struct FnxgexParams {
    std::size_t samples = 128;
    std::size_t n = 100;
    int period_bound = 8;
    ScanParams scan;
    bool assume_hypothesis = false;
};

/// For sampled x < p checks f^j(x) > x, and for x > p checks f^j(x) < x,
/// for 1 <= j <= n. Only runs when p is the unique periodic point found up to
/// the period bound (or the caller asserts it).
inline FnxgexReport check_fnxgex(const System& sys, const FixedPointRecord& p, const FnxgexParams& fp = {}) {
    const auto& m = sys.interval_map();
    FnxgexReport rep;
    if (fp.assume_hypothesis) {
        rep.hypothesis_met = true;
        rep.hypothesis_note = "asserted by caller";
    } else {
        auto census = periodic_census(sys, fp.period_bound, fp.scan);
        rep.hypothesis_met = census.unique_fixed_point() && census.no_higher_periods();
        rep.hypothesis_note = std::to_string(census.fixed.size()) + " fixed point(s), " + std::to_string(census.higher.size()) +
                              " higher-period point(s) up to period " + std::to_string(fp.period_bound) + " at resolution " +
                              std::to_string(fp.scan.grid);
        if (rep.hypothesis_met && std::fabs(census.fixed.front().location - p.location) > 1e-6) {
            rep.hypothesis_met = false;
            rep.hypothesis_note += "; supplied point is not the fixed point found";
        }
    }
    if (!rep.hypothesis_met) return rep;
    const Point pp = p.point();
    std::vector<std::vector<std::pair<double, std::size_t>>> bad(fp.samples);
    parallel_for(fp.samples, [&](std::size_t i) {
        Point x0 = start_point(m, i + 1, fp.samples);
        const double x = x0.coordinate();
        int side = 0;
        if (x0.real_point().exact && pp.real_point().exact)
            side = *x0.real_point().exact < *pp.real_point().exact ? -1 : (*x0.real_point().exact > *pp.real_point().exact ? 1 : 0);
        else
            side = x < p.location ? -1 : (x > p.location ? 1 : 0);
        if (side == 0) return;
        Point y = x0;
        for (std::size_t j = 1; j <= fp.n; ++j) {
            y = step_unchecked(sys, y);
            bool ok;
            if (y.real_point().exact && x0.real_point().exact)
                ok = side < 0 ? *y.real_point().exact > *x0.real_point().exact : *y.real_point().exact < *x0.real_point().exact;
            else
                ok = side < 0 ? y.coordinate() > x : y.coordinate() < x;
            if (!ok) bad[i].emplace_back(x, j);
        }
    });
    rep.checked = fp.samples;
    for (auto& b : bad) rep.violations.insert(rep.violations.end(), b.begin(), b.end());
    return rep;
}

} // namespace ergolab
