#pragma once

// Seeded target sampling: adversarial pairs of separated points and random
// legal points, reproducible from (seed, stream indices).

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ergolab/interval.hpp"
#include "ergolab/systems.hpp"

namespace ergolab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for (seed, a, b).
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

enum class SamplingPolicy { Adversarial, Random, Mixed };

inline SamplingPolicy parse_policy(const std::string& s) {
    if (s == "adversarial") return SamplingPolicy::Adversarial;
    if (s == "random") return SamplingPolicy::Random;
    if (s == "mixed") return SamplingPolicy::Mixed;
    throw Error(ErrorCode::ConfigError, "unknown sampling policy '" + s + "'");
}

inline const char* to_string(SamplingPolicy p) {
    switch (p) {
    case SamplingPolicy::Adversarial: return "adversarial";
    case SamplingPolicy::Random: return "random";
    case SamplingPolicy::Mixed: return "mixed";
    }
    return "?";
}

/// Fixed points that are cheap to name: constant legal words, 0^inf in the
/// density-zero shift, located fixed points of interval maps.
inline std::vector<Point> known_fixed_points(const System& sys) {
    std::vector<Point> out;
    const System& r = sys.root();
    if (sys.is_symbolic()) {
        if (std::holds_alternative<OrbitClosureShift>(r.kind)) return {SymbolicPoint::periodic({0})};
        auto m = sys.transition_matrix();
        for (std::size_t a = 0; a < m.size(); ++a)
            if (m[a][a]) out.push_back(SymbolicPoint::periodic({static_cast<Symbol>(a)}));
        return out;
    }
    if (sys.is_interval()) {
        for (const auto& rec : find_fixed_points(sys))
            if (!rec.inconclusive) out.push_back(rec.point());
        return out;
    }
    if (auto p = std::get_if<PowerSystem>(&sys.kind)) return known_fixed_points(*p->base);
    if (auto p = std::get_if<ProductSystem>(&sys.kind)) {
        for (const auto& a : known_fixed_points(*p->first))
            for (const auto& b : known_fixed_points(*p->second)) out.push_back(Point::product(a, b));
    }
    return out;
}

/// Two points far apart whose orbits stay apart.
inline std::pair<Point, Point> adversarial_pair(const System& sys) {
    const System& r = sys.root();
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) return {SymbolicPoint::generator(0), SymbolicPoint::periodic({0})};
    if (sys.is_symbolic()) {
        auto fixed = known_fixed_points(sys);
        auto m = sys.transition_matrix();
        if (fixed.size() >= 2) return {fixed.front(), fixed.back()};
        const Symbol a = fixed.empty() ? 0 : fixed.front().symbolic().at(0);
        const Symbol b = static_cast<Symbol>((a + 1) % m.size());
        auto [conn, cyc] = sft_closing_tail(m, b);
        Word pre{b};
        pre.insert(pre.end(), conn.begin(), conn.end());
        Point other = SymbolicPoint(pre, cyc).normalized();
        if (fixed.empty()) return {extend_word(sys, Word{a}), other};
        return {fixed.front(), other};
    }
    if (sys.is_rotation()) return {Point::circle(0.0), Point::circle(0.5)};
    if (sys.is_interval()) {
        const auto& m = sys.interval_map();
        auto fixed = known_fixed_points(sys);
        if (fixed.size() >= 2) return {fixed.front(), fixed.back()};
        const bool ex = m.exact();
        Point lo = ex ? Point(RealPoint::from_rational(m.lo)) : Point(RealPoint::inexact(m.lo_d()));
        Point hi = ex ? Point(RealPoint::from_rational(m.hi)) : Point(RealPoint::inexact(m.hi_d()));
        if (!fixed.empty()) {
            const double p = fixed.front().coordinate();
            return {fixed.front(), p - m.lo_d() > m.hi_d() - p ? lo : hi};
        }
        return {lo, hi};
    }
    if (auto p = std::get_if<PowerSystem>(&sys.kind)) return adversarial_pair(*p->base);
    if (auto p = std::get_if<ProductSystem>(&sys.kind)) {
        auto a = adversarial_pair(*p->first), b = adversarial_pair(*p->second);
        return {Point::product(a.first, b.first), Point::product(a.second, b.second)};
    }
    throw Error(ErrorCode::UnsupportedSystem, "no adversarial pair for " + sys.name);
}

/// A random legal point; `scale` sets how far into the orbit structure
/// symbolic samples reach (word length, generator offsets).
inline Point random_point(const System& sys, std::mt19937_64& rng, std::size_t scale) {
    const System& r = sys.root();
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) {
        std::uniform_int_distribution<int> kind(0, 3);
        std::uniform_int_distribution<std::uint64_t> off(0, 4 * scale);
        switch (kind(rng)) {
        case 0: return SymbolicPoint::periodic({0});
        case 1: {
            Word w(off(rng), 0);
            w.push_back(1);
            return SymbolicPoint(w, Word{0});
        }
        default: return SymbolicPoint::generator(off(rng));
        }
    }
    if (sys.is_symbolic()) {
        auto m = sys.transition_matrix();
        const std::size_t len = scale * static_cast<std::size_t>(sys.stride()) + 64;
        std::uniform_int_distribution<std::size_t> any(0, m.size() - 1);
        Word w;
        w.push_back(static_cast<Symbol>(any(rng)));
        while (w.size() < len) {
            std::vector<Symbol> next;
            for (std::size_t b = 0; b < m.size(); ++b)
                if (m[w.back()][b]) next.push_back(static_cast<Symbol>(b));
            std::uniform_int_distribution<std::size_t> pick(0, next.size() - 1);
            w.push_back(next[pick(rng)]);
        }
        return extend_word(sys, w);
    }
    if (sys.is_rotation()) return CirclePoint{rng()};
    if (sys.is_interval()) {
        const auto& m = sys.interval_map();
        const std::uint64_t k = rng() >> 44; // 20 bits
        Rational t(static_cast<long long>(k), 1LL << 20);
        if (m.exact()) return RealPoint::from_rational(m.lo + (m.hi - m.lo) * t);
        return RealPoint::inexact(to_double(m.lo + (m.hi - m.lo) * t));
    }
    if (auto p = std::get_if<PowerSystem>(&sys.kind)) return random_point(*p->base, rng, scale);
    if (auto p = std::get_if<ProductSystem>(&sys.kind)) {
        Point a = random_point(*p->first, rng, scale);
        return Point::product(a, random_point(*p->second, rng, scale));
    }
    throw Error(ErrorCode::UnsupportedSystem, "cannot sample points of " + sys.name);
}

/// Target sequence for trial `trial` at block length n. Trial 0 is the
/// alternating adversarial pair under the mixed policy.
inline std::vector<Point> sample_targets(const System& sys, std::size_t blocks, std::size_t n, std::size_t trial,
                                         SamplingPolicy policy, std::uint64_t seed) {
    std::vector<Point> out;
    const bool adversarial = policy == SamplingPolicy::Adversarial || (policy == SamplingPolicy::Mixed && trial == 0);
    if (adversarial) {
        auto [a, b] = adversarial_pair(sys);
        for (std::size_t k = 0; k < blocks; ++k) out.push_back(k % 2 == 0 ? a : b);
        return out;
    }
    auto rng = stream(seed, n, trial);
    for (std::size_t k = 0; k < blocks; ++k) out.push_back(random_point(sys, rng, n));
    return out;
}

} // namespace ergolab
