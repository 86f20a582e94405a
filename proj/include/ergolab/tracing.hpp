#pragma once

// Gap schedules, mistake counting and the (delta, eps)-tracing predicate,
// plus tracer search, the fixed-point tracer and the lift from f^N to f.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ergolab/parallel.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/zoo.hpp"

namespace ergolab {

// Absorbs binary representation error in delta*m and 1+delta*n (0.29*100 is
// 28.999999999999996 in double).
inline constexpr double kThresholdSlack = 1e-9;

inline bool mistakes_allowed(std::size_t count, double delta, std::size_t m) {
    return static_cast<double>(count) <= delta * static_cast<double>(m) + kThresholdSlack;
}

inline std::size_t mistake_budget(double delta, std::size_t m) {
    return static_cast<std::size_t>(std::floor(delta * static_cast<double>(m) + kThresholdSlack));
}

/// Largest gap allowed by max g <= 1 + delta1 * n.
inline std::size_t max_gap(double delta1, std::size_t n) {
    return static_cast<std::size_t>(std::floor(1.0 + delta1 * static_cast<double>(n) + kThresholdSlack));
}

/// s_1 = 0, s_k = sum_{i<k} (m_i + t_i - 1).
inline std::vector<std::uint64_t> start_times(const std::vector<std::size_t>& lengths, const std::vector<std::size_t>& gaps) {
    if (lengths.empty()) throw Error(ErrorCode::EmptySchedule, "no blocks");
    if (gaps.size() + 1 < lengths.size()) throw Error(ErrorCode::EmptySchedule, "need at least |lengths|-1 gaps");
    for (auto m : lengths)
        if (m < 1) throw Error(ErrorCode::NonPositiveEntry, "block lengths must be >= 1");
    for (auto t : gaps)
        if (t < 1) throw Error(ErrorCode::NonPositiveEntry, "gaps must be >= 1");
    std::vector<std::uint64_t> s(lengths.size());
    s[0] = 0;
    for (std::size_t k = 1; k < lengths.size(); ++k) s[k] = s[k - 1] + lengths[k - 1] + gaps[k - 1] - 1;
    return s;
}

struct GapSchedule {
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> gaps;

    static GapSchedule uniform(std::size_t blocks, std::size_t length, std::size_t gap) {
        return {std::vector<std::size_t>(blocks, length), std::vector<std::size_t>(blocks > 0 ? blocks - 1 : 0, gap)};
    }
    std::vector<std::uint64_t> starts() const { return start_times(lengths, gaps); }
    std::uint64_t horizon() const { return starts().back() + lengths.back(); }
    std::size_t max_gap() const { return gaps.empty() ? 1 : *std::max_element(gaps.begin(), gaps.end()); }
};

struct TracingInstance {
    std::vector<Point> targets;
    GapSchedule schedule;
    double delta = 0.0;
    double eps = 0.0;

    void check() const {
        if (targets.size() != schedule.lengths.size())
            throw Error(ErrorCode::InvalidParams, "targets and block lengths differ in number");
        if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::InvalidParams, "delta must lie in [0,1]");
        if (!(eps > 0.0)) throw Error(ErrorCode::InvalidParams, "eps must be positive");
        (void)schedule.starts();
    }
};

struct TracingCertificate {
    Point tracer;
    TracingInstance instance;
    std::vector<std::size_t> mistakes;
    std::uint64_t horizon = 0;
    std::string method;
};

/// |{ j < m_k : d(f^{s_k + j}(z), f^j(x_k)) > eps }| for block k (0-based).
inline std::size_t mistake_count(const System& sys, const Point& z, const TracingInstance& inst, std::size_t k) {
    if (k >= inst.targets.size()) throw Error(ErrorCode::IndexOutOfRange, "block " + std::to_string(k) + " out of range");
    const auto s = inst.schedule.starts();
    Point zj = iterate(sys, z, s[k]);
    Point xj = inst.targets[k];
    std::size_t count = 0;
    for (std::size_t j = 0; j < inst.schedule.lengths[k]; ++j) {
        if (dist(sys, zj, xj) > inst.eps) ++count;
        if (j + 1 < inst.schedule.lengths[k]) {
            zj = step_unchecked(sys, zj);
            xj = step_unchecked(sys, xj);
        }
    }
    return count;
}

struct TraceCheck {
    bool traced = false;
    std::vector<std::size_t> counts;
    std::optional<std::size_t> first_failing_block;
};

/// The checker: counts mistakes for every block and compares each with
/// delta * m_k. Shares no code with the searchers below.
inline TraceCheck is_traced(const System& sys, const Point& z, const TracingInstance& inst) {
    inst.check();
    TraceCheck out;
    out.traced = true;
    const auto s = inst.schedule.starts();
    Point zpos = z;
    std::uint64_t at = 0;
    for (std::size_t k = 0; k < inst.targets.size(); ++k) {
        zpos = iterate(sys, zpos, s[k] - at);
        at = s[k];
        Point zj = zpos, xj = inst.targets[k];
        std::size_t count = 0;
        const std::size_t m = inst.schedule.lengths[k];
        for (std::size_t j = 0; j < m; ++j) {
            if (dist(sys, zj, xj) > inst.eps) ++count;
            if (j + 1 < m) {
                zj = step_unchecked(sys, zj);
                xj = step_unchecked(sys, xj);
            }
        }
        out.counts.push_back(count);
        if (!mistakes_allowed(count, inst.delta, m)) {
            if (!out.first_failing_block) out.first_failing_block = k;
            out.traced = false;
        }
    }
    return out;
}

inline TracingCertificate make_certificate(const System& sys, Point z, TracingInstance inst, std::string method) {
    auto check = is_traced(sys, z, inst);
    if (!check.traced)
        throw Error(ErrorCode::SearchFailed, "internal: " + method + " produced a tracer that does not re-verify at block " +
                                                 std::to_string(*check.first_failing_block));
    TracingCertificate c;
    c.horizon = inst.schedule.horizon();
    c.tracer = std::move(z);
    c.instance = std::move(inst);
    c.mistakes = std::move(check.counts);
    c.method = std::move(method);
    return c;
}

// ---------------------------------------------------------------------------
// Search

struct SearchParams {
    std::size_t n = 1;       // common block length
    double delta1 = 0.0;     // gap fraction: gaps <= 1 + delta1 * n
    double delta2 = 0.0;     // mistake fraction
    double eps = 0.1;
    std::size_t budget = 256; // candidate tracers tried by the generic search
    std::size_t beam = 256;   // feasible start times kept per block
    std::vector<Point> extra_candidates;
    bool constructive = true; // use the exact SFT construction when available
};

namespace detail {

/// Finds `inner` symbols v_1..v_inner with a -> v_1 -> ... -> v_inner -> b
/// legal in the transition graph.
inline std::optional<Word> sft_bridge(const std::vector<std::vector<std::uint8_t>>& m, Symbol a, Symbol b, std::size_t inner) {
    const std::size_t k = m.size();
    // can[i][v]: v reaches b in exactly i edges
    std::vector<std::vector<char>> can(inner + 2, std::vector<char>(k, 0));
    can[0][b] = 1;
    for (std::size_t i = 1; i <= inner + 1; ++i)
        for (std::size_t v = 0; v < k; ++v)
            for (std::size_t w = 0; w < k && !can[i][v]; ++w)
                if (m[v][w] && can[i - 1][w]) can[i][v] = 1;
    if (!can[inner + 1][a]) return std::nullopt;
    Word path;
    path.reserve(inner);
    Symbol cur = a;
    for (std::size_t i = inner; i >= 1; --i) {
        for (std::size_t w = 0; w < k; ++w) {
            if (m[cur][w] && can[i][w]) {
                cur = static_cast<Symbol>(w);
                break;
            }
        }
        path.push_back(cur);
    }
    return path;
}

/// Exact construction for shifts of finite type (and their powers): the
/// tracer spells each target's required word, joined by shortest legal
/// bridges. Gaps are the smallest feasible for each block in turn.
inline std::optional<TracingCertificate> construct_sft(const System& sys, const std::vector<Point>& targets,
                                                       const SearchParams& p) {
    const auto matrix = sys.transition_matrix();
    const std::size_t N = static_cast<std::size_t>(sys.stride());
    const std::size_t L = agreement_length(sys, p.eps);
    const std::size_t n = p.n;
    const std::size_t q = mistake_budget(p.delta2, n);
    const std::size_t tmax = max_gap(p.delta1, n);
    const std::size_t K = targets.size();

    auto required = [&](std::size_t k) -> Word {
        // offsets j < n - o must match on L symbols; the last o may be mistakes
        const std::size_t o = (k + 1 == K) ? 0 : std::min(q, n);
        if (o >= n) return {};
        return targets[k].symbolic().word(0, N * (n - 1 - o) + L);
    };

    Word S = required(0);
    std::vector<std::size_t> gaps;
    std::uint64_t s_prev = 0;
    for (std::size_t k = 1; k < K; ++k) {
        const Word w = required(k);
        bool placed = false;
        for (std::size_t t = 1; t <= tmax && !placed; ++t) {
            const std::uint64_t P = N * (s_prev + n + t - 1);
            if (w.empty()) {
                placed = true;
            } else if (S.empty()) {
                // nothing committed yet: pad with any legal word ending before w[0]
                if (P == 0) {
                    S = w;
                    placed = true;
                } else {
                    for (std::size_t a = 0; a < matrix.size() && !placed; ++a) {
                        if (auto br = sft_bridge(matrix, static_cast<Symbol>(a), w[0], P - 1)) {
                            S.push_back(static_cast<Symbol>(a));
                            S.insert(S.end(), br->begin(), br->end());
                            S.insert(S.end(), w.begin(), w.end());
                            placed = true;
                        }
                    }
                }
            } else if (P >= S.size()) {
                const std::size_t inner = P - S.size();
                if (auto br = sft_bridge(matrix, S.back(), w[0], inner)) {
                    S.insert(S.end(), br->begin(), br->end());
                    S.insert(S.end(), w.begin(), w.end());
                    placed = true;
                }
            } else {
                const std::size_t overlap = S.size() - P;
                const std::size_t cmp = std::min(overlap, w.size());
                if (std::equal(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(cmp), S.begin() + static_cast<std::ptrdiff_t>(P))) {
                    if (w.size() > overlap) S.insert(S.end(), w.begin() + static_cast<std::ptrdiff_t>(overlap), w.end());
                    placed = true;
                }
            }
            if (placed) {
                gaps.push_back(t);
                s_prev += n + t - 1;
            }
        }
        if (!placed) return std::nullopt;
    }
    Point z = extend_word(sys, S);
    TracingInstance inst{targets, GapSchedule{std::vector<std::size_t>(K, n), gaps}, p.delta2, p.eps};
    return make_certificate(sys, std::move(z), std::move(inst), "constructive");
}

/// Lazily materialised orbit of a candidate tracer.
class OrbitCache {
public:
    OrbitCache(const System& sys, Point x) : sys_(sys) { states_.push_back(std::move(x)); }
    const Point& at(std::uint64_t j) {
        if (sys_.is_symbolic() || sys_.is_rotation()) {
            scratch_ = iterate(sys_, states_.front(), j);
            return scratch_;
        }
        while (states_.size() <= j) states_.push_back(step_unchecked(sys_, states_.back()));
        return states_[j];
    }

private:
    const System& sys_;
    std::vector<Point> states_;
    Point scratch_;
};

inline std::vector<Point> default_candidates(const System& sys, const std::vector<Point>& targets, const SearchParams& p) {
    std::vector<Point> c = p.extra_candidates;
    const System& r = sys.root();
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) {
        c.push_back(SymbolicPoint::periodic({0}));
        for (const auto& t : targets) c.push_back(t);
        for (std::size_t i = 0; c.size() < p.budget; ++i) {
            c.push_back(SymbolicPoint::generator(i));
            if (c.size() < p.budget) {
                Word w(i, 0);
                w.push_back(1);
                c.push_back(SymbolicPoint(w, Word{0}));
            }
        }
    } else if (sys.is_rotation()) {
        c.push_back(targets.front());
        for (std::size_t i = 0; c.size() < p.budget; ++i)
            c.push_back(Point::circle(static_cast<double>(i) / static_cast<double>(p.budget)));
    } else if (sys.is_interval()) {
        c.push_back(targets.front());
        const auto& m = sys.interval_map();
        for (std::size_t i = 1; c.size() < p.budget; ++i) {
            Rational x = m.lo + (m.hi - m.lo) * Rational(static_cast<long long>(i), static_cast<long long>(p.budget + 1));
            c.push_back(m.exact() ? RealPoint::from_rational(x) : RealPoint::inexact(to_double(x)));
        }
    } else {
        c.push_back(targets.front());
    }
    if (c.size() > std::max(p.budget, p.extra_candidates.size())) c.resize(std::max(p.budget, p.extra_candidates.size()));
    return c;
}

/// Beam dynamic programme over start times for a fixed tracer candidate.
/// Returns the gaps of the earliest feasible schedule, if any.
inline std::optional<std::vector<std::size_t>> schedule_for(const System& sys, const Point& z,
                                                            const std::vector<std::vector<Point>>& target_orbits,
                                                            const SearchParams& p) {
    const std::size_t n = p.n;
    const std::size_t q = mistake_budget(p.delta2, n);
    const std::size_t tmax = max_gap(p.delta1, n);
    const std::size_t K = target_orbits.size();
    OrbitCache zorb(sys, z);

    auto block_ok = [&](std::size_t k, std::uint64_t s) {
        std::size_t bad = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (dist(sys, zorb.at(s + j), target_orbits[k][j]) > p.eps && ++bad > q) return false;
        }
        return true;
    };

    std::vector<std::vector<std::uint64_t>> reach(K), pred(K);
    if (!block_ok(0, 0)) return std::nullopt;
    reach[0] = {0};
    pred[0] = {0};
    for (std::size_t k = 1; k < K; ++k) {
        const auto& prev = reach[k - 1];
        const std::uint64_t lo = prev.front() + n, hi = prev.back() + n + tmax - 1;
        for (std::uint64_t s = lo; s <= hi && reach[k].size() < p.beam; ++s) {
            // smallest predecessor r with r + n <= s <= r + n + tmax - 1
            const std::uint64_t need = s + 1 >= n + tmax ? s + 1 - n - tmax : 0;
            auto it = std::lower_bound(prev.begin(), prev.end(), need);
            if (it == prev.end() || *it + n > s) continue;
            if (!block_ok(k, s)) continue;
            reach[k].push_back(s);
            pred[k].push_back(*it);
        }
        if (reach[k].empty()) return std::nullopt;
    }
    std::vector<std::size_t> gaps(K - 1);
    std::uint64_t s = reach[K - 1].front();
    for (std::size_t k = K - 1; k >= 1; --k) {
        auto idx = static_cast<std::size_t>(std::find(reach[k].begin(), reach[k].end(), s) - reach[k].begin());
        const std::uint64_t r = pred[k][idx];
        gaps[k - 1] = static_cast<std::size_t>(s - r - n + 1);
        s = r;
    }
    return gaps;
}

} // namespace detail

/// Looks for z and gaps <= 1 + delta1*n such that the n-blocks of `targets`
/// are (delta2, eps)-traced. Absent means "no witness at this budget".
inline std::optional<TracingCertificate> search_tracing_point(const System& sys, const std::vector<Point>& targets,
                                                              const SearchParams& p) {
    if (p.n < 1) throw Error(ErrorCode::InvalidParams, "block length must be >= 1");
    if (!(p.delta1 >= 0) || !(p.delta2 >= 0) || p.delta2 > 1) throw Error(ErrorCode::InvalidParams, "fractions out of range");
    if (!(p.eps > 0)) throw Error(ErrorCode::InvalidParams, "eps must be positive");
    if (targets.empty()) throw Error(ErrorCode::InvalidParams, "need at least one target");
    for (const auto& t : targets) validate(sys, t);
    const std::size_t K = targets.size();

    if (mistake_budget(p.delta2, p.n) >= p.n) {
        TracingInstance inst{targets, GapSchedule::uniform(K, p.n, 1), p.delta2, p.eps};
        return make_certificate(sys, targets.front(), std::move(inst), "trivial");
    }
    if (p.constructive && sys.is_sft() && sys.is_symbolic()) return detail::construct_sft(sys, targets, p);

    std::vector<std::vector<Point>> target_orbits(K);
    for (std::size_t k = 0; k < K; ++k) target_orbits[k] = orbit_segment(sys, targets[k], p.n).states;

    const auto candidates = detail::default_candidates(sys, targets, p);
    std::vector<std::optional<std::vector<std::size_t>>> found(candidates.size());
    auto hit = parallel_find_first(candidates.size(), [&](std::size_t i) {
        found[i] = detail::schedule_for(sys, candidates[i], target_orbits, p);
        return found[i].has_value();
    });
    if (!hit) return std::nullopt;
    TracingInstance inst{targets, GapSchedule{std::vector<std::size_t>(K, p.n), *found[*hit]}, p.delta2, p.eps};
    return make_certificate(sys, candidates[*hit], std::move(inst), "candidate-search");
}

// ---------------------------------------------------------------------------
// Fixed-point tracer

struct FixedPointTrace {
    std::vector<std::size_t> lengths;              // tested n values
    std::vector<std::vector<double>> fractions;    // [n index][block]
    std::optional<std::size_t> threshold;          // empirical M
};

inline void require_fixed(const System& sys, const Point& p, double tol = 1e-12) {
    validate(sys, p);
    if (dist(sys, step_unchecked(sys, p), p) > tol) throw Error(ErrorCode::NotFixedPoint, "point is not fixed by f");
}

/// Mistake fractions |{j < n : d(f^j x_k, p) > eps}| / n of the constant
/// tracer p with gaps 1, for every n in `lengths`, and the smallest listed n
/// from which every fraction stays below delta2.
inline FixedPointTrace trace_by_fixed_point(const System& sys, const Point& p, const std::vector<Point>& targets,
                                            std::vector<std::size_t> lengths, double eps, double delta2) {
    require_fixed(sys, p);
    if (lengths.empty()) throw Error(ErrorCode::InvalidParams, "no lengths to test");
    std::sort(lengths.begin(), lengths.end());
    const std::size_t nmax = lengths.back();
    FixedPointTrace out;
    out.lengths = lengths;
    out.fractions.assign(lengths.size(), std::vector<double>(targets.size(), 0.0));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        validate(sys, targets[k]);
        Point x = targets[k];
        std::size_t bad = 0, li = 0;
        for (std::size_t j = 0; j < nmax; ++j) {
            if (dist(sys, x, p) > eps) ++bad;
            while (li < lengths.size() && lengths[li] == j + 1) {
                out.fractions[li][k] = static_cast<double>(bad) / static_cast<double>(lengths[li]);
                ++li;
            }
            if (j + 1 < nmax) x = step_unchecked(sys, x);
        }
    }
    for (std::size_t i = lengths.size(); i-- > 0;) {
        const auto& f = out.fractions[i];
        if (!std::all_of(f.begin(), f.end(), [&](double v) { return v < delta2; })) break;
        out.threshold = lengths[i];
    }
    return out;
}

/// Certificate with tracer p and gaps 1, when it verifies.
inline std::optional<TracingCertificate> fixed_point_certificate(const System& sys, const Point& p, const std::vector<Point>& targets,
                                                                 std::size_t n, double delta2, double eps) {
    require_fixed(sys, p);
    TracingInstance inst{targets, GapSchedule::uniform(targets.size(), n, 1), delta2, eps};
    if (!is_traced(sys, p, inst).traced) return std::nullopt;
    return make_certificate(sys, p, std::move(inst), "fixed-point");
}

// ---------------------------------------------------------------------------
// Power lift

/// Grid check that d(x, y) <= gamma implies d(f^j x, f^j y) <= eps for all
/// j < N. Symbolic pairs differ first at the earliest index allowed by gamma.
inline bool check_modulus(const System& sys, int N, double gamma, double eps, std::size_t samples = 256,
                          std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    auto ok_pair = [&](const Point& a, const Point& b) {
        if (dist(sys, a, b) > gamma) return true;
        Point x = a, y = b;
        for (int j = 0; j < N; ++j) {
            if (dist(sys, x, y) > eps) return false;
            x = step_unchecked(sys, x);
            y = step_unchecked(sys, y);
        }
        return true;
    };
    if (sys.is_symbolic()) {
        const int k = sys.alphabet();
        const std::size_t L = agreement_length(sys, gamma);
        std::uniform_int_distribution<int> sym(0, k - 1);
        for (std::size_t i = 0; i < samples; ++i) {
            Word w(L + static_cast<std::size_t>(N) + 4);
            for (auto& c : w) c = static_cast<Symbol>(sym(rng));
            Word v = w;
            v[L] = static_cast<Symbol>((v[L] + 1) % k);
            if (!ok_pair(SymbolicPoint(w, Word{0}), SymbolicPoint(v, Word{0}))) return false;
        }
        return true;
    }
    if (sys.is_interval()) {
        const auto& m = sys.interval_map();
        const double lo = m.lo_d(), hi = m.hi_d();
        for (std::size_t i = 0; i <= samples; ++i) {
            double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples);
            double y = std::min(hi, x + gamma);
            if (!ok_pair(RealPoint::inexact(x), RealPoint::inexact(y))) return false;
        }
        return true;
    }
    if (sys.is_rotation()) return gamma <= eps;
    throw Error(ErrorCode::UnsupportedSystem, "modulus check not available for " + sys.name);
}

struct LiftParams {
    int power = 1;          // N
    double gamma = 0.0;     // scale of the certificate under f^N
    double eps = 0.0;       // target scale under f
    std::size_t remainder = 0; // l in n = mN + l
    double delta1 = 0.0;
    double delta2 = 0.0;
    std::size_t M = 0;      // threshold from the f^N property, if known
};

/// Turns a (delta2/2, gamma)-certificate for f^N with block length m+1 and
/// gaps t_k into a (delta2, eps)-certificate for f with block length
/// n = mN + l and gaps 1 + N(t_k - 1) + (N - l), over the same start times.
inline TracingCertificate lift_power_tracing(const System& base, const TracingCertificate& cert_N, const LiftParams& lp) {
    const int N = lp.power;
    if (N < 1) throw Error(ErrorCode::InvalidParams, "power must be >= 1");
    if (lp.remainder >= static_cast<std::size_t>(N)) throw Error(ErrorCode::InvalidParams, "remainder must be < N");
    const System sysN = power(base, N);
    const auto& inst = cert_N.instance;
    if (inst.delta > lp.delta2 / 2 + kThresholdSlack || inst.eps > lp.gamma + kThresholdSlack)
        throw Error(ErrorCode::InvalidParams, "certificate is not at (delta2/2, gamma)");
    if (!is_traced(sysN, cert_N.tracer, inst).traced) throw Error(ErrorCode::LiftFailed, "certificate does not verify under f^N");
    if (!check_modulus(base, N, lp.gamma, lp.eps)) throw Error(ErrorCode::ModulusTooLarge, "gamma too large for eps over j < N");

    const std::size_t block = inst.schedule.lengths.front();
    if (!std::all_of(inst.schedule.lengths.begin(), inst.schedule.lengths.end(), [&](std::size_t v) { return v == block; }))
        throw Error(ErrorCode::InvalidParams, "lift needs equal block lengths");
    if (block < 2) throw Error(ErrorCode::HorizonTooShort, "certificate blocks too short");
    const std::size_t m = block - 1;
    const double T = std::max({static_cast<double>(lp.M), 1.0 + 2.0 / std::max(lp.delta1, 1e-300), 2.0});
    if (!(static_cast<double>(m) > T - kThresholdSlack && static_cast<double>(m) >= std::floor(T) + 1 - kThresholdSlack))
        throw Error(ErrorCode::HorizonTooShort, "m = " + std::to_string(m) + " does not exceed T = " + std::to_string(T));

    const std::size_t n = m * static_cast<std::size_t>(N) + lp.remainder;
    std::vector<std::size_t> gaps;
    for (auto t : inst.schedule.gaps) gaps.push_back(1 + static_cast<std::size_t>(N) * (t - 1) + (static_cast<std::size_t>(N) - lp.remainder));
    TracingInstance lifted{inst.targets, GapSchedule{std::vector<std::size_t>(inst.targets.size(), n), gaps}, lp.delta2, lp.eps};
    auto check = is_traced(base, cert_N.tracer, lifted);
    if (!check.traced) throw Error(ErrorCode::LiftFailed, "lifted schedule fails at block " + std::to_string(*check.first_failing_block));
    return make_certificate(base, cert_N.tracer, std::move(lifted), "power-lift");
}

// ---------------------------------------------------------------------------
// Certificate files

inline json certificate_to_json(const System& sys, const TracingCertificate& c) {
    json j;
    j["system"] = system_to_json(sys);
    j["tracer"] = point_to_json(c.tracer);
    json targets = json::array();
    for (const auto& t : c.instance.targets) targets.push_back(point_to_json(t));
    j["targets"] = targets;
    j["lengths"] = c.instance.schedule.lengths;
    j["gaps"] = c.instance.schedule.gaps;
    j["starts"] = c.instance.schedule.starts();
    j["delta"] = c.instance.delta;
    j["eps"] = c.instance.eps;
    j["mistakes"] = c.mistakes;
    j["horizon"] = c.horizon;
    j["method"] = c.method;
    return j;
}

inline std::pair<System, TracingCertificate> certificate_from_json(const json& j) {
    try {
        System sys = system_from_json(j.at("system"));
        TracingCertificate c;
        c.tracer = point_from_json(j.at("tracer"));
        for (const auto& t : j.at("targets")) c.instance.targets.push_back(point_from_json(t));
        c.instance.schedule.lengths = j.at("lengths").get<std::vector<std::size_t>>();
        c.instance.schedule.gaps = j.at("gaps").get<std::vector<std::size_t>>();
        c.instance.delta = j.at("delta").get<double>();
        c.instance.eps = j.at("eps").get<double>();
        c.mistakes = j.at("mistakes").get<std::vector<std::size_t>>();
        c.horizon = j.value("horizon", std::uint64_t{0});
        c.method = j.value("method", std::string());
        return {std::move(sys), std::move(c)};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed certificate: ") + e.what());
    }
}

struct CertificateVerdict {
    bool valid = false;
    std::string reason;
    std::optional<std::size_t> failing_block;
    std::vector<std::size_t> recomputed;
};

/// Re-checks a certificate from scratch: the tracing predicate must hold and
/// the stored mistake counts and start times must match the recomputation.
inline CertificateVerdict verify_certificate(const System& sys, const TracingCertificate& c,
                                             const std::vector<std::uint64_t>* stored_starts = nullptr) {
    CertificateVerdict v;
    try {
        validate(sys, c.tracer);
        auto check = is_traced(sys, c.tracer, c.instance);
        v.recomputed = check.counts;
        if (stored_starts && *stored_starts != c.instance.schedule.starts()) {
            v.reason = "stored start times disagree with the schedule";
            return v;
        }
        if (!check.traced) {
            v.failing_block = check.first_failing_block;
            v.reason = "block " + std::to_string(*check.first_failing_block) + " exceeds its mistake budget";
            return v;
        }
        if (check.counts != c.mistakes) {
            for (std::size_t k = 0; k < check.counts.size(); ++k)
                if (k >= c.mistakes.size() || check.counts[k] != c.mistakes[k]) {
                    v.failing_block = k;
                    break;
                }
            v.reason = "stored mistake count differs at block " + std::to_string(v.failing_block.value_or(0));
            return v;
        }
        v.valid = true;
        v.reason = "ok";
    } catch (const Error& e) {
        v.reason = e.what();
    }
    return v;
}

} // namespace ergolab
