#pragma once

// Word counts, (n, eps)-separated sets, entropy slopes, and the family of
// 2^N tracers built from four separated orbits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ergolab/parallel.hpp"
#include "ergolab/sampling.hpp"
#include "ergolab/tracing.hpp"

namespace ergolab {

// ---------------------------------------------------------------------------
// Word counts

inline std::size_t kDensityZeroWordCap = 4096;

/// Legal words of length n in the density-zero shift. Windows with two or
/// more ones come from generator offsets below n; the rest are 0^n and the n
/// words with a single one.
inline std::set<Word> density_zero_words(std::size_t n) {
    std::set<Word> words;
    for (std::uint64_t o = 0; o < n; ++o) {
        Word w(n);
        int ones = 0;
        for (std::size_t i = 0; i < n; ++i) ones += (w[i] = density_zero_symbol(o + i));
        if (ones >= 2) words.insert(std::move(w));
    }
    words.insert(Word(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        Word w(n, 0);
        w[i] = 1;
        words.insert(std::move(w));
    }
    return words;
}

/// Exact number of legal words of length n (raw symbols; a power f^N counts
/// words of length N*n).
inline BigInt count_words(const System& sys, std::size_t n) {
    if (!sys.is_symbolic()) throw Error(ErrorCode::UnsupportedSystem, "word counts need a symbolic system");
    if (n < 1) throw Error(ErrorCode::InvalidParams, "n must be >= 1");
    const std::size_t len = n * static_cast<std::size_t>(sys.stride());
    const System& r = sys.root();
    if (auto fs = std::get_if<FullShift>(&r.kind)) return boost::multiprecision::pow(BigInt(fs->k), static_cast<unsigned>(len));
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) {
        if (len > kDensityZeroWordCap) throw Error(ErrorCode::InvalidParams, "density-zero word enumeration capped at length 4096");
        return BigInt(density_zero_words(len).size());
    }
    const auto m = sys.transition_matrix();
    const std::size_t k = m.size();
    std::vector<BigInt> v(k, 1), w(k);
    for (std::size_t step = 1; step < len; ++step) {
        for (std::size_t a = 0; a < k; ++a) {
            w[a] = 0;
            for (std::size_t b = 0; b < k; ++b)
                if (m[a][b]) w[a] += v[b];
        }
        std::swap(v, w);
    }
    BigInt total = 0;
    for (const auto& x : v) total += x;
    return total;
}

inline double log_bigint(const BigInt& x) {
    if (x <= 0) throw Error(ErrorCode::InvalidParams, "log of non-positive count");
    const std::size_t bits = boost::multiprecision::msb(x);
    if (bits < 60) return std::log(static_cast<double>(x.convert_to<std::uint64_t>()));
    const std::size_t shift = bits - 60;
    const BigInt top = x >> shift;
    return std::log(static_cast<double>(top.convert_to<std::uint64_t>())) + static_cast<double>(shift) * std::log(2.0);
}

// ---------------------------------------------------------------------------
// Least squares

struct LinearFit {
    double slope = 0, intercept = 0, rms_residual = 0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidParams, "fit needs at least two points");
    const double k = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / k, my = sy / k;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double rr = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        rr += e * e;
    }
    f.rms_residual = std::sqrt(rr / k);
    return f;
}

/// Slope of ln count_words(n) against n over the given lengths.
inline LinearFit word_count_slope(const System& sys, const std::vector<std::size_t>& ns) {
    std::vector<double> x, y;
    for (auto n : ns) {
        x.push_back(static_cast<double>(n));
        y.push_back(log_bigint(count_words(sys, n)));
    }
    return least_squares(x, y);
}

// ---------------------------------------------------------------------------
// Separated sets

enum class SeparationMethod { Brute, Greedy };

inline const char* to_string(SeparationMethod m) { return m == SeparationMethod::Brute ? "brute" : "greedy"; }

struct SeparatedSet {
    std::vector<Point> points;
    std::size_t n = 0;
    double eps = 0;
    SeparationMethod method = SeparationMethod::Greedy;
    bool degraded = false;  // brute requested, greedy lower bound returned
    bool saturated = false; // the candidate pool limited the count
    std::size_t pool = 0;
    std::size_t count_only = 0; // set when points were not kept
    std::size_t size() const { return points.empty() ? count_only : points.size(); }
};

/// max_{0 <= j < n} d(f^j x, f^j y).
inline double bowen_distance(const System& sys, Point x, Point y, std::size_t n) {
    double best = 0;
    for (std::size_t j = 0; j < n; ++j) {
        best = std::max(best, dist(sys, x, y));
        if (j + 1 < n) {
            x = step_unchecked(sys, x);
            y = step_unchecked(sys, y);
        }
    }
    return best;
}

/// Independent pairwise re-check of a separated set.
inline bool is_separated(const System& sys, const std::vector<Point>& pts, std::size_t n, double eps) {
    std::vector<std::vector<Point>> orbits(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { orbits[i] = orbit_segment(sys, pts[i], n).states; });
    std::vector<char> ok(pts.size(), 1);
    parallel_for(pts.size(), [&](std::size_t i) {
        for (std::size_t k = i + 1; k < pts.size() && ok[i]; ++k) {
            bool sep = false;
            for (std::size_t j = 0; j < n && !sep; ++j) sep = dist(sys, orbits[i][j], orbits[k][j]) > eps;
            if (!sep) ok[i] = 0;
        }
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

struct SeparationBudget {
    std::size_t max_words = std::size_t{1} << 16;   // brute: cylinders enumerated
    std::size_t pool = std::size_t{1} << 20;        // greedy: candidate points
    std::uint64_t seed = 1;
};

namespace detail {

/// Legal words of length `len`, depth-first in lexicographic order, at most
/// `cap` of them. Returns true when the enumeration was complete.
inline bool legal_words(const System& sys, std::size_t len, std::size_t cap, std::vector<Word>& out) {
    const System& r = sys.root();
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) {
        for (const auto& w : density_zero_words(len)) {
            if (out.size() >= cap) return false;
            out.push_back(w);
        }
        return true;
    }
    const auto m = sys.transition_matrix();
    const std::size_t k = m.size();
    Word w;
    bool complete = true;
    std::function<void()> rec = [&] {
        if (!complete) return;
        if (w.size() == len) {
            if (out.size() >= cap) {
                complete = false;
                return;
            }
            out.push_back(w);
            return;
        }
        for (std::size_t a = 0; a < k; ++a) {
            if (!w.empty() && !m[w.back()][a]) continue;
            w.push_back(static_cast<Symbol>(a));
            rec();
            w.pop_back();
        }
    };
    rec();
    return complete;
}

inline std::vector<double> coordinate_orbit(const System& sys, const Point& x, std::size_t n) {
    std::vector<double> out(n);
    if (sys.is_rotation()) {
        std::uint64_t ph = x.circle_point().phase;
        const std::uint64_t a = std::get<Rotation>(sys.kind).phase;
        for (std::size_t j = 0; j < n; ++j, ph += a) out[j] = std::ldexp(static_cast<double>(ph), -64);
        return out;
    }
    const auto& m = sys.interval_map();
    double v = x.coordinate();
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = v;
        if (j + 1 < n) v = std::clamp(m.eval(v), m.lo_d(), m.hi_d());
    }
    return out;
}

/// Orbit coordinates of an even grid pool, computed once at the longest
/// horizon and shared by every shorter one.
struct OrbitTable {
    bool circle = false;
    double lo = 0, len = 1;
    std::size_t pool = 0, horizon = 0;
    std::vector<double> data; // pool x horizon
    const double* orbit(std::size_t i) const { return data.data() + i * horizon; }
    Point point(std::size_t i) const {
        if (circle) return CirclePoint{static_cast<std::uint64_t>(std::ldexp(static_cast<long double>(i) / pool, 64))};
        return RealPoint::inexact(lo + len * (static_cast<double>(i) + 0.5) / static_cast<double>(pool));
    }
};

inline OrbitTable orbit_table(const System& sys, std::size_t pool, std::size_t horizon) {
    OrbitTable t;
    t.circle = sys.is_rotation();
    t.lo = t.circle ? 0.0 : sys.interval_map().lo_d();
    t.len = t.circle ? 1.0 : sys.interval_map().hi_d() - t.lo;
    t.pool = pool;
    t.horizon = horizon;
    t.data.resize(pool * horizon);
    parallel_for(pool, [&](std::size_t i) {
        auto o = coordinate_orbit(sys, t.point(i), horizon);
        std::copy(o.begin(), o.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * horizon));
    });
    return t;
}

/// Greedy maximal separated subset of the pool at horizon n <= t.horizon.
/// Accepted orbits are bucketed by their cells at times 0 and n-1, so a
/// candidate is compared only with accepted points within eps of it at both
/// times.
inline SeparatedSet greedy_1d(const OrbitTable& t, std::size_t n, double eps, bool keep_points = true) {
    if (n > t.horizon) throw Error(ErrorCode::InvalidParams, "horizon beyond the orbit table");
    const bool circle = t.circle;
    auto d1 = [&](double a, double b) {
        double d = std::fabs(a - b);
        return circle ? std::min(d, 1.0 - d) : d;
    };
    const auto ncell = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t.len / eps)));
    auto wrap = [&](std::int64_t c) { return circle ? ((c % ncell) + ncell) % ncell : c; };
    auto cell = [&](double v) { return wrap(static_cast<std::int64_t>(std::floor((v - t.lo) / eps))); };
    auto key = [&](std::int64_t a, std::int64_t b) { return (a + 1) * (ncell + 3) + (b + 1); };

    SeparatedSet out;
    out.n = n;
    out.eps = eps;
    out.method = SeparationMethod::Greedy;
    out.pool = t.pool;
    std::vector<std::size_t> accepted;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.pool; ++i) {
        const double* orb = t.orbit(i);
        const auto c0 = cell(orb[0]), c1 = cell(orb[n - 1]);
        bool clash = false;
        for (int da = -1; da <= 1 && !clash; ++da)
            for (int db = -1; db <= 1 && !clash; ++db) {
                auto it = buckets.find(key(wrap(c0 + da), wrap(c1 + db)));
                if (it == buckets.end()) continue;
                for (std::size_t idx : it->second) {
                    const double* o = t.orbit(idx);
                    bool sep = false;
                    for (std::size_t j = 0; j < n && !sep; ++j) sep = d1(o[j], orb[j]) > eps;
                    if (!sep) {
                        clash = true;
                        break;
                    }
                }
            }
        if (clash) continue;
        buckets[key(c0, c1)].push_back(i);
        ++count;
        if (keep_points) out.points.push_back(t.point(i));
    }
    out.saturated = count * 8 > t.pool;
    if (!keep_points) out.points.resize(0);
    out.pool = t.pool;
    out.count_only = keep_points ? 0 : count;
    return out;
}

inline SeparatedSet greedy_1d(const System& sys, std::size_t n, double eps, std::size_t pool) {
    return greedy_1d(orbit_table(sys, pool, n), n, eps);
}

/// Greedy over seeded random points with plain pairwise checks.
inline SeparatedSet greedy_generic(const System& sys, std::size_t n, double eps, std::size_t pool, std::uint64_t seed) {
    SeparatedSet out;
    out.n = n;
    out.eps = eps;
    out.pool = pool;
    auto rng = stream(seed, n, 17);
    std::vector<std::vector<Point>> orbits;
    for (std::size_t i = 0; i < pool; ++i) {
        Point x = random_point(sys, rng, n);
        auto orb = orbit_segment(sys, x, n).states;
        bool clash = false;
        for (const auto& o : orbits) {
            bool sep = false;
            for (std::size_t j = 0; j < n && !sep; ++j) sep = dist(sys, o[j], orb[j]) > eps;
            if (!sep) {
                clash = true;
                break;
            }
        }
        if (clash) continue;
        orbits.push_back(std::move(orb));
        out.points.push_back(x);
    }
    out.saturated = out.points.size() * 8 > pool;
    return out;
}

} // namespace detail

/// Largest (n, eps)-separated set found. For symbolic systems two points are
/// separated iff they differ within the first N(n-1)+L symbols, so one point
/// per cylinder of that length is exact (brute). Other systems get greedy
/// lower bounds.
inline SeparatedSet max_separated(const System& sys, std::size_t n, double eps, SeparationMethod method = SeparationMethod::Brute,
                                  const SeparationBudget& budget = {}) {
    if (n < 1) throw Error(ErrorCode::InvalidParams, "n must be >= 1");
    if (!(eps > 0)) throw Error(ErrorCode::InvalidParams, "eps must be positive");
    if (eps >= sys.diameter()) {
        SeparatedSet s;
        s.n = n;
        s.eps = eps;
        s.method = method;
        s.points.push_back(sys.is_symbolic() ? extend_word(sys, Word{}) : adversarial_pair(sys).first);
        return s;
    }
    if (sys.is_symbolic()) {
        const std::size_t len = static_cast<std::size_t>(sys.stride()) * (n - 1) + agreement_length(sys, eps);
        std::vector<Word> words;
        const std::size_t cap = method == SeparationMethod::Brute ? budget.max_words : budget.pool;
        bool complete = detail::legal_words(sys, len, cap, words);
        SeparatedSet s;
        s.n = n;
        s.eps = eps;
        s.method = complete ? SeparationMethod::Brute : SeparationMethod::Greedy;
        s.degraded = !complete && method == SeparationMethod::Brute;
        s.saturated = !complete;
        s.pool = words.size();
        for (const auto& w : words) s.points.push_back(extend_word(sys, w));
        return s;
    }
    SeparatedSet s = (sys.is_rotation() || sys.is_interval()) ? detail::greedy_1d(sys, n, eps, budget.pool)
                                                              : detail::greedy_generic(sys, n, eps, std::min<std::size_t>(budget.pool, 4096), budget.seed);
    s.degraded = method == SeparationMethod::Brute;
    return s;
}

struct EntropyRow {
    std::size_t n = 0;
    double eps = 0;
    std::size_t count = 0;
    double log_count = 0;
    bool saturated = false;
    SeparationMethod method = SeparationMethod::Greedy;
};

struct EntropyPerEps {
    double eps = 0;
    double slope = 0;          // clamped at 0
    double raw_slope = 0;
    double rms_residual = 0;
    std::size_t fit_from = 0, fit_to = 0; // n window used
    bool fitted = false;
    std::string note;
};

struct EntropyEstimate {
    std::vector<EntropyRow> rows;
    std::vector<EntropyPerEps> per_eps;
    std::optional<LinearFit> word_count_fit;
    double estimate = 0; // max slope over eps
};

/// Least-squares slope of ln s(n, eps) against n for each eps, over the
/// longest run of consecutive unsaturated n (at least 3 values, preferring
/// 4 or more).
inline EntropyEstimate entropy_estimate(const System& sys, std::vector<double> eps_list, std::vector<std::size_t> ns,
                                        SeparationMethod method = SeparationMethod::Brute, const SeparationBudget& budget = {}) {
    if (ns.size() < 3) throw Error(ErrorCode::InvalidParams, "need at least three n values");
    if (eps_list.empty()) throw Error(ErrorCode::InvalidParams, "need at least one eps");
    std::sort(ns.begin(), ns.end());
    EntropyEstimate est;
    std::optional<detail::OrbitTable> table;
    for (double eps : eps_list) {
        std::vector<EntropyRow> rows;
        for (auto n : ns) {
            if (sys.is_symbolic() && method == SeparationMethod::Brute) {
                // exact count without materialising the points
                const std::size_t len = static_cast<std::size_t>(sys.stride()) * (n - 1) + agreement_length(sys, eps);
                EntropyRow r{n, eps, 1, 0.0, false, SeparationMethod::Brute};
                if (eps < sys.diameter()) {
                    const BigInt c = count_words(sys.root(), len);
                    r.log_count = log_bigint(c);
                    r.count = c > BigInt(std::numeric_limits<std::size_t>::max()) ? std::numeric_limits<std::size_t>::max()
                                                                               : c.convert_to<std::size_t>();
                }
                rows.push_back(r);
                continue;
            }
            if ((sys.is_rotation() || sys.is_interval()) && eps < sys.diameter()) {
                if (!table || table->pool != budget.pool) table = detail::orbit_table(sys, budget.pool, ns.back());
                auto s = detail::greedy_1d(*table, n, eps, false);
                rows.push_back({n, eps, s.size(), std::log(static_cast<double>(s.size())), s.saturated, SeparationMethod::Greedy});
                continue;
            }
            auto s = max_separated(sys, n, eps, method, budget);
            rows.push_back({n, eps, s.size(), std::log(static_cast<double>(s.size())), s.saturated, s.method});
        }
        EntropyPerEps pe;
        pe.eps = eps;
        // longest run of unsaturated rows
        std::size_t best_from = 0, best_len = 0;
        for (std::size_t i = 0; i < rows.size();) {
            if (rows[i].saturated) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < rows.size() && !rows[j].saturated) ++j;
            if (j - i > best_len) {
                best_len = j - i;
                best_from = i;
            }
            i = j;
        }
        if (best_len >= 3) {
            std::vector<double> x, y;
            for (std::size_t i = best_from; i < best_from + best_len; ++i) {
                x.push_back(static_cast<double>(rows[i].n));
                y.push_back(rows[i].log_count);
            }
            auto fit = least_squares(x, y);
            pe.raw_slope = fit.slope;
            pe.slope = std::max(0.0, fit.slope);
            pe.rms_residual = fit.rms_residual;
            pe.fit_from = rows[best_from].n;
            pe.fit_to = rows[best_from + best_len - 1].n;
            pe.fitted = true;
            if (best_len < 4) pe.note = "window narrower than 4";
        } else {
            pe.note = "fewer than 3 unsaturated n values";
        }
        est.rows.insert(est.rows.end(), rows.begin(), rows.end());
        est.per_eps.push_back(pe);
        if (pe.fitted) est.estimate = std::max(est.estimate, pe.slope);
    }
    if (sys.is_symbolic()) {
        try {
            est.word_count_fit = word_count_slope(sys, ns);
        } catch (const Error&) {
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Four separated orbits and the family of 2^N tracers

/// First four candidates (lexicographic in index) whose orbit segments stay
/// 4*gamma apart at all pairs of times in [0, horizon].
inline std::optional<std::array<Point, 4>> four_point_selector(const System& sys, const std::vector<Point>& cands,
                                                               std::size_t horizon, double gamma) {
    const std::size_t C = cands.size();
    if (C < 4) return std::nullopt;
    std::vector<std::vector<Point>> orbits(C);
    parallel_for(C, [&](std::size_t i) { orbits[i] = orbit_segment(sys, cands[i], horizon + 1).states; });
    std::vector<char> ok(C * C, 0);
    parallel_for(C, [&](std::size_t i) {
        for (std::size_t k = i + 1; k < C; ++k) {
            bool good = true;
            for (std::size_t a = 0; a <= horizon && good; ++a)
                for (std::size_t b = 0; b <= horizon && good; ++b) good = dist(sys, orbits[i][a], orbits[k][b]) >= 4 * gamma;
            ok[i * C + k] = ok[k * C + i] = good ? 1 : 0;
        }
    });
    for (std::size_t a = 0; a < C; ++a)
        for (std::size_t b = a + 1; b < C; ++b) {
            if (!ok[a * C + b]) continue;
            for (std::size_t c = b + 1; c < C; ++c) {
                if (!ok[a * C + c] || !ok[b * C + c]) continue;
                for (std::size_t d = c + 1; d < C; ++d)
                    if (ok[a * C + d] && ok[b * C + d] && ok[c * C + d]) return std::array<Point, 4>{cands[a], cands[b], cands[c], cands[d]};
            }
        }
    return std::nullopt;
}

struct FamilyMember {
    std::vector<int> xi; // entries in {1, 2}
    TracingCertificate certificate;
};

struct SeparatedFamily {
    System system;
    std::array<Point, 4> base;
    std::size_t m = 0;
    double delta = 0;
    std::size_t depth = 0; // N
    double eps_trace = 0;
    double gamma = 0;
    std::vector<FamilyMember> members; // xi in lexicographic order
};

/// x_{2k-1} = y_{2 xi(k) - 1}, x_{2k} = y_{2 xi(k)} (1-based), i.e. the pair
/// (y1, y2) when xi(k) = 1 and (y3, y4) when xi(k) = 2.
inline std::vector<Point> family_targets(const std::array<Point, 4>& y, const std::vector<int>& xi) {
    std::vector<Point> out;
    for (int v : xi) {
        out.push_back(y[static_cast<std::size_t>(2 * v - 2)]);
        out.push_back(y[static_cast<std::size_t>(2 * v - 1)]);
    }
    return out;
}

inline std::vector<int> xi_of(std::uint64_t index, std::size_t N) {
    std::vector<int> xi(N);
    for (std::size_t k = 0; k < N; ++k) xi[k] = ((index >> (N - 1 - k)) & 1) ? 2 : 1;
    return xi;
}

inline std::string xi_string(const std::vector<int>& xi) {
    std::string s;
    for (int v : xi) s.push_back(static_cast<char>('0' + v));
    return s;
}

struct FamilyParams {
    std::size_t m = 8;
    double delta = 0.05;
    std::size_t depth = 6;
    double eps_trace = 0.5;
    double gamma = 0.25;
    std::size_t budget = 256;
};

inline void check_family_params(const FamilyParams& p) {
    if (!(p.delta > 0 && p.delta < 0.1)) throw Error(ErrorCode::InvalidParams, "delta must lie in (0, 1/10)");
    if (p.m < 1 || p.depth < 1) throw Error(ErrorCode::InvalidParams, "m and N must be >= 1");
    if (p.depth > 20) throw Error(ErrorCode::InvalidParams, "N above 20 gives more than a million members");
}

/// One tracer per xi in {1,2}^N, gaps <= 1 + delta*m and mistake fraction
/// <= delta at scale eps_trace.
inline SeparatedFamily build_separated_family(const System& sys, const std::array<Point, 4>& y, const FamilyParams& p) {
    check_family_params(p);
    const std::size_t count = std::size_t{1} << p.depth;
    std::vector<std::optional<TracingCertificate>> certs(count);
    parallel_for(count, [&](std::size_t i) {
        SearchParams sp;
        sp.n = p.m;
        sp.delta1 = p.delta;
        sp.delta2 = p.delta;
        sp.eps = p.eps_trace;
        sp.budget = p.budget;
        sp.extra_candidates = known_fixed_points(sys);
        certs[i] = search_tracing_point(sys, family_targets(y, xi_of(i, p.depth)), sp);
    }, 1 /* the search itself runs in parallel */);
    std::string failed;
    SeparatedFamily fam{sys, y, p.m, p.delta, p.depth, p.eps_trace, p.gamma, {}};
    for (std::size_t i = 0; i < count; ++i) {
        if (!certs[i]) {
            failed += (failed.empty() ? "" : ",") + xi_string(xi_of(i, p.depth));
            continue;
        }
        fam.members.push_back({xi_of(i, p.depth), std::move(*certs[i])});
    }
    if (!failed.empty()) throw Error(ErrorCode::SearchFailed, "no tracer at budget for xi = " + failed);
    return fam;
}

/// Family member tracers with caller-prescribed gaps, for symbolic systems of
/// finite type: the tracer spells each target's required word at its start
/// time and bridges the rest. Used to produce staggered start times.
inline SeparatedFamily build_family_with_gaps(const System& sys, const std::array<Point, 4>& y, const FamilyParams& p,
                                              const std::function<std::size_t(const std::vector<int>&, std::size_t)>& gap) {
    check_family_params(p);
    if (!(sys.is_symbolic() && sys.is_sft())) throw Error(ErrorCode::UnsupportedSystem, "prescribed gaps need a shift of finite type");
    const auto matrix = sys.transition_matrix();
    const std::size_t N = static_cast<std::size_t>(sys.stride());
    const std::size_t L = agreement_length(sys, p.eps_trace);
    const std::size_t limit = max_gap(p.delta, p.m);
    SeparatedFamily fam{sys, y, p.m, p.delta, p.depth, p.eps_trace, p.gamma, {}};
    const std::size_t count = std::size_t{1} << p.depth;
    for (std::size_t i = 0; i < count; ++i) {
        const auto xi = xi_of(i, p.depth);
        const auto targets = family_targets(y, xi);
        std::vector<std::size_t> gaps;
        for (std::size_t k = 0; k + 1 < targets.size(); ++k) {
            const std::size_t t = gap(xi, k);
            if (t < 1 || t > limit) throw Error(ErrorCode::InvalidParams, "prescribed gap outside [1, 1 + delta*m]");
            gaps.push_back(t);
        }
        const auto starts = start_times(std::vector<std::size_t>(targets.size(), p.m), gaps);
        Word S;
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const Word w = targets[k].symbolic().word(0, N * (p.m - 1) + L);
            const std::size_t P = N * starts[k];
            if (S.empty()) {
                S = w;
                continue;
            }
            if (P >= S.size()) {
                auto br = detail::sft_bridge(matrix, S.back(), w[0], P - S.size());
                if (!br) throw Error(ErrorCode::SearchFailed, "no bridge for xi = " + xi_string(xi));
                S.insert(S.end(), br->begin(), br->end());
                S.insert(S.end(), w.begin(), w.end());
            } else {
                for (std::size_t q = 0; q < w.size(); ++q) {
                    if (P + q < S.size()) {
                        if (S[P + q] != w[q]) throw Error(ErrorCode::SearchFailed, "overlap conflict for xi = " + xi_string(xi));
                    } else {
                        S.push_back(w[q]);
                    }
                }
            }
        }
        TracingInstance inst{targets, GapSchedule{std::vector<std::size_t>(targets.size(), p.m), gaps}, p.delta, p.eps_trace};
        fam.members.push_back({xi, make_certificate(sys, extend_word(sys, S), std::move(inst), "prescribed-gaps")});
    }
    return fam;
}

/// Which index sets the separation horizon for a pair whose xi first
/// differs at position k (1-based). Pair: (1 + delta) k m. Target: the first
/// differing target is x_{2k-1}, horizon (1 + delta)(2k - 1) m.
enum class HorizonIndex { Pair, Target };

inline const char* to_string(HorizonIndex h) { return h == HorizonIndex::Pair ? "pair" : "target"; }

struct SeparationReport {
    bool separated = false;
    HorizonIndex index = HorizonIndex::Pair;
    std::size_t pairs = 0;
    std::size_t case1 = 0, case2 = 0; // |s_n(xi) - s_n(xi')| <= 4 delta m at the first differing target n, or not
    std::size_t failures = 0;
    std::string first_failure;       // "xi/xi' achieved" for the lexicographically first failing pair
    double min_achieved = INFINITY;  // smallest max-distance within the horizon over pairs
    double bound = 0;                // entropy lower bound the verified separation supports
};

/// Checks every pair xi != xi' for separation: some j below the horizon with
/// d(f^j z_xi, f^j z_xi') > gamma. Returns the full tally; callers that want
/// the failure as an exception use require_separation.
inline SeparationReport check_pairwise_separation(const SeparatedFamily& fam, HorizonIndex index = HorizonIndex::Pair) {
    const System& sys = fam.system;
    const std::size_t M = fam.members.size();
    if (M != (std::size_t{1} << fam.depth)) throw Error(ErrorCode::FamilyMismatch, "family does not have 2^N members");
    for (std::size_t i = 0; i < M; ++i) {
        const auto& mem = fam.members[i];
        if (mem.xi != xi_of(i, fam.depth)) throw Error(ErrorCode::FamilyMismatch, "members are not in lexicographic xi order");
        if (!is_traced(sys, mem.certificate.tracer, mem.certificate.instance).traced)
            throw Error(ErrorCode::FamilyMismatch, "member " + xi_string(mem.xi) + " does not re-verify");
    }
    const double dm = (1.0 + fam.delta) * static_cast<double>(fam.m);
    const auto horizon_for = [&](std::size_t k) {
        const double units = index == HorizonIndex::Pair ? static_cast<double>(k) : static_cast<double>(2 * k - 1);
        return static_cast<std::size_t>(std::ceil(units * dm - kThresholdSlack));
    };
    const std::size_t hmax = horizon_for(fam.depth);
    std::vector<std::vector<Point>> orbits(M);
    parallel_for(M, [&](std::size_t i) { orbits[i] = orbit_segment(sys, fam.members[i].certificate.tracer, hmax).states; });
    std::vector<std::vector<std::uint64_t>> starts(M);
    for (std::size_t i = 0; i < M; ++i) starts[i] = fam.members[i].certificate.instance.schedule.starts();

    struct PairResult {
        double achieved = 0;
        bool ok = false;
        bool case1 = false;
    };
    std::vector<std::vector<PairResult>> res(M);
    parallel_for(M, [&](std::size_t a) {
        for (std::size_t b = a + 1; b < M; ++b) {
            const auto& xa = fam.members[a].xi;
            const auto& xb = fam.members[b].xi;
            std::size_t k = 0;
            while (xa[k] == xb[k]) ++k;
            ++k;
            const std::size_t H = horizon_for(k);
            PairResult pr;
            for (std::size_t j = 0; j < H && !pr.ok; ++j) {
                pr.achieved = std::max(pr.achieved, dist(sys, orbits[a][j], orbits[b][j]));
                pr.ok = pr.achieved > fam.gamma;
            }
            const auto sa = static_cast<double>(starts[a][2 * k - 2]), sb = static_cast<double>(starts[b][2 * k - 2]);
            pr.case1 = std::fabs(sa - sb) <= 4 * fam.delta * static_cast<double>(fam.m) + kThresholdSlack;
            res[a].push_back(pr);
        }
    });
    SeparationReport rep;
    rep.index = index;
    for (std::size_t a = 0; a < M; ++a)
        for (std::size_t k = 0; k < res[a].size(); ++k) {
            const auto& pr = res[a][k];
            ++rep.pairs;
            (pr.case1 ? rep.case1 : rep.case2)++;
            rep.min_achieved = std::min(rep.min_achieved, pr.achieved);
            if (pr.ok) continue;
            if (rep.failures++ == 0)
                rep.first_failure = xi_string(fam.members[a].xi) + "/" + xi_string(fam.members[a + 1 + k].xi) + " reaches only " +
                                    std::to_string(pr.achieved);
        }
    rep.separated = rep.failures == 0;
    // 2^k points separated over horizon_for(k) for every k: rate ln 2 per (1 + delta) m
    // per unit of the horizon index.
    rep.bound = index == HorizonIndex::Pair ? std::log(2.0) / dm : std::log(2.0) / (2.0 * dm);
    return rep;
}

/// check_pairwise_separation that raises SeparationFailure on the first
/// failing pair.
inline SeparationReport verify_pairwise_separation(const SeparatedFamily& fam, HorizonIndex index = HorizonIndex::Pair) {
    auto rep = check_pairwise_separation(fam, index);
    if (!rep.separated)
        throw Error(ErrorCode::SeparationFailure, std::to_string(rep.failures) + " of " + std::to_string(rep.pairs) +
                                                      " pairs not separated at the " + to_string(index) +
                                                      " horizon; first " + rep.first_failure);
    return rep;
}

inline json family_to_json(const SeparatedFamily& f) {
    json j;
    j["system"] = system_to_json(f.system);
    j["base"] = json::array();
    for (const auto& y : f.base) j["base"].push_back(point_to_json(y));
    j["m"] = f.m;
    j["delta"] = f.delta;
    j["N"] = f.depth;
    j["eps_trace"] = f.eps_trace;
    j["gamma"] = f.gamma;
    json mem = json::array();
    for (const auto& m : f.members) {
        json c = certificate_to_json(f.system, m.certificate);
        c.erase("system");
        c.erase("targets");
        mem.push_back({{"xi", xi_string(m.xi)}, {"certificate", c}});
    }
    j["members"] = mem;
    return j;
}

inline SeparatedFamily family_from_json(const json& j) {
    try {
        SeparatedFamily f{system_from_json(j.at("system")), {}, 0, 0, 0, 0, 0, {}};
        for (std::size_t i = 0; i < 4; ++i) f.base[i] = point_from_json(j.at("base").at(i));
        f.m = j.at("m").get<std::size_t>();
        f.delta = j.at("delta").get<double>();
        f.depth = j.at("N").get<std::size_t>();
        f.eps_trace = j.at("eps_trace").get<double>();
        f.gamma = j.at("gamma").get<double>();
        for (const auto& jm : j.at("members")) {
            FamilyMember m;
            for (char c : jm.at("xi").get<std::string>()) m.xi.push_back(c - '0');
            if (m.xi.size() != f.depth) throw Error(ErrorCode::FamilyMismatch, "xi length differs from N");
            json c = jm.at("certificate");
            c["system"] = j.at("system");
            json targets = json::array();
            for (const auto& t : family_targets(f.base, m.xi)) targets.push_back(point_to_json(t));
            c["targets"] = targets;
            m.certificate = certificate_from_json(c).second;
            f.members.push_back(std::move(m));
        }
        return f;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed family: ") + e.what());
    }
}

} // namespace ergolab
