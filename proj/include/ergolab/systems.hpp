#pragma once

// Concrete dynamical systems (X, f, d): symbolic shifts, circle rotations,
// interval maps, iterated powers and products, together with their points,
// orbit evaluation and metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/expr.hpp"
#include "ergolab/numeric.hpp"

namespace ergolab {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

/// Symbols past this index are never inspected by the metric; two symbolic
/// points agreeing on the first kMetricResolution symbols are at distance 0.
inline constexpr std::size_t kMetricResolution = 62;

// ---------------------------------------------------------------------------
// Points

/// The density-zero generator: symbol 1 exactly at indices 2^j (j >= 0).
inline Symbol density_zero_symbol(std::uint64_t i) {
    return (i != 0 && (i & (i - 1)) == 0) ? 1 : 0;
}

/// Lazy one-sided sequence: a finite prefix followed by either a periodic
/// cycle or a tail of the density-zero generator, viewed from `shift`.
class SymbolicPoint {
public:
    enum class Tail { Periodic, Generator };

    SymbolicPoint() : SymbolicPoint(Word{}, Word{0}) {}

    SymbolicPoint(Word prefix, Word cycle)
        : prefix_(std::make_shared<const Word>(std::move(prefix))),
          cycle_(std::make_shared<const Word>(std::move(cycle))),
          tail_(Tail::Periodic) {
        if (cycle_->empty()) throw Error(ErrorCode::IllegalPoint, "periodic tail must be nonempty");
    }

    static SymbolicPoint periodic(Word cycle) { return SymbolicPoint(Word{}, std::move(cycle)); }

    static SymbolicPoint generator(std::uint64_t offset = 0, Word prefix = {}) {
        SymbolicPoint p(std::move(prefix), Word{0});
        p.tail_ = Tail::Generator;
        p.gen_offset_ = offset;
        return p;
    }

    Symbol at(std::uint64_t j) const {
        const std::uint64_t raw = shift_ + j;
        if (raw < prefix_->size()) return (*prefix_)[raw];
        const std::uint64_t t = raw - prefix_->size();
        if (tail_ == Tail::Periodic) return (*cycle_)[t % cycle_->size()];
        return density_zero_symbol(gen_offset_ + t);
    }

    Word word(std::uint64_t from, std::size_t len) const {
        Word w(len);
        for (std::size_t i = 0; i < len; ++i) w[i] = at(from + i);
        return w;
    }

    SymbolicPoint shifted(std::uint64_t by = 1) const {
        SymbolicPoint p = *this;
        p.shift_ += by;
        return p;
    }

    /// Equivalent point with the shift folded into prefix/tail.
    SymbolicPoint normalized() const {
        if (shift_ == 0) return *this;
        SymbolicPoint p = *this;
        const std::uint64_t plen = prefix_->size();
        if (shift_ < plen) {
            p.prefix_ = std::make_shared<const Word>(prefix_->begin() + static_cast<std::ptrdiff_t>(shift_), prefix_->end());
        } else {
            const std::uint64_t t = shift_ - plen;
            p.prefix_ = std::make_shared<const Word>();
            if (tail_ == Tail::Periodic) {
                Word c(cycle_->size());
                for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*cycle_)[(t + i) % cycle_->size()];
                p.cycle_ = std::make_shared<const Word>(std::move(c));
            } else {
                p.gen_offset_ = gen_offset_ + t;
            }
        }
        p.shift_ = 0;
        return p;
    }

    const Word& prefix() const { return *prefix_; }
    const Word& cycle() const { return *cycle_; }
    Tail tail() const { return tail_; }
    std::uint64_t generator_offset() const { return gen_offset_; }
    std::uint64_t shift() const { return shift_; }

    /// Length of the part that is not yet periodic (prefix + unshifted part).
    std::size_t materialized_length() const {
        const std::size_t rest = prefix_->size() > shift_ ? prefix_->size() - shift_ : 0;
        return rest + (tail_ == Tail::Periodic ? 2 * cycle_->size() : kMetricResolution);
    }

private:
    std::shared_ptr<const Word> prefix_;
    std::shared_ptr<const Word> cycle_;
    Tail tail_ = Tail::Periodic;
    std::uint64_t gen_offset_ = 0;
    std::uint64_t shift_ = 0;
};

/// Point of the circle R/Z stored as a 64-bit binary fraction; addition
/// wraps modulo 1 exactly.
struct CirclePoint {
    std::uint64_t phase = 0;

    static CirclePoint from_double(double x) {
        const double f = x - std::floor(x);
        const long double scaled = std::ldexp(static_cast<long double>(f), 64) + 0.5L;
        if (scaled >= 18446744073709551616.0L) return {0};
        return {static_cast<std::uint64_t>(scaled)};
    }
    double value() const { return std::ldexp(static_cast<double>(phase), -64); }
};

/// Interval point: a double, plus the exact rational when the map admits
/// exact evaluation.
struct RealPoint {
    double value = 0.0;
    std::optional<Rational> exact;

    static RealPoint from_double(double x) { return {x, rational_from_double(x)}; }
    static RealPoint from_rational(Rational q) {
        double v = to_double(q);
        return {v, std::move(q)};
    }
    static RealPoint inexact(double x) { return {x, std::nullopt}; }
};

struct Point;

struct ProductPoint {
    std::vector<Point> parts;
};

struct Point {
    std::variant<SymbolicPoint, CirclePoint, RealPoint, ProductPoint> v;

    Point() = default;
    Point(SymbolicPoint p) : v(std::move(p)) {}
    Point(CirclePoint p) : v(p) {}
    Point(RealPoint p) : v(std::move(p)) {}
    Point(ProductPoint p) : v(std::move(p)) {}

    static Point real(double x) { return RealPoint::from_double(x); }
    static Point circle(double x) { return CirclePoint::from_double(x); }
    static Point word(const std::string& prefix, const std::string& cycle = "0");
    static Point product(Point a, Point b) { return ProductPoint{{std::move(a), std::move(b)}}; }

    bool is_symbolic() const { return std::holds_alternative<SymbolicPoint>(v); }
    const SymbolicPoint& symbolic() const {
        if (auto p = std::get_if<SymbolicPoint>(&v)) return *p;
        throw Error(ErrorCode::IllegalPoint, "expected a symbolic point");
    }
    const RealPoint& real_point() const {
        if (auto p = std::get_if<RealPoint>(&v)) return *p;
        throw Error(ErrorCode::IllegalPoint, "expected an interval point");
    }
    const CirclePoint& circle_point() const {
        if (auto p = std::get_if<CirclePoint>(&v)) return *p;
        throw Error(ErrorCode::IllegalPoint, "expected a circle point");
    }
    const ProductPoint& product_point() const {
        if (auto p = std::get_if<ProductPoint>(&v)) return *p;
        throw Error(ErrorCode::IllegalPoint, "expected a product point");
    }
    /// Scalar coordinate for interval and circle points.
    double coordinate() const {
        if (auto p = std::get_if<RealPoint>(&v)) return p->value;
        if (auto p = std::get_if<CirclePoint>(&v)) return p->value();
        throw Error(ErrorCode::IllegalPoint, "point has no scalar coordinate");
    }
};

inline Word parse_word(const std::string& s) {
    Word w;
    w.reserve(s.size());
    for (char c : s) {
        if (c >= '0' && c <= '9')
            w.push_back(static_cast<Symbol>(c - '0'));
        else if (c >= 'a' && c <= 'z')
            w.push_back(static_cast<Symbol>(10 + c - 'a'));
        else
            throw Error(ErrorCode::IllegalPoint, std::string("bad symbol '") + c + "'");
    }
    return w;
}

inline std::string format_word(const Word& w) {
    std::string s;
    s.reserve(w.size());
    for (Symbol c : w) s.push_back(c < 10 ? static_cast<char>('0' + c) : static_cast<char>('a' + c - 10));
    return s;
}

inline Point Point::word(const std::string& prefix, const std::string& cycle) {
    return SymbolicPoint(parse_word(prefix), parse_word(cycle));
}

// ---------------------------------------------------------------------------
// Systems

struct System;
using SystemPtr = std::shared_ptr<const System>;

struct FullShift {
    int k = 2;
};

struct SftShift {
    int k = 2;
    std::vector<std::vector<std::uint8_t>> matrix; // matrix[a][b] = 1 iff "ab" allowed
};

struct OrbitClosureShift {
    std::string rule = "density_zero";
};

struct Rotation {
    std::uint64_t phase = 0; // angle alpha as a 64-bit binary fraction
    double alpha() const { return std::ldexp(static_cast<double>(phase), -64); }
};

struct MapPiece {
    std::optional<Rational> upto; // piece applies for x <= upto; last piece has none
    Expr formula;
};

struct IntervalMap {
    Rational lo = 0, hi = 1;
    std::vector<MapPiece> pieces;
    double tol = 1e-9;

    bool exact() const {
        return std::all_of(pieces.begin(), pieces.end(), [](const MapPiece& p) { return p.formula.exact(); });
    }
    double lo_d() const { return to_double(lo); }
    double hi_d() const { return to_double(hi); }

    double eval(double x) const {
        for (const auto& p : pieces)
            if (!p.upto || x <= to_double(*p.upto)) return p.formula(x);
        return pieces.back().formula(x);
    }
    Rational eval(const Rational& x) const {
        for (const auto& p : pieces)
            if (!p.upto || x <= *p.upto) return p.formula(x);
        return pieces.back().formula(x);
    }
};

struct PowerSystem {
    SystemPtr base;
    int n = 1;
};

struct ProductSystem {
    SystemPtr first, second;
};

struct System {
    std::variant<FullShift, SftShift, OrbitClosureShift, Rotation, IntervalMap, PowerSystem, ProductSystem> kind;
    double metric_base = 2.0;
    std::string name;

    bool is_symbolic() const {
        if (auto p = std::get_if<PowerSystem>(&kind)) return p->base->is_symbolic();
        return std::holds_alternative<FullShift>(kind) || std::holds_alternative<SftShift>(kind) ||
               std::holds_alternative<OrbitClosureShift>(kind);
    }
    bool is_interval() const { return std::holds_alternative<IntervalMap>(kind); }
    bool is_rotation() const { return std::holds_alternative<Rotation>(kind); }
    const IntervalMap& interval_map() const {
        if (auto p = std::get_if<IntervalMap>(&kind)) return *p;
        throw Error(ErrorCode::UnsupportedSystem, name + " is not an interval map");
    }
    /// Alphabet size of a symbolic system (0 otherwise).
    int alphabet() const {
        if (auto p = std::get_if<FullShift>(&kind)) return p->k;
        if (auto p = std::get_if<SftShift>(&kind)) return p->k;
        if (std::holds_alternative<OrbitClosureShift>(kind)) return 2;
        if (auto p = std::get_if<PowerSystem>(&kind)) return p->base->alphabet();
        return 0;
    }
    /// Number of base steps one application of f takes (N for powers).
    int stride() const {
        if (auto p = std::get_if<PowerSystem>(&kind)) return p->n * p->base->stride();
        return 1;
    }
    /// The non-power system underneath any stack of powers.
    const System& root() const {
        if (auto p = std::get_if<PowerSystem>(&kind)) return p->base->root();
        return *this;
    }
    /// Transition matrix for shifts of finite type (full shifts included).
    std::vector<std::vector<std::uint8_t>> transition_matrix() const {
        const System& r = root();
        if (auto p = std::get_if<SftShift>(&r.kind)) return p->matrix;
        if (auto p = std::get_if<FullShift>(&r.kind))
            return std::vector<std::vector<std::uint8_t>>(p->k, std::vector<std::uint8_t>(p->k, 1));
        throw Error(ErrorCode::UnsupportedSystem, name + " is not a shift of finite type");
    }
    bool is_sft() const {
        const System& r = root();
        return std::holds_alternative<SftShift>(r.kind) || std::holds_alternative<FullShift>(r.kind);
    }
    double diameter() const {
        if (is_symbolic()) return 1.0;
        if (auto p = std::get_if<IntervalMap>(&kind)) return to_double(p->hi - p->lo);
        if (is_rotation()) return 0.5;
        if (auto p = std::get_if<ProductSystem>(&kind)) return std::max(p->first->diameter(), p->second->diameter());
        return 1.0;
    }
};

// ---------------------------------------------------------------------------
// Language checks

/// Whether `w` occurs as a window of the density-zero generator or of one of
/// its limit points (words with at most one 1).
inline bool density_zero_word_legal(const Word& w) {
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 1) return false;
        if (w[i] == 1) ones.push_back(i);
    }
    if (ones.size() <= 1) return true;
    for (int a = 0; a < 63; ++a) {
        const std::uint64_t pos = std::uint64_t{1} << a;
        if (pos < ones[0]) continue;
        const std::uint64_t off = pos - ones[0];
        bool ok = true;
        for (std::size_t i = 0; i < w.size() && ok; ++i) ok = density_zero_symbol(off + i) == w[i];
        if (ok) return true;
    }
    return false;
}

inline bool sft_word_legal(const std::vector<std::vector<std::uint8_t>>& m, const Word& w) {
    for (Symbol c : w)
        if (c >= m.size()) return false;
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        if (!m[w[i]][w[i + 1]]) return false;
    return true;
}

inline bool word_legal(const System& sys, const Word& w) {
    const System& r = sys.root();
    if (auto p = std::get_if<FullShift>(&r.kind))
        return std::all_of(w.begin(), w.end(), [&](Symbol c) { return c < p->k; });
    if (auto p = std::get_if<SftShift>(&r.kind)) return sft_word_legal(p->matrix, w);
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) return density_zero_word_legal(w);
    throw Error(ErrorCode::UnsupportedSystem, "word legality needs a symbolic system");
}

/// Throws IllegalPoint unless x belongs to the phase space of sys.
inline void validate(const System& sys, const Point& x) {
    if (auto p = std::get_if<PowerSystem>(&sys.kind)) return validate(*p->base, x);
    if (sys.is_symbolic()) {
        const auto& s = x.symbolic();
        const std::size_t len = s.materialized_length() + 1;
        if (!word_legal(sys, s.word(0, len)))
            throw Error(ErrorCode::IllegalPoint, "symbolic point " + format_word(s.word(0, std::min<std::size_t>(len, 32))) +
                                                     "... is not in " + sys.name);
        return;
    }
    if (sys.is_rotation()) {
        (void)x.circle_point();
        return;
    }
    if (auto m = std::get_if<IntervalMap>(&sys.kind)) {
        const auto& r = x.real_point();
        if (!std::isfinite(r.value) || r.value < m->lo_d() - m->tol || r.value > m->hi_d() + m->tol)
            throw Error(ErrorCode::IllegalPoint, "point " + std::to_string(r.value) + " outside interval");
        return;
    }
    if (auto p = std::get_if<ProductSystem>(&sys.kind)) {
        const auto& pp = x.product_point();
        if (pp.parts.size() != 2) throw Error(ErrorCode::IllegalPoint, "product point needs two parts");
        validate(*p->first, pp.parts[0]);
        validate(*p->second, pp.parts[1]);
    }
}

// ---------------------------------------------------------------------------
// Dynamics

inline Point step_unchecked(const System& sys, const Point& x);

inline RealPoint interval_step(const IntervalMap& m, const RealPoint& x) {
    if (x.exact && m.exact()) {
        Rational y = m.eval(*x.exact);
        if (y < m.lo || y > m.hi) throw Error(ErrorCode::IllegalPoint, "map leaves its interval at " + x.exact->str());
        return RealPoint::from_rational(std::move(y));
    }
    double y = m.eval(x.value);
    const double lo = m.lo_d(), hi = m.hi_d();
    if (!(y >= lo - m.tol && y <= hi + m.tol))
        throw Error(ErrorCode::IllegalPoint, "map leaves its interval at " + std::to_string(x.value));
    return RealPoint::inexact(std::clamp(y, lo, hi));
}

inline Point step_unchecked(const System& sys, const Point& x) {
    return std::visit(
        [&](const auto& k) -> Point {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, FullShift> || std::is_same_v<K, SftShift> ||
                          std::is_same_v<K, OrbitClosureShift>) {
                return x.symbolic().shifted(1);
            } else if constexpr (std::is_same_v<K, Rotation>) {
                return CirclePoint{x.circle_point().phase + k.phase};
            } else if constexpr (std::is_same_v<K, IntervalMap>) {
                return interval_step(k, x.real_point());
            } else if constexpr (std::is_same_v<K, PowerSystem>) {
                if (k.base->is_symbolic()) return x.symbolic().shifted(static_cast<std::uint64_t>(sys.stride()));
                Point y = x;
                for (int i = 0; i < k.n; ++i) y = step_unchecked(*k.base, y);
                return y;
            } else {
                const auto& pp = x.product_point();
                return ProductPoint{{step_unchecked(*k.first, pp.parts.at(0)), step_unchecked(*k.second, pp.parts.at(1))}};
            }
        },
        sys.kind);
}

/// f(x).
inline Point step(const System& sys, const Point& x) {
    validate(sys, x);
    return step_unchecked(sys, x);
}

/// f^n(x) without validation.
inline Point iterate(const System& sys, const Point& x, std::uint64_t n) {
    if (sys.is_symbolic()) return x.symbolic().shifted(n * static_cast<std::uint64_t>(sys.stride()));
    if (auto r = std::get_if<Rotation>(&sys.kind)) return CirclePoint{x.circle_point().phase + r->phase * n};
    Point y = x;
    for (std::uint64_t i = 0; i < n; ++i) y = step_unchecked(sys, y);
    return y;
}

struct OrbitSegment {
    Point base;
    std::vector<Point> states;
    std::size_t length() const { return states.size(); }
};

/// [x, f(x), ..., f^{n-1}(x)].
inline OrbitSegment orbit_segment(const System& sys, const Point& x, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidParams, "orbit length must be positive");
    validate(sys, x);
    OrbitSegment seg{x, {}};
    seg.states.reserve(n);
    seg.states.push_back(x);
    for (std::size_t i = 1; i < n; ++i) seg.states.push_back(step_unchecked(sys, seg.states.back()));
    return seg;
}

// ---------------------------------------------------------------------------
// Metric

inline double dist(const System& sys, const Point& x, const Point& y) {
    if (auto p = std::get_if<PowerSystem>(&sys.kind)) return dist(*p->base, x, y);
    if (sys.is_symbolic()) {
        const auto& a = x.symbolic();
        const auto& b = y.symbolic();
        for (std::size_t j = 0; j < kMetricResolution; ++j)
            if (a.at(j) != b.at(j)) return std::pow(sys.metric_base, -static_cast<double>(j));
        return 0.0;
    }
    if (sys.is_rotation()) {
        const std::uint64_t d = x.circle_point().phase - y.circle_point().phase;
        const std::uint64_t m = std::min(d, static_cast<std::uint64_t>(0) - d);
        return std::ldexp(static_cast<double>(m), -64);
    }
    if (sys.is_interval()) {
        const auto& a = x.real_point();
        const auto& b = y.real_point();
        if (a.exact && b.exact) {
            Rational d = *a.exact - *b.exact;
            return std::fabs(to_double(d));
        }
        return std::fabs(a.value - b.value);
    }
    const auto& k = std::get<ProductSystem>(sys.kind);
    const auto& a = x.product_point();
    const auto& b = y.product_point();
    return std::max(dist(*k.first, a.parts.at(0), b.parts.at(0)), dist(*k.second, a.parts.at(1), b.parts.at(1)));
}

/// Smallest L with base^{-L} <= eps: two symbolic points are within eps iff
/// they agree on their first L symbols.
inline std::size_t agreement_length(const System& sys, double eps) {
    std::size_t L = 0;
    while (L < kMetricResolution && std::pow(sys.metric_base, -static_cast<double>(L)) > eps) ++L;
    return L;
}

// ---------------------------------------------------------------------------
// Test functions

struct TestFunction {
    enum class Kind { Bump, Harmonic, Constant };

    Kind kind = Kind::Bump;
    Point center;
    double radius = 0.0;
    int harmonic = 1;
    bool sine = false;
    double constant = 1.0;

    double lipschitz(const System& sys) const {
        switch (kind) {
        case Kind::Bump: return 1.0 / radius;
        case Kind::Constant: return 0.0;
        case Kind::Harmonic: {
            if (sys.is_rotation()) return 2.0 * M_PI * harmonic;
            return M_PI * harmonic / sys.diameter();
        }
        }
        return 0.0;
    }

    double operator()(const System& sys, const Point& y) const {
        switch (kind) {
        case Kind::Bump: {
            const double d = dist(sys, y, center);
            return std::clamp((2.0 * radius - d) / radius, 0.0, 1.0);
        }
        case Kind::Constant: return constant;
        case Kind::Harmonic: {
            double arg;
            if (sys.is_rotation()) {
                arg = 2.0 * M_PI * harmonic * y.coordinate();
            } else {
                const auto& m = sys.interval_map();
                arg = M_PI * harmonic * (y.coordinate() - m.lo_d()) / to_double(m.hi - m.lo);
            }
            return sine ? std::sin(arg) : std::cos(arg);
        }
        }
        return 0.0;
    }
};

/// phi(y) = clamp((2 eps - d(y, center)) / eps, 0, 1): 1 on the closed
/// eps-ball, 0 outside the open 2eps-ball, linear in between.
inline TestFunction bump_function(Point center, double eps) {
    if (!(eps > 0)) throw Error(ErrorCode::NonPositiveRadius, "bump radius must be positive");
    TestFunction f;
    f.kind = TestFunction::Kind::Bump;
    f.center = std::move(center);
    f.radius = eps;
    return f;
}

inline TestFunction harmonic_function(int k, bool sine = false) {
    TestFunction f;
    f.kind = TestFunction::Kind::Harmonic;
    f.harmonic = k;
    f.sine = sine;
    return f;
}

inline TestFunction constant_function(double c) {
    TestFunction f;
    f.kind = TestFunction::Kind::Constant;
    f.constant = c;
    return f;
}

// ---------------------------------------------------------------------------
// Constructors

inline System full_shift(int k = 2) {
    if (k < 2 || k > 36) throw Error(ErrorCode::InvalidSystem, "full shift alphabet must be in [2,36]");
    System s;
    s.kind = FullShift{k};
    s.name = "full_shift(" + std::to_string(k) + ")";
    return s;
}

inline System sft(std::vector<std::vector<std::uint8_t>> matrix, std::string name = "sft") {
    const std::size_t k = matrix.size();
    if (k < 1 || k > 36) throw Error(ErrorCode::InvalidSystem, "transition matrix must be 1..36 square");
    for (std::size_t a = 0; a < k; ++a) {
        if (matrix[a].size() != k) throw Error(ErrorCode::InvalidSystem, "transition matrix is not square");
        bool row = false, col = false;
        for (std::size_t b = 0; b < k; ++b) {
            if (matrix[a][b] > 1) throw Error(ErrorCode::InvalidSystem, "transition matrix entries must be 0/1");
            row = row || matrix[a][b];
            col = col || matrix[b][a];
        }
        if (!row || !col)
            throw Error(ErrorCode::InvalidSystem, "symbol " + std::to_string(a) + " has an all-zero row or column");
    }
    System s;
    s.kind = SftShift{static_cast<int>(k), std::move(matrix)};
    s.name = std::move(name);
    return s;
}

/// SFT from forbidden words of length <= 2.
inline System sft_from_forbidden(int k, const std::vector<std::string>& forbidden, std::string name = "sft") {
    std::vector<std::vector<std::uint8_t>> m(k, std::vector<std::uint8_t>(k, 1));
    for (const auto& fw : forbidden) {
        Word w = parse_word(fw);
        for (Symbol c : w)
            if (c >= k) throw Error(ErrorCode::InvalidSystem, "forbidden word uses symbol outside alphabet");
        if (w.size() == 2) {
            m[w[0]][w[1]] = 0;
        } else if (w.size() == 1) {
            for (int b = 0; b < k; ++b) m[w[0]][b] = m[b][w[0]] = 0;
        } else {
            throw Error(ErrorCode::InvalidSystem, "forbidden words longer than 2 need a transition matrix (recode first)");
        }
    }
    return sft(std::move(m), std::move(name));
}

inline System golden_mean_sft() { return sft({{1, 1}, {1, 0}}, "golden_mean_sft"); }

inline System density_zero_subshift() {
    System s;
    s.kind = OrbitClosureShift{"density_zero"};
    s.name = "density_zero_subshift";
    return s;
}

inline System rotation_from_phase(std::uint64_t phase, std::string name = "") {
    System s;
    s.kind = Rotation{phase};
    s.name = name.empty() ? "rotation(" + std::to_string(std::ldexp(static_cast<double>(phase), -64)) + ")" : std::move(name);
    return s;
}

inline System rotation(double alpha) { return rotation_from_phase(CirclePoint::from_double(alpha).phase); }

inline constexpr double kGoldenAngle = 0.6180339887498949;

inline System golden_rotation() { return rotation_from_phase(CirclePoint::from_double(kGoldenAngle).phase, "rotation(golden)"); }

/// Samples the map on a grid and at piece breakpoints; throws unless every
/// value lies in [lo, hi] up to the tolerance.
inline void check_maps_into(const IntervalMap& m, const std::string& name, int grid = 1024) {
    const double lo = m.lo_d(), hi = m.hi_d();
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + (hi - lo) * i / grid;
        const double y = m.eval(x);
        if (!(y >= lo - m.tol && y <= hi + m.tol))
            throw Error(ErrorCode::InvalidSystem, name + " maps " + std::to_string(x) + " to " + std::to_string(y) +
                                                      " outside its interval");
    }
}

inline System interval_map(std::vector<MapPiece> pieces, Rational lo = 0, Rational hi = 1, std::string name = "interval_map",
                           double tol = 1e-9) {
    if (pieces.empty()) throw Error(ErrorCode::InvalidSystem, "interval map needs at least one formula");
    if (!(lo < hi)) throw Error(ErrorCode::InvalidSystem, "interval must have lo < hi");
    IntervalMap m{lo, hi, std::move(pieces), tol};
    check_maps_into(m, name);
    System s;
    s.kind = std::move(m);
    s.name = std::move(name);
    return s;
}

inline System interval_map(const std::string& formula, Rational lo = 0, Rational hi = 1, std::string name = "") {
    if (name.empty()) name = "map(" + formula + ")";
    return interval_map({MapPiece{std::nullopt, Expr::parse(formula)}}, std::move(lo), std::move(hi), std::move(name));
}

inline System tent_map() { return interval_map("1 - abs(1 - 2*x)", 0, 1, "tent_map"); }
inline System halving_map() { return interval_map("x/2", 0, 1, "halving_map"); }

inline System logistic(double r) {
    if (!(r >= 0 && r <= 4)) throw Error(ErrorCode::InvalidSystem, "logistic parameter must be in [0,4]");
    // Formatting keeps short decimals like 2.5 readable in the formula.
    std::string rs = rational_from_double(r).str();
    std::string formula;
    if (rs.find('/') == std::string::npos) {
        formula = rs + "*x*(1-x)";
    } else {
        formula = "(" + rs + ")*x*(1-x)";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "logistic(%g)", r);
    return interval_map(formula, 0, 1, buf);
}

inline System power(const System& base, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidParams, "power must be >= 1");
    System s;
    s.kind = PowerSystem{std::make_shared<const System>(base), n};
    s.metric_base = base.metric_base;
    s.name = base.name + "^" + std::to_string(n);
    return s;
}

inline System product(const System& a, const System& b) {
    System s;
    s.kind = ProductSystem{std::make_shared<const System>(a), std::make_shared<const System>(b)};
    s.name = a.name + "x" + b.name;
    return s;
}

// ---------------------------------------------------------------------------
// Landmark points

/// A path of symbols leading from `from` into a cycle of the SFT graph:
/// returns (connector, cycle) such that from+connector+cycle^inf is legal.
inline std::pair<Word, Word> sft_closing_tail(const std::vector<std::vector<std::uint8_t>>& m, Symbol from) {
    const std::size_t k = m.size();
    // shortest cycle through each symbol
    auto shortest_cycle = [&](Symbol s) -> Word {
        std::vector<int> prev(k, -1);
        std::vector<Symbol> queue{s};
        std::vector<bool> seen(k, false);
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            Symbol a = queue[qi];
            for (std::size_t b = 0; b < k; ++b) {
                if (!m[a][b]) continue;
                if (b == s) {
                    Word cyc{s};
                    std::vector<Symbol> back;
                    for (Symbol c = a; c != s; c = static_cast<Symbol>(prev[c])) back.push_back(c);
                    cyc.insert(cyc.end(), back.rbegin(), back.rend());
                    return cyc;
                }
                if (!seen[b]) {
                    seen[b] = true;
                    prev[b] = a;
                    queue.push_back(static_cast<Symbol>(b));
                }
            }
        }
        return {};
    };
    std::vector<int> prev(k, -1);
    std::vector<bool> seen(k, false);
    std::vector<Symbol> queue{from};
    seen[from] = true;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Symbol a = queue[qi];
        Word cyc = shortest_cycle(a);
        if (!cyc.empty()) {
            Word path;
            for (Symbol c = a; c != from; c = static_cast<Symbol>(prev[c])) path.push_back(c);
            std::reverse(path.begin(), path.end());
            // the cycle starts at `a`; the connector ends just before it
            if (!path.empty()) path.pop_back();
            if (a == from) {
                Word rot(cyc.begin() + 1, cyc.end());
                rot.push_back(cyc.front());
                return {Word{}, rot};
            }
            return {path, cyc};
        }
        for (std::size_t b = 0; b < k; ++b) {
            if (m[a][b] && !seen[b]) {
                seen[b] = true;
                prev[b] = a;
                queue.push_back(static_cast<Symbol>(b));
            }
        }
    }
    throw Error(ErrorCode::InvalidSystem, "no cycle reachable in transition graph");
}

/// A legal point whose first symbols are `w` (w must be a legal word).
inline Point extend_word(const System& sys, const Word& w) {
    const System& r = sys.root();
    if (std::holds_alternative<FullShift>(r.kind)) return SymbolicPoint(w, Word{0});
    if (auto p = std::get_if<SftShift>(&r.kind)) {
        if (w.empty()) {
            auto [conn, cyc] = sft_closing_tail(p->matrix, 0);
            Word pre{0};
            pre.insert(pre.end(), conn.begin(), conn.end());
            return SymbolicPoint(pre, cyc);
        }
        auto [conn, cyc] = sft_closing_tail(p->matrix, w.back());
        Word pre = w;
        pre.insert(pre.end(), conn.begin(), conn.end());
        return SymbolicPoint(pre, cyc);
    }
    if (std::holds_alternative<OrbitClosureShift>(r.kind)) {
        std::size_t ones = std::count(w.begin(), w.end(), Symbol{1});
        if (ones <= 1) return SymbolicPoint(w, Word{0});
        auto first = static_cast<std::size_t>(std::find(w.begin(), w.end(), Symbol{1}) - w.begin());
        for (int a = 0; a < 63; ++a) {
            const std::uint64_t pos = std::uint64_t{1} << a;
            if (pos < first) continue;
            const std::uint64_t off = pos - first;
            bool ok = true;
            for (std::size_t i = 0; i < w.size() && ok; ++i) ok = density_zero_symbol(off + i) == w[i];
            if (ok) return SymbolicPoint::generator(off);
        }
        throw Error(ErrorCode::IllegalPoint, "word is not in the density-zero language");
    }
    throw Error(ErrorCode::UnsupportedSystem, "extend_word needs a symbolic system");
}

} // namespace ergolab
