#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ergolab/error.hpp"

namespace ergolab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parses a plain decimal literal ("3", "-0.125", "2.5e-3") into the exact
/// rational it denotes, so 0.3 becomes 3/10 rather than the nearest double.
inline Rational parse_decimal(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw Error(ErrorCode::ParseError, "empty number");
    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') {
        neg = s[i] == '-';
        ++i;
    }
    BigInt mant = 0;
    long scale = 0;
    bool digits = false, dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            mant = mant * 10 + (c - '0');
            if (dot) --scale;
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits) throw Error(ErrorCode::ParseError, "not a number: " + s);
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E') throw Error(ErrorCode::ParseError, "bad number: " + s);
        try {
            scale += std::stol(s.substr(i + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "bad exponent: " + s);
        }
    }
    Rational r(mant);
    BigInt p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::labs(scale)));
    if (scale >= 0)
        r *= p;
    else
        r /= p;
    return neg ? Rational(-r) : r;
}

/// Best rational approximation with denominator <= max_den (continued
/// fractions). Values that are short decimals or simple fractions in disguise
/// (0.3, 2/3) are recovered exactly.
inline Rational rational_from_double(double x, std::int64_t max_den = 1'000'000'000) {
    if (!std::isfinite(x)) throw Error(ErrorCode::IllegalPoint, "non-finite value");
    const bool neg = x < 0;
    double y = std::fabs(x);
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double frac = y;
    for (int iter = 0; iter < 64; ++iter) {
        double a = std::floor(frac);
        if (a > 9.0e15) break;
        auto ai = static_cast<std::int64_t>(a);
        std::int64_t h2 = ai * h1 + h0;
        std::int64_t k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        double rem = frac - a;
        if (std::fabs(static_cast<double>(h1) / static_cast<double>(k1) - y) <= 1e-15 * std::max(1.0, y)) break;
        if (rem <= 0) break;
        frac = 1.0 / rem;
    }
    if (k1 == 0 || std::fabs(static_cast<double>(h1) / static_cast<double>(k1) - y) > 1e-12 * std::max(1.0, y))
        return Rational(x); // no short fraction nearby: keep the exact binary value
    Rational r{BigInt(h1), BigInt(k1)};
    return neg ? Rational(-r) : r;
}

} // namespace ergolab
