#pragma once

// Named example systems and the {"kind": ..., "params": {...}} JSON encoding
// of systems and points.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergolab/systems.hpp"

namespace ergolab {

using json = nlohmann::json;

inline Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return parse_decimal(text);
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator in " + text);
    return num / den;
}

inline Rational rational_from_json(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number()) return rational_from_double(j.get<double>());
    throw Error(ErrorCode::ConfigError, "expected a number or rational string");
}

struct ZooEntry {
    std::string name;
    std::string description;
    std::function<System(const json&)> make;
};

inline double param_or(const json& p, const char* key, double fallback) {
    return p.contains(key) ? p.at(key).get<double>() : fallback;
}

inline const std::vector<ZooEntry>& zoo_catalog() {
    static const std::vector<ZooEntry> entries = {
        {"full_shift", "full shift on k symbols (params: k, default 2)",
         [](const json& p) { return full_shift(p.contains("k") ? p.at("k").get<int>() : 2); }},
        {"golden_mean_sft", "binary SFT forbidding the word 11", [](const json&) { return golden_mean_sft(); }},
        {"density_zero_subshift", "orbit closure of the indicator of {2^j}", [](const json&) { return density_zero_subshift(); }},
        {"rotation", "circle rotation by alpha (params: alpha, default golden)",
         [](const json& p) { return p.contains("alpha") ? rotation(p.at("alpha").get<double>()) : golden_rotation(); }},
        {"tent_map", "x -> 1 - |1 - 2x| on [0,1]", [](const json&) { return tent_map(); }},
        {"halving_map", "x -> x/2 on [0,1]", [](const json&) { return halving_map(); }},
        {"logistic", "x -> r x (1-x) on [0,1] (params: r)",
         [](const json& p) { return logistic(param_or(p, "r", 2.5)); }},
    };
    return entries;
}

inline System zoo(const std::string& name, const json& params = json::object()) {
    for (const auto& e : zoo_catalog())
        if (e.name == name) return e.make(params);
    throw Error(ErrorCode::UnknownSystem, "no zoo system named '" + name + "'");
}

// ---------------------------------------------------------------------------
// Systems <-> JSON

inline json system_to_json(const System& sys) {
    json out;
    json params = json::object();
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, FullShift>) {
                out["kind"] = "full_shift";
                params["k"] = k.k;
            } else if constexpr (std::is_same_v<K, SftShift>) {
                out["kind"] = "sft";
                params["matrix"] = k.matrix;
            } else if constexpr (std::is_same_v<K, OrbitClosureShift>) {
                out["kind"] = "orbit_closure";
                params["rule"] = k.rule;
            } else if constexpr (std::is_same_v<K, Rotation>) {
                out["kind"] = "rotation";
                params["alpha"] = k.alpha();
                params["alpha_phase"] = std::to_string(k.phase);
            } else if constexpr (std::is_same_v<K, IntervalMap>) {
                out["kind"] = "interval_map";
                params["interval"] = {k.lo.str(), k.hi.str()};
                json pieces = json::array();
                for (const auto& pc : k.pieces) {
                    json jp;
                    jp["expr"] = pc.formula.text();
                    if (pc.upto) jp["upto"] = pc.upto->str();
                    pieces.push_back(jp);
                }
                params["pieces"] = pieces;
                params["tol"] = k.tol;
            } else if constexpr (std::is_same_v<K, PowerSystem>) {
                out["kind"] = "power";
                params["base"] = system_to_json(*k.base);
                params["n"] = k.n;
            } else {
                out["kind"] = "product";
                params["first"] = system_to_json(*k.first);
                params["second"] = system_to_json(*k.second);
            }
        },
        sys.kind);
    out["params"] = params;
    out["name"] = sys.name;
    if (sys.metric_base != 2.0) out["metric_base"] = sys.metric_base;
    return out;
}

inline System system_from_json(const json& j) {
    if (j.is_string()) return zoo(j.get<std::string>());
    if (!j.is_object() || !j.contains("kind")) throw Error(ErrorCode::ConfigError, "system needs a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const json params = j.value("params", json::object());
    System s;
    try {
        if (kind == "full_shift") {
            s = full_shift(params.value("k", 2));
        } else if (kind == "sft") {
            if (params.contains("matrix")) {
                s = sft(params.at("matrix").get<std::vector<std::vector<std::uint8_t>>>());
            } else {
                s = sft_from_forbidden(params.value("alphabet", 2), params.at("forbidden").get<std::vector<std::string>>());
            }
        } else if (kind == "orbit_closure") {
            if (params.value("rule", std::string("density_zero")) != "density_zero")
                throw Error(ErrorCode::UnknownSystem, "unknown orbit-closure rule");
            s = density_zero_subshift();
        } else if (kind == "rotation") {
            if (params.contains("alpha_phase"))
                s = rotation_from_phase(std::stoull(params.at("alpha_phase").get<std::string>()));
            else
                s = rotation(params.at("alpha").get<double>());
        } else if (kind == "interval_map") {
            Rational lo = 0, hi = 1;
            if (params.contains("interval")) {
                lo = rational_from_json(params.at("interval").at(0));
                hi = rational_from_json(params.at("interval").at(1));
            }
            std::vector<MapPiece> pieces;
            if (params.contains("expr")) {
                pieces.push_back({std::nullopt, Expr::parse(params.at("expr").get<std::string>())});
            } else {
                for (const auto& jp : params.at("pieces")) {
                    MapPiece pc{std::nullopt, Expr::parse(jp.at("expr").get<std::string>())};
                    if (jp.contains("upto")) pc.upto = rational_from_json(jp.at("upto"));
                    pieces.push_back(std::move(pc));
                }
            }
            s = interval_map(std::move(pieces), lo, hi, "interval_map", params.value("tol", 1e-9));
        } else if (kind == "power") {
            s = power(system_from_json(params.at("base")), params.at("n").get<int>());
        } else if (kind == "product") {
            s = product(system_from_json(params.at("first")), system_from_json(params.at("second")));
        } else {
            s = zoo(kind, params);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad system params: ") + e.what());
    }
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("metric_base")) s.metric_base = j.at("metric_base").get<double>();
    return s;
}

// ---------------------------------------------------------------------------
// Points <-> JSON

inline json point_to_json(const Point& x) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SymbolicPoint>) {
                const SymbolicPoint n = p.normalized();
                json j;
                j["prefix"] = format_word(n.prefix());
                if (n.tail() == SymbolicPoint::Tail::Periodic)
                    j["cycle"] = format_word(n.cycle());
                else
                    j["generator_offset"] = std::to_string(n.generator_offset());
                return j;
            } else if constexpr (std::is_same_v<P, CirclePoint>) {
                return json{{"phase", std::to_string(p.phase)}, {"x", p.value()}};
            } else if constexpr (std::is_same_v<P, RealPoint>) {
                json j{{"x", p.value}};
                if (p.exact) j["exact"] = p.exact->str();
                return j;
            } else {
                json parts = json::array();
                for (const auto& q : p.parts) parts.push_back(point_to_json(q));
                return json{{"parts", parts}};
            }
        },
        x.v);
}

inline Point point_from_json(const json& j) {
    if (j.contains("parts")) {
        ProductPoint pp;
        for (const auto& q : j.at("parts")) pp.parts.push_back(point_from_json(q));
        return pp;
    }
    if (j.contains("prefix")) {
        Word prefix = parse_word(j.at("prefix").get<std::string>());
        if (j.contains("generator_offset"))
            return SymbolicPoint::generator(std::stoull(j.at("generator_offset").get<std::string>()), prefix);
        return SymbolicPoint(prefix, parse_word(j.value("cycle", std::string("0"))));
    }
    if (j.contains("phase")) return CirclePoint{std::stoull(j.at("phase").get<std::string>())};
    if (j.contains("exact")) return RealPoint::from_rational(parse_rational(j.at("exact").get<std::string>()));
    if (j.contains("x")) return Point::real(j.at("x").get<double>());
    throw Error(ErrorCode::ConfigError, "unrecognised point encoding");
}

/// Point encoding appropriate to the system: bare numbers are interval or
/// circle coordinates, strings are symbolic words ("0110" or "01(10)").
inline Point point_for(const System& sys, const json& j) {
    if (j.is_number()) {
        if (sys.is_rotation()) return Point::circle(j.get<double>());
        return Point::real(j.get<double>());
    }
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (!sys.is_symbolic()) return RealPoint::from_rational(parse_rational(s));
        auto open = s.find('(');
        if (open != std::string::npos) {
            auto close = s.find(')', open);
            if (close == std::string::npos) throw Error(ErrorCode::ConfigError, "unbalanced '(' in " + s);
            return Point::word(s.substr(0, open), s.substr(open + 1, close - open - 1));
        }
        if (s == "generator") return SymbolicPoint::generator(0);
        return extend_word(sys, parse_word(s));
    }
    return point_from_json(j);
}

} // namespace ergolab
