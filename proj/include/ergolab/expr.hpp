#pragma once

// Small arithmetic-expression language for interval-map formulas.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | 'x' | 'pi' | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Formulas that are piecewise affine in x with decimal constants (tent,
// halving, 1-x, ...) can be evaluated over exact rationals; everything else is
// evaluated in double precision only.

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/numeric.hpp"

namespace ergolab {

class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& text) {
        Parser p{text, 0};
        Expr e;
        e.root_ = p.expr();
        p.skip();
        if (p.pos != text.size())
            throw Error(ErrorCode::ParseError, "trailing input at " + std::to_string(p.pos) + " in '" + text + "'");
        e.text_ = text;
        auto info = analyse(*e.root_);
        e.exact_ = info.exact && info.degree <= 1;
        return e;
    }

    const std::string& text() const { return text_; }

    /// True when the formula is piecewise affine in x with exact constants.
    bool exact() const { return exact_; }

    double operator()(double x) const { return eval_d(*root_, x); }

    Rational operator()(const Rational& x) const {
        if (!exact_) throw Error(ErrorCode::InvalidSystem, "formula '" + text_ + "' has no exact evaluation");
        return eval_q(*root_, x);
    }

private:
    enum class Kind { Num, Var, Pi, Neg, Add, Sub, Mul, Div, Pow, Call };

    struct Node {
        Kind kind = Kind::Num;
        Rational q;
        double d = 0.0;
        std::string name;
        std::vector<std::shared_ptr<const Node>> kids;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Info {
        int degree = 0; // 0 constant, 1 affine, 99 anything else
        bool exact = true;
    };

    static Info analyse(const Node& n) {
        constexpr int kNonlinear = 99;
        switch (n.kind) {
        case Kind::Num: return {0, true};
        case Kind::Var: return {1, true};
        case Kind::Pi: return {0, false};
        case Kind::Neg: return analyse(*n.kids[0]);
        case Kind::Add:
        case Kind::Sub: {
            auto a = analyse(*n.kids[0]), b = analyse(*n.kids[1]);
            return {std::max(a.degree, b.degree), a.exact && b.exact};
        }
        case Kind::Mul: {
            auto a = analyse(*n.kids[0]), b = analyse(*n.kids[1]);
            return {std::min(a.degree + b.degree, kNonlinear), a.exact && b.exact};
        }
        case Kind::Div: {
            auto a = analyse(*n.kids[0]), b = analyse(*n.kids[1]);
            return {b.degree == 0 ? a.degree : kNonlinear, a.exact && b.exact};
        }
        case Kind::Pow: {
            auto a = analyse(*n.kids[0]), b = analyse(*n.kids[1]);
            if (a.degree == 0 && b.degree == 0) return {0, false};
            return {kNonlinear, false};
        }
        case Kind::Call: {
            Info out{0, true};
            for (const auto& k : n.kids) {
                auto i = analyse(*k);
                out.degree = std::max(out.degree, i.degree);
                out.exact = out.exact && i.exact;
            }
            if (n.name == "abs" || n.name == "min" || n.name == "max") return out;
            return {out.degree == 0 ? 0 : kNonlinear, false};
        }
        }
        return {kNonlinear, false};
    }

    static double eval_d(const Node& n, double x) {
        switch (n.kind) {
        case Kind::Num: return n.d;
        case Kind::Var: return x;
        case Kind::Pi: return M_PI;
        case Kind::Neg: return -eval_d(*n.kids[0], x);
        case Kind::Add: return eval_d(*n.kids[0], x) + eval_d(*n.kids[1], x);
        case Kind::Sub: return eval_d(*n.kids[0], x) - eval_d(*n.kids[1], x);
        case Kind::Mul: return eval_d(*n.kids[0], x) * eval_d(*n.kids[1], x);
        case Kind::Div: return eval_d(*n.kids[0], x) / eval_d(*n.kids[1], x);
        case Kind::Pow: return std::pow(eval_d(*n.kids[0], x), eval_d(*n.kids[1], x));
        case Kind::Call: {
            const double a = eval_d(*n.kids[0], x);
            if (n.name == "abs") return std::fabs(a);
            if (n.name == "sqrt") return std::sqrt(a);
            if (n.name == "sin") return std::sin(a);
            if (n.name == "cos") return std::cos(a);
            if (n.name == "exp") return std::exp(a);
            if (n.name == "log") return std::log(a);
            const double b = eval_d(*n.kids[1], x);
            if (n.name == "min") return std::min(a, b);
            if (n.name == "max") return std::max(a, b);
            break;
        }
        }
        return std::nan("");
    }

    static Rational eval_q(const Node& n, const Rational& x) {
        switch (n.kind) {
        case Kind::Num: return n.q;
        case Kind::Var: return x;
        case Kind::Neg: return -eval_q(*n.kids[0], x);
        case Kind::Add: return eval_q(*n.kids[0], x) + eval_q(*n.kids[1], x);
        case Kind::Sub: return eval_q(*n.kids[0], x) - eval_q(*n.kids[1], x);
        case Kind::Mul: return eval_q(*n.kids[0], x) * eval_q(*n.kids[1], x);
        case Kind::Div: {
            Rational den = eval_q(*n.kids[1], x);
            if (den == 0) throw Error(ErrorCode::IllegalPoint, "division by zero");
            return eval_q(*n.kids[0], x) / den;
        }
        case Kind::Call: {
            Rational a = eval_q(*n.kids[0], x);
            if (n.name == "abs") return a < 0 ? Rational(-a) : a;
            Rational b = eval_q(*n.kids[1], x);
            if (n.name == "min") return a < b ? a : b;
            if (n.name == "max") return a < b ? b : a;
            break;
        }
        default: break;
        }
        throw Error(ErrorCode::InvalidSystem, "inexact node in exact evaluation");
    }

    struct Parser {
        const std::string& s;
        std::size_t pos;

        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& msg) const {
            throw Error(ErrorCode::ParseError, msg + " at " + std::to_string(pos) + " in '" + s + "'");
        }
        static NodePtr make(Kind k, std::vector<NodePtr> kids = {}) {
            auto n = std::make_shared<Node>();
            n->kind = k;
            n->kids = std::move(kids);
            return n;
        }

        NodePtr expr() {
            NodePtr lhs = term();
            for (;;) {
                if (eat('+'))
                    lhs = make(Kind::Add, {lhs, term()});
                else if (eat('-'))
                    lhs = make(Kind::Sub, {lhs, term()});
                else
                    return lhs;
            }
        }
        NodePtr term() {
            NodePtr lhs = unary();
            for (;;) {
                if (eat('*'))
                    lhs = make(Kind::Mul, {lhs, unary()});
                else if (eat('/'))
                    lhs = make(Kind::Div, {lhs, unary()});
                else
                    return lhs;
            }
        }
        NodePtr unary() {
            if (eat('-')) return make(Kind::Neg, {unary()});
            if (eat('+')) return unary();
            return power();
        }
        NodePtr power() {
            NodePtr base = atom();
            if (eat('^')) return make(Kind::Pow, {base, unary()});
            return base;
        }
        NodePtr atom() {
            skip();
            if (pos >= s.size()) fail("unexpected end");
            char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr e = expr();
                if (!eat(')')) fail("expected ')'");
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t start = pos;
                while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
                if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                    std::size_t save = pos++;
                    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
                    if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                    } else {
                        pos = save;
                    }
                }
                auto n = std::make_shared<Node>();
                n->kind = Kind::Num;
                n->q = parse_decimal(s.substr(start, pos - start));
                n->d = to_double(n->q);
                return n;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t start = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
                std::string name = s.substr(start, pos - start);
                if (name == "x") return make(Kind::Var);
                if (name == "pi") return make(Kind::Pi);
                static const char* unary_fns[] = {"abs", "sqrt", "sin", "cos", "exp", "log"};
                static const char* binary_fns[] = {"min", "max"};
                int arity = 0;
                for (auto f : unary_fns)
                    if (name == f) arity = 1;
                for (auto f : binary_fns)
                    if (name == f) arity = 2;
                if (arity == 0) fail("unknown identifier '" + name + "'");
                if (!eat('(')) fail("expected '(' after " + name);
                std::vector<NodePtr> args{expr()};
                while (eat(',')) args.push_back(expr());
                if (!eat(')')) fail("expected ')'");
                if (static_cast<int>(args.size()) != arity) fail("wrong arity for " + name);
                auto n = std::make_shared<Node>();
                n->kind = Kind::Call;
                n->name = name;
                n->kids = std::move(args);
                return n;
            }
            fail(std::string("unexpected '") + c + "'");
        }
    };

    NodePtr root_;
    std::string text_;
    bool exact_ = false;
};

} // namespace ergolab
