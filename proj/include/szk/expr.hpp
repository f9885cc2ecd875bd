#pragma once

// Expression DSL for closed-form maps of one variable x.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | base ('^' number)?
//   base   := 'x' | number | '(' expr ')' | func '(' expr ')'
//   func   := 'exp' | 'log' | 'sqrt'
//
// Whitespace is ignored.  The leading unary minus is the only extension of the
// plain grammar.  Derivatives are built symbolically with light constant folding.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

#include "szk/core.hpp"

namespace szk::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Exp, Log, Sqrt, Pow };

struct Node;
using Ptr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    double value = 0.0;  // Const payload, or exponent for Pow
    Ptr a;
    Ptr b;
};

inline Ptr constant(double v) { return std::make_shared<const Node>(Node{Op::Const, v, nullptr, nullptr}); }
inline Ptr var() { return std::make_shared<const Node>(Node{Op::Var, 0.0, nullptr, nullptr}); }

inline bool is_const(const Ptr& p, double v) { return p->op == Op::Const && p->value == v; }

inline double eval(const Node& n, double x) {
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x;
    case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Op::Neg: return -eval(*n.a, x);
    case Op::Exp: return std::exp(eval(*n.a, x));
    case Op::Log: return std::log(eval(*n.a, x));
    case Op::Sqrt: return std::sqrt(eval(*n.a, x));
    case Op::Pow: {
        const double base = eval(*n.a, x);
        const double e = n.value;
        if (e == 2.0) return base * base;
        if (e == 3.0) return base * base * base;
        return std::pow(base, e);
    }
    }
    return 0.0;
}

inline double eval(const Ptr& p, double x) { return eval(*p, x); }

inline Ptr make(Op op, Ptr a, Ptr b = nullptr, double v = 0.0) {
    // constant folding keeps derivative trees from growing without bound
    switch (op) {
    case Op::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case Op::Sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make(Op::Neg, b);
        break;
    case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case Op::Div:
        if (is_const(a, 0.0)) return constant(0.0);
        if (is_const(b, 1.0)) return a;
        break;
    case Op::Neg:
        if (a->op == Op::Const) return constant(-a->value);
        if (a->op == Op::Neg) return a->a;
        break;
    case Op::Pow:
        if (v == 0.0) return constant(1.0);
        if (v == 1.0) return a;
        break;
    default:
        break;
    }
    Node n{op, v, std::move(a), std::move(b)};
    if (n.a->op == Op::Const && (!n.b || n.b->op == Op::Const)) return constant(eval(n, 0.0));
    return std::make_shared<const Node>(std::move(n));
}


inline Ptr derivative(const Ptr& n) {
    switch (n->op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(1.0);
    case Op::Add: return make(Op::Add, derivative(n->a), derivative(n->b));
    case Op::Sub: return make(Op::Sub, derivative(n->a), derivative(n->b));
    case Op::Mul:
        return make(Op::Add, make(Op::Mul, derivative(n->a), n->b), make(Op::Mul, n->a, derivative(n->b)));
    case Op::Div: {
        // (a'b - ab') / b^2
        auto num = make(Op::Sub, make(Op::Mul, derivative(n->a), n->b), make(Op::Mul, n->a, derivative(n->b)));
        return make(Op::Div, num, make(Op::Pow, n->b, nullptr, 2.0));
    }
    case Op::Neg: return make(Op::Neg, derivative(n->a));
    case Op::Exp: return make(Op::Mul, n, derivative(n->a));
    case Op::Log: return make(Op::Div, derivative(n->a), n->a);
    case Op::Sqrt: return make(Op::Div, derivative(n->a), make(Op::Mul, constant(2.0), n));
    case Op::Pow: {
        auto outer = make(Op::Mul, constant(n->value), make(Op::Pow, n->a, nullptr, n->value - 1.0));
        return make(Op::Mul, outer, derivative(n->a));
    }
    }
    return constant(0.0);
}

inline std::string to_string(const Node& n) {
    std::ostringstream os;
    os.precision(17);
    switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Var: os << 'x'; break;
    case Op::Add: os << '(' << to_string(*n.a) << '+' << to_string(*n.b) << ')'; break;
    case Op::Sub: os << '(' << to_string(*n.a) << '-' << to_string(*n.b) << ')'; break;
    case Op::Mul: os << '(' << to_string(*n.a) << '*' << to_string(*n.b) << ')'; break;
    case Op::Div: os << '(' << to_string(*n.a) << '/' << to_string(*n.b) << ')'; break;
    case Op::Neg: os << "(-" << to_string(*n.a) << ')'; break;
    case Op::Exp: os << "exp(" << to_string(*n.a) << ')'; break;
    case Op::Log: os << "log(" << to_string(*n.a) << ')'; break;
    case Op::Sqrt: os << "sqrt(" << to_string(*n.a) << ')'; break;
    case Op::Pow: os << '(' << to_string(*n.a) << ")^" << n.value; break;
    }
    return os.str();
}

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Ptr parse() {
        auto e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Ptr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) lhs = std::make_shared<const Node>(Node{Op::Add, 0.0, lhs, term()});
            else if (accept('-')) lhs = std::make_shared<const Node>(Node{Op::Sub, 0.0, lhs, term()});
            else return lhs;
        }
    }
    Ptr term() {
        auto lhs = factor();
        for (;;) {
            if (accept('*')) lhs = std::make_shared<const Node>(Node{Op::Mul, 0.0, lhs, factor()});
            else if (accept('/')) lhs = std::make_shared<const Node>(Node{Op::Div, 0.0, lhs, factor()});
            else return lhs;
        }
    }
    Ptr factor() {
        skip();
        // unary minus binds looser than '^': -x^2 is -(x^2)
        if (pos_ < s_.size() && s_[pos_] == '-') {
            ++pos_;
            return std::make_shared<const Node>(Node{Op::Neg, 0.0, factor(), nullptr});
        }
        auto b = base();
        if (accept('^')) {
            skip();
            double e = number(true);
            return std::make_shared<const Node>(Node{Op::Pow, e, b, nullptr});
        }
        return b;
    }
    double number(bool allow_sign) {
        skip();
        const std::size_t start = pos_;
        if (allow_sign && pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
        bool digits = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
        }
        if (!digits) {
            pos_ = start;
            fail("expected number");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;  // 'e' belongs to something else, e.g. "exp"
            }
        }
        return std::strtod(std::string(s_.substr(start, pos_ - start)).c_str(), nullptr);
    }
    Ptr base() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(number(false));
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string_view word = s_.substr(start, pos_ - start);
            if (word == "x") return var();
            Op op;
            if (word == "exp") op = Op::Exp;
            else if (word == "log") op = Op::Log;
            else if (word == "sqrt") op = Op::Sqrt;
            else {
                pos_ = start;
                fail("unknown identifier '" + std::string(word) + "'");
            }
            expect('(');
            auto arg = expr();
            expect(')');
            return std::make_shared<const Node>(Node{op, 0.0, arg, nullptr});
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }
};

inline Ptr parse(std::string_view text) { return Parser(text).parse(); }

/// Caret line for error messages: the text, then '^' under the failing position.
inline std::string caret(std::string_view text, std::size_t pos) {
    std::string out(text);
    out += '\n';
    out += std::string(pos, ' ');
    out += '^';
    return out;
}

}  // namespace szk::expr
