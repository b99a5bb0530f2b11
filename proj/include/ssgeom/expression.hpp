#pragma once

// Polynomial expression trees over the coordinates x1..xn.
//
// Grammar (whitespace-insensitive, left-associative):
//
//   expr   := term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := NUMBER | IDENT | '-' factor | '(' expr ')'
//   IDENT  := 'x' [1-9][0-9]*
//   NUMBER := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//
// Coordinate indices are 1-based everywhere in this header.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace ssgeom {

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, CoordinateOutOfRange };

    ParseError(Kind kind, std::size_t offset, const std::string& what)
        : std::runtime_error(what + " at byte " + std::to_string(offset)), kind_(kind), offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

class Expression {
public:
    enum class Op { Constant, Coordinate, Negate, Add, Subtract, Multiply };

    Expression() : Expression(constant(0.0)) {}

    static Expression constant(double value) {
        return Expression(std::make_shared<const Node>(Node{Op::Constant, value, 0, nullptr, nullptr}));
    }

    static Expression coordinate(int index) {
        if (index < 1) throw std::invalid_argument("coordinate index must be >= 1");
        return Expression(std::make_shared<const Node>(Node{Op::Coordinate, 0.0, index, nullptr, nullptr}));
    }

    // Raw node constructors: build exactly the requested node, no folding.
    static Expression negation(const Expression& a) { return unary(Op::Negate, a); }
    static Expression sum(const Expression& a, const Expression& b) { return binary(Op::Add, a, b); }
    static Expression difference(const Expression& a, const Expression& b) { return binary(Op::Subtract, a, b); }
    static Expression product(const Expression& a, const Expression& b) { return binary(Op::Multiply, a, b); }

    Op op() const noexcept { return node_->op; }
    double value() const noexcept { return node_->value; }
    int index() const noexcept { return node_->index; }
    Expression lhs() const { return Expression(node_->lhs); }
    Expression rhs() const { return Expression(node_->rhs); }

    bool is_constant() const noexcept { return node_->op == Op::Constant; }
    bool is_zero() const noexcept { return is_constant() && node_->value == 0.0; }
    bool is_one() const noexcept { return is_constant() && node_->value == 1.0; }

    // Largest coordinate index referenced, 0 for constant trees.
    int max_coordinate() const {
        switch (node_->op) {
        case Op::Constant: return 0;
        case Op::Coordinate: return node_->index;
        case Op::Negate: return lhs().max_coordinate();
        default: return std::max(lhs().max_coordinate(), rhs().max_coordinate());
        }
    }

    std::size_t node_count() const {
        switch (node_->op) {
        case Op::Constant:
        case Op::Coordinate: return 1;
        case Op::Negate: return 1 + lhs().node_count();
        default: return 1 + lhs().node_count() + rhs().node_count();
        }
    }

    // `point[i-1]` holds coordinate xi.
    double evaluate(std::span<const double> point) const { return eval(node_.get(), point); }

    // Structural identity (same tree shape, same constants).
    friend bool same_tree(const Expression& a, const Expression& b) { return same(a.node_.get(), b.node_.get()); }

private:
    struct Node {
        Op op;
        double value;
        int index;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    static Expression unary(Op op, const Expression& a) {
        return Expression(std::make_shared<const Node>(Node{op, 0.0, 0, a.node_, nullptr}));
    }
    static Expression binary(Op op, const Expression& a, const Expression& b) {
        return Expression(std::make_shared<const Node>(Node{op, 0.0, 0, a.node_, b.node_}));
    }

    static double eval(const Node* n, std::span<const double> x) {
        switch (n->op) {
        case Op::Constant: return n->value;
        case Op::Coordinate: return x[static_cast<std::size_t>(n->index - 1)];
        case Op::Negate: return -eval(n->lhs.get(), x);
        case Op::Add: return eval(n->lhs.get(), x) + eval(n->rhs.get(), x);
        case Op::Subtract: return eval(n->lhs.get(), x) - eval(n->rhs.get(), x);
        case Op::Multiply: return eval(n->lhs.get(), x) * eval(n->rhs.get(), x);
        }
        return 0.0;
    }

    static bool same(const Node* a, const Node* b) {
        if (a == b) return true;
        if (a->op != b->op) return false;
        switch (a->op) {
        case Op::Constant: return a->value == b->value;
        case Op::Coordinate: return a->index == b->index;
        case Op::Negate: return same(a->lhs.get(), b->lhs.get());
        default: return same(a->lhs.get(), b->lhs.get()) && same(a->rhs.get(), b->rhs.get());
        }
    }

    std::shared_ptr<const Node> node_;
};

// Folding arithmetic: zeros and ones are absorbed, constant pairs are
// evaluated. Used by differentiation and by the tensor builders so that
// derivative trees stay small.
inline Expression operator-(const Expression& a) {
    if (a.is_constant()) return Expression::constant(-a.value());
    if (a.op() == Expression::Op::Negate) return a.lhs();
    return Expression::negation(a);
}

inline Expression operator+(const Expression& a, const Expression& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() + b.value());
    return Expression::sum(a, b);
}

inline Expression operator-(const Expression& a, const Expression& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() - b.value());
    return Expression::difference(a, b);
}

inline Expression operator*(const Expression& a, const Expression& b) {
    if (a.is_zero() || b.is_zero()) return Expression::constant(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() * b.value());
    return Expression::product(a, b);
}

inline Expression operator*(double c, const Expression& a) { return Expression::constant(c) * a; }

// Exact partial derivative with respect to coordinate x_p (p is 1-based).
inline Expression differentiate(const Expression& e, int p) {
    using Op = Expression::Op;
    switch (e.op()) {
    case Op::Constant: return Expression::constant(0.0);
    case Op::Coordinate: return Expression::constant(e.index() == p ? 1.0 : 0.0);
    case Op::Negate: return -differentiate(e.lhs(), p);
    case Op::Add: return differentiate(e.lhs(), p) + differentiate(e.rhs(), p);
    case Op::Subtract: return differentiate(e.lhs(), p) - differentiate(e.rhs(), p);
    case Op::Multiply:
        return differentiate(e.lhs(), p) * e.rhs() + e.lhs() * differentiate(e.rhs(), p);
    }
    return Expression::constant(0.0);
}

namespace detail {

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Parser {
public:
    Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    Expression parse() {
        Expression e = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    Expression expr() {
        Expression acc = term();
        for (;;) {
            skip_ws();
            if (eat('+')) acc = Expression::sum(acc, term());
            else if (eat('-')) acc = Expression::difference(acc, term());
            else return acc;
        }
    }

    Expression term() {
        Expression acc = factor();
        for (;;) {
            skip_ws();
            if (eat('*')) acc = Expression::product(acc, factor());
            else return acc;
        }
    }

    Expression factor() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            return Expression::negation(factor());
        }
        if (c == '(') {
            ++pos_;
            Expression e = expr();
            skip_ws();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (c == 'x') return ident();
        if (is_digit(c) || c == '.') return number();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    Expression ident() {
        const std::size_t start = pos_;
        ++pos_;  // 'x'
        if (pos_ >= src_.size() || !is_digit(src_[pos_]) || src_[pos_] == '0')
            fail("coordinate name must be x followed by an index >= 1");
        long idx = 0;
        while (pos_ < src_.size() && is_digit(src_[pos_])) {
            idx = idx * 10 + (src_[pos_] - '0');
            if (idx > 1'000'000) break;
            ++pos_;
        }
        if (idx > dim_)
            throw ParseError(ParseError::Kind::CoordinateOutOfRange, start,
                             "coordinate x" + std::to_string(idx) + " exceeds dimension " + std::to_string(dim_));
        return Expression::coordinate(static_cast<int>(idx));
    }

    Expression number() {
        const std::size_t start = pos_;
        bool digits = false;
        while (pos_ < src_.size() && is_digit(src_[pos_])) { ++pos_; digits = true; }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) { ++pos_; digits = true; }
        }
        if (!digits) { pos_ = start; fail("malformed number"); }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ >= src_.size() || !is_digit(src_[pos_])) fail("malformed exponent");
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        const std::string text(src_.substr(start, pos_ - start));
        const double v = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(v)) { pos_ = start; fail("number out of range"); }
        return Expression::constant(v);
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }
    bool eat(char c) {
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(ParseError::Kind::Syntax, pos_, msg);
    }

    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view source, int dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    return detail::Parser(source, dim).parse();
}

// Fully parenthesized text form; parse(to_string(e), n) evaluates like e.
inline std::string to_string(const Expression& e) {
    using Op = Expression::Op;
    switch (e.op()) {
    case Op::Constant: {
        const std::string s = detail::format_number(std::abs(e.value()));
        return std::signbit(e.value()) ? "(-" + s + ")" : s;
    }
    case Op::Coordinate: return "x" + std::to_string(e.index());
    case Op::Negate: return "(-" + to_string(e.lhs()) + ")";
    case Op::Add: return "(" + to_string(e.lhs()) + " + " + to_string(e.rhs()) + ")";
    case Op::Subtract: return "(" + to_string(e.lhs()) + " - " + to_string(e.rhs()) + ")";
    case Op::Multiply: return "(" + to_string(e.lhs()) + " * " + to_string(e.rhs()) + ")";
    }
    return "0";
}

}  // namespace ssgeom
