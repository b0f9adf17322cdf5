#pragma once

#include <cctype>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "treebsde/lattice.hpp"
#include "treebsde/scalar.hpp"

namespace treebsde {

struct ExprError : std::runtime_error {
    std::size_t position;
    ExprError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at position " + std::to_string(pos)), position(pos) {}
};

/// Evaluation context for a payoff/flow expression at one node.
template <class S>
struct ExprContext {
    S t{0};
    int k = 0;
    const std::vector<S>* prices = nullptr;  // per asset
    S path_max{0};  // running extrema of the first asset along the path
    S path_min{0};
};

namespace expr_detail {

enum class NodeKind { literal, variable, unary, binary, call };

struct AstNode {
    NodeKind kind;
    long long num = 0;           // literal numerator
    long long den = 1;           // literal denominator (power of ten)
    std::string name;            // variable or function name
    char op = 0;                 // operator for unary/binary
    std::vector<std::shared_ptr<AstNode>> args;
};

using AstPtr = std::shared_ptr<AstNode>;

/// Tiny recursive-descent parser: expr := term (('+'|'-') term)*;
/// term := factor (('*'|'/') factor)*; factor := '-' factor | primary;
/// primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'.
class Parser {
  public:
    explicit Parser(std::string src) : src_(std::move(src)) {}

    AstPtr parse() {
        auto root = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw ExprError("unexpected trailing input", pos_);
        return root;
    }

  private:
    std::string src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    AstPtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = binary('+', lhs, parse_term());
            else if (eat('-')) lhs = binary('-', lhs, parse_term());
            else return lhs;
        }
    }
    AstPtr parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (eat('*')) lhs = binary('*', lhs, parse_factor());
            else if (eat('/')) lhs = binary('/', lhs, parse_factor());
            else return lhs;
        }
    }
    AstPtr parse_factor() {
        if (eat('-')) {
            auto node = std::make_shared<AstNode>();
            node->kind = NodeKind::unary;
            node->op = '-';
            node->args.push_back(parse_factor());
            return node;
        }
        return parse_primary();
    }
    AstPtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ExprError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        if (eat('(')) {
            auto inner = parse_expr();
            if (!eat(')')) throw ExprError("expected ')'", pos_);
            return inner;
        }
        throw ExprError(std::string("unexpected character '") + c + "'", pos_);
    }
    AstPtr parse_number() {
        // Decimal literals are kept as integer/power-of-ten pairs so rational
        // mode evaluates them exactly.
        long long num = 0, den = 1;
        bool any = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            num = num * 10 + (src_[pos_] - '0');
            ++pos_;
            any = true;
            if (num < 0) throw ExprError("numeric literal too large", pos_);
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                num = num * 10 + (src_[pos_] - '0');
                den *= 10;
                ++pos_;
                any = true;
                if (num < 0 || den < 0) throw ExprError("numeric literal too large", pos_);
            }
        }
        if (!any) throw ExprError("malformed number", pos_);
        auto node = std::make_shared<AstNode>();
        node->kind = NodeKind::literal;
        node->num = num;
        node->den = den;
        return node;
    }
    AstPtr parse_name() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        auto node = std::make_shared<AstNode>();
        node->name = src_.substr(start, pos_ - start);
        if (eat('(')) {
            node->kind = NodeKind::call;
            node->args.push_back(parse_expr());
            while (eat(',')) node->args.push_back(parse_expr());
            if (!eat(')')) throw ExprError("expected ')'", pos_);
        } else {
            node->kind = NodeKind::variable;
        }
        return node;
    }

    static AstPtr binary(char op, AstPtr lhs, AstPtr rhs) {
        auto node = std::make_shared<AstNode>();
        node->kind = NodeKind::binary;
        node->op = op;
        node->args = {std::move(lhs), std::move(rhs)};
        return node;
    }
};

template <class S>
S eval(const AstNode& node, const ExprContext<S>& ctx) {
    switch (node.kind) {
        case NodeKind::literal:
            return scalar_from_ratio<S>(node.num, node.den);
        case NodeKind::variable: {
            const auto& n = node.name;
            if (n == "k") return S(ctx.k);
            if (n == "t") return ctx.t;
            if (n == "S" || n == "S1") return (*ctx.prices)[0];
            if (n == "Smax") return ctx.path_max;
            if (n == "Smin") return ctx.path_min;
            if (n.size() > 1 && n[0] == 'S') {
                const int idx = std::stoi(n.substr(1)) - 1;
                if (idx < 0 || idx >= static_cast<int>(ctx.prices->size()))
                    throw std::invalid_argument("expression references unknown asset " + n);
                return (*ctx.prices)[static_cast<std::size_t>(idx)];
            }
            throw std::invalid_argument("unknown variable '" + n + "'");
        }
        case NodeKind::unary:
            return S(-eval(*node.args[0], ctx));
        case NodeKind::binary: {
            const S a = eval(*node.args[0], ctx);
            const S b = eval(*node.args[1], ctx);
            switch (node.op) {
                case '+': return S(a + b);
                case '-': return S(a - b);
                case '*': return S(a * b);
                case '/':
                    if (b == S(0)) throw std::invalid_argument("division by zero in expression");
                    return S(a / b);
            }
            throw std::logic_error("bad operator");
        }
        case NodeKind::call: {
            const auto& n = node.name;
            auto arity = [&](std::size_t want) {
                if (node.args.size() != want)
                    throw std::invalid_argument("function '" + n + "' expects " + std::to_string(want) +
                                                " argument(s)");
            };
            if (n == "max") { arity(2); return max_val(eval(*node.args[0], ctx), eval(*node.args[1], ctx)); }
            if (n == "min") { arity(2); return min_val(eval(*node.args[0], ctx), eval(*node.args[1], ctx)); }
            if (n == "pos") { arity(1); return max_val(eval(*node.args[0], ctx), S(0)); }
            if (n == "neg") { arity(1); return max_val(S(-eval(*node.args[0], ctx)), S(0)); }
            if (n == "abs") { arity(1); return abs_val(eval(*node.args[0], ctx)); }
            throw std::invalid_argument("unknown function '" + n + "'");
        }
    }
    throw std::logic_error("bad node kind");
}

}  // namespace expr_detail

/// Compiled payoff/flow expression over (k, t, S..., path extrema of S).
class Expression {
  public:
    explicit Expression(const std::string& source) : ast_(expr_detail::Parser(source).parse()) {}

    template <class S>
    S operator()(const ExprContext<S>& ctx) const {
        return expr_detail::eval<S>(*ast_, ctx);
    }

    /// Evaluates the expression at every node, tracking path extrema of the
    /// first asset from the root.
    template <class S>
    AdaptedProcess<S> on_tree(const EventTree<S>& tree) const {
        AdaptedProcess<S> out(tree.size());
        AdaptedProcess<S> pmax(tree.size()), pmin(tree.size());
        for (const auto& nd : tree.nodes) {
            const S s = tree.prices[static_cast<std::size_t>(nd.id)][0];
            if (nd.parent < 0) {
                pmax[nd.id] = s;
                pmin[nd.id] = s;
            } else {
                pmax[nd.id] = max_val(pmax[nd.parent], s);
                pmin[nd.id] = min_val(pmin[nd.parent], s);
            }
            ExprContext<S> ctx;
            ctx.t = tree.time_grid[static_cast<std::size_t>(nd.k)];
            ctx.k = nd.k;
            ctx.prices = &tree.prices[static_cast<std::size_t>(nd.id)];
            ctx.path_max = pmax[nd.id];
            ctx.path_min = pmin[nd.id];
            out[nd.id] = (*this)(ctx);
        }
        return out;
    }

  private:
    expr_detail::AstPtr ast_;
};

}  // namespace treebsde
