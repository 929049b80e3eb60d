#include "snape/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "snape/errors.hpp"

namespace snape {

struct Expression::Node {
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Sin, Cos, Exp, Tanh, Atan, Pow };
    Kind kind = Kind::Number;
    double value = 0.0;
    std::size_t variable = 0;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Number;
    n->value = v;
    return n;
}

NodePtr make_op(Node::Kind kind, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars, std::size_t line, std::size_t column)
        : text_(text), vars_(vars), line_(line), column_(column) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "' in expression");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column_ + pos_); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make_op(Node::Kind::Add, {lhs, term()});
            } else if (accept('-')) {
                lhs = make_op(Node::Kind::Sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_op(Node::Kind::Mul, {lhs, unary()});
            } else if (accept('/')) {
                lhs = make_op(Node::Kind::Div, {lhs, unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            return make_op(Node::Kind::Negate, {unary()});
        }
        return primary();
    }

    NodePtr primary() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of expression");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name(text_.substr(start, pos_ - start));
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                return call(name, start);
            }
            for (std::size_t i = 0; i < vars_.size(); ++i) {
                if (vars_[i] == name) {
                    auto n = std::make_shared<Node>();
                    n->kind = Node::Kind::Variable;
                    n->variable = i;
                    return n;
                }
            }
            if (name == "pi") {
                return make_number(std::numbers::pi);
            }
            pos_ = start;
            fail("unknown variable '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "' in expression");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) {
                ++p;
            }
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        return make_number(v);
    }

    NodePtr call(const std::string& name, std::size_t start) {
        struct Fn {
            const char* name;
            Node::Kind kind;
            int arity;
        };
        static constexpr Fn fns[] = {{"sin", Node::Kind::Sin, 1},   {"cos", Node::Kind::Cos, 1},
                                     {"exp", Node::Kind::Exp, 1},   {"tanh", Node::Kind::Tanh, 1},
                                     {"atan", Node::Kind::Atan, 1}, {"pow", Node::Kind::Pow, 2}};
        for (const auto& fn : fns) {
            if (name == fn.name) {
                expect('(');
                std::vector<NodePtr> args;
                args.push_back(expr());
                while (accept(',')) {
                    args.push_back(expr());
                }
                expect(')');
                if (static_cast<int>(args.size()) != fn.arity) {
                    pos_ = start;
                    fail("function '" + name + "' takes " + std::to_string(fn.arity) + " argument(s)");
                }
                return make_op(fn.kind, std::move(args));
            }
        }
        pos_ = start;
        fail("unknown function '" + name + "'");
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t line_;
    std::size_t column_;
    std::size_t pos_ = 0;
};

double eval_node(const Node& n, std::span<const double> v) {
    switch (n.kind) {
        case Node::Kind::Number:
            return n.value;
        case Node::Kind::Variable:
            return v[n.variable];
        case Node::Kind::Negate:
            return -eval_node(*n.args[0], v);
        case Node::Kind::Add:
            return eval_node(*n.args[0], v) + eval_node(*n.args[1], v);
        case Node::Kind::Sub:
            return eval_node(*n.args[0], v) - eval_node(*n.args[1], v);
        case Node::Kind::Mul:
            return eval_node(*n.args[0], v) * eval_node(*n.args[1], v);
        case Node::Kind::Div:
            return eval_node(*n.args[0], v) / eval_node(*n.args[1], v);
        case Node::Kind::Sin:
            return std::sin(eval_node(*n.args[0], v));
        case Node::Kind::Cos:
            return std::cos(eval_node(*n.args[0], v));
        case Node::Kind::Exp:
            return std::exp(eval_node(*n.args[0], v));
        case Node::Kind::Tanh:
            return std::tanh(eval_node(*n.args[0], v));
        case Node::Kind::Atan:
            return std::atan(eval_node(*n.args[0], v));
        case Node::Kind::Pow:
            return std::pow(eval_node(*n.args[0], v), eval_node(*n.args[1], v));
    }
    return 0.0;
}

}  // namespace

Expression::Expression() : root_(make_number(0.0)), source_("0") {}

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables, std::size_t line,
                             std::size_t column) {
    Expression e;
    Parser p(text, variables, line, column);
    e.root_ = p.parse();
    e.source_ = std::string(text);
    e.variables_ = variables;
    return e;
}

double Expression::evaluate(std::span<const double> values) const {
    if (values.size() < variables_.size()) {
        throw ArgumentError("expression needs " + std::to_string(variables_.size()) + " variable values");
    }
    return eval_node(*root_, values);
}

bool Expression::is_constant_zero() const noexcept {
    return root_->kind == Node::Kind::Number && root_->value == 0.0;
}

}  // namespace snape
