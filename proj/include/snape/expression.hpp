#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snape {

/// Closed-form real expression over named variables.
///
/// Grammar: + - * / unary -, parentheses, real literals, variables, the constant
/// pi (shadowed by a variable of that name), and the
/// functions sin cos exp tanh atan (one argument) and pow (two arguments).
class Expression {
public:
    /// The constant 0.
    Expression();

    /// Throws ParseError; `line` and `column` locate text[0] in the enclosing source.
    static Expression parse(std::string_view text, const std::vector<std::string>& variables, std::size_t line = 1,
                            std::size_t column = 1);

    /// `values[i]` is the value of variables[i] given at parse time.
    double evaluate(std::span<const double> values) const;

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& variables() const noexcept { return variables_; }
    bool is_constant_zero() const noexcept;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
    std::vector<std::string> variables_;
};

}  // namespace snape
