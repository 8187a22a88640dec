#pragma once

#include "dispersal/mesh.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace dispersal {

class ExpressionError : public std::invalid_argument {
public:
    ExpressionError(const std::string& what, std::size_t position)
        : std::invalid_argument(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Arithmetic over the coordinates x and y.
///
/// Grammar: + - * / ^, parentheses, decimal numbers, x, y. '^' binds tighter
/// than unary minus and associates to the right, so -x^2 is -(x^2).
class Expression {
public:
    /// Throws ExpressionError on malformed input, and when y is used with max_dim = 1.
    static Expression parse(const std::string& text, int max_dim = 2);

    double operator()(const Point& p) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace dispersal
