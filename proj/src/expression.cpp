#include "dispersal/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace dispersal {

struct Expression::Node {
    char op = 0;  // '#' number, 'x', 'y', 'n' negate, or a binary operator
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;

    double eval(const Point& p) const {
        switch (op) {
            case '#': return value;
            case 'x': return p[0];
            case 'y': return p[1];
            case 'n': return -lhs->eval(p);
            case '+': return lhs->eval(p) + rhs->eval(p);
            case '-': return lhs->eval(p) - rhs->eval(p);
            case '*': return lhs->eval(p) * rhs->eval(p);
            case '/': return lhs->eval(p) / rhs->eval(p);
            case '^': return std::pow(lhs->eval(p), rhs->eval(p));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
    Parser(const std::string& text, int max_dim) : text_(text), max_dim_(max_dim) {}

    NodePtr run() {
        NodePtr root = sum();
        skip();
        if (pos_ != text_.size()) throw ExpressionError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        return root;
    }

private:
    static NodePtr binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Expression::Node>();
        n->op = op;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr sum() {
        NodePtr acc = product();
        for (;;) {
            if (accept('+')) acc = binary('+', acc, product());
            else if (accept('-')) acc = binary('-', acc, product());
            else return acc;
        }
    }

    NodePtr product() {
        NodePtr acc = unary();
        for (;;) {
            if (accept('*')) acc = binary('*', acc, unary());
            else if (accept('/')) acc = binary('/', acc, unary());
            else return acc;
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->op = 'n';
            n->lhs = unary();
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return binary('^', base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= text_.size()) throw ExpressionError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = sum();
            if (!accept(')')) throw ExpressionError("missing ')'", pos_);
            return inner;
        }
        if (c == 'x' || c == 'y') {
            if (c == 'y' && max_dim_ < 2) throw ExpressionError("variable y in a 1D expression", pos_);
            ++pos_;
            auto n = std::make_shared<Expression::Node>();
            n->op = c;
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) throw ExpressionError("malformed number", pos_);
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<Expression::Node>();
            n->op = '#';
            n->value = v;
            return n;
        }
        throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    const std::string& text_;
    int max_dim_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int max_dim) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text, max_dim).run();
    return e;
}

double Expression::operator()(const Point& p) const { return root_->eval(p); }

}  // namespace dispersal
