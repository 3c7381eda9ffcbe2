#include "vexflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

namespace vexflow {

struct Expr::Node {
    enum Kind { Num, Var, Unary, Binary, Call } kind;
    double value = 0;
    int var = 0;  // 0:t 1:x 2:y 3:z
    char op = 0;
    std::string fn;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

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
    [[noreturn]] void fail(const std::string& what) {
        throw ConfigError("expression error at offset " + std::to_string(pos) + ": " + what +
                          " in \"" + s + "\"");
    }

    NodePtr make_num(double v) {
        auto n = std::make_shared<Expr::Node>();
        n->kind = Expr::Node::Num;
        n->value = v;
        return n;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip();
            if (eat('+')) {
                auto n = std::make_shared<Expr::Node>();
                n->kind = Expr::Node::Binary;
                n->op = '+';
                n->a = lhs;
                n->b = parse_term();
                lhs = n;
            } else if (eat('-')) {
                auto n = std::make_shared<Expr::Node>();
                n->kind = Expr::Node::Binary;
                n->op = '-';
                n->a = lhs;
                n->b = parse_term();
                lhs = n;
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_power();
        for (;;) {
            skip();
            if (eat('*')) {
                auto n = std::make_shared<Expr::Node>();
                n->kind = Expr::Node::Binary;
                n->op = '*';
                n->a = lhs;
                n->b = parse_power();
                lhs = n;
            } else if (eat('/')) {
                auto n = std::make_shared<Expr::Node>();
                n->kind = Expr::Node::Binary;
                n->op = '/';
                n->a = lhs;
                n->b = parse_power();
                lhs = n;
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_power() {
        NodePtr base = parse_unary();
        skip();
        if (eat('^')) {  // right associative
            auto n = std::make_shared<Expr::Node>();
            n->kind = Expr::Node::Binary;
            n->op = '^';
            n->a = base;
            n->b = parse_power();
            return n;
        }
        return base;
    }

    NodePtr parse_unary() {
        skip();
        if (eat('-')) {
            auto n = std::make_shared<Expr::Node>();
            n->kind = Expr::Node::Unary;
            n->op = '-';
            n->a = parse_unary();
            return n;
        }
        if (eat('+')) return parse_unary();
        return parse_atom();
    }

    NodePtr parse_atom() {
        skip();
        if (pos >= s.size()) fail("unexpected end of input");
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = std::stod(s.substr(pos), &used);
            pos += used;
            return make_num(v);
        }
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string name = s.substr(start, pos - start);
            skip();
            if (pos < s.size() && s[pos] == '(') {
                ++pos;
                std::vector<NodePtr> args;
                if (!eat(')')) {
                    args.push_back(parse_expr());
                    while (eat(',')) args.push_back(parse_expr());
                    if (!eat(')')) fail("expected ')' after arguments");
                }
                auto n = std::make_shared<Expr::Node>();
                n->kind = Expr::Node::Call;
                n->fn = name;
                if (args.size() == 1) {
                    n->a = args[0];
                } else if (args.size() == 2) {
                    n->a = args[0];
                    n->b = args[1];
                } else {
                    fail("function " + name + " takes 1 or 2 arguments");
                }
                return n;
            }
            if (name == "pi") return make_num(3.14159265358979323846);
            if (name == "e") return make_num(2.71828182845904523536);
            auto n = std::make_shared<Expr::Node>();
            n->kind = Expr::Node::Var;
            if (name == "t")
                n->var = 0;
            else if (name == "x")
                n->var = 1;
            else if (name == "y")
                n->var = 2;
            else if (name == "z")
                n->var = 3;
            else
                fail("unknown identifier '" + name + "'");
            return n;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

double eval_node(const Expr::Node* n, double t, double x, double y, double z) {
    switch (n->kind) {
        case Expr::Node::Num:
            return n->value;
        case Expr::Node::Var:
            switch (n->var) {
                case 0: return t;
                case 1: return x;
                case 2: return y;
                default: return z;
            }
        case Expr::Node::Unary:
            return -eval_node(n->a.get(), t, x, y, z);
        case Expr::Node::Binary: {
            double a = eval_node(n->a.get(), t, x, y, z);
            double b = eval_node(n->b.get(), t, x, y, z);
            switch (n->op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                default: return std::pow(a, b);
            }
        }
        case Expr::Node::Call: {
            double a = eval_node(n->a.get(), t, x, y, z);
            const std::string& f = n->fn;
            if (n->b) {
                double b = eval_node(n->b.get(), t, x, y, z);
                if (f == "min") return std::min(a, b);
                if (f == "max") return std::max(a, b);
                if (f == "pow") return std::pow(a, b);
                throw ConfigError("unknown 2-argument function '" + f + "'");
            }
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "tan") return std::tan(a);
            if (f == "exp") return std::exp(a);
            if (f == "log") return std::log(a);
            if (f == "sqrt") return std::sqrt(a);
            if (f == "abs") return std::fabs(a);
            if (f == "tanh") return std::tanh(a);
            if (f == "sinh") return std::sinh(a);
            if (f == "cosh") return std::cosh(a);
            throw ConfigError("unknown function '" + f + "'");
        }
    }
    return 0;
}

}  // namespace

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    Expr e;
    const_cast<std::shared_ptr<const Node>&>(e.root) = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing characters");
    return e;
}

double Expr::eval(double t, double x, double y, double z) const {
    if (!root) throw ConfigError("evaluating empty expression");
    return eval_node(root.get(), t, x, y, z);
}

}  // namespace vexflow
