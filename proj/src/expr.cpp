#include "torusbif/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace torusbif::expr {

namespace {

struct Parser {
    const std::string& src;
    int pos = 0;

    explicit Parser(const std::string& s) : src(s) {}

    void skip_ws() {
        while (pos < (int)src.size() && std::isspace((unsigned char)src[pos])) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < (int)src.size() ? src[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos);
    }

    Node parse_expression() {
        int start = pos;
        skip_ws();
        start = pos;
        Node lhs = parse_term();
        while (true) {
            char c = peek();
            if (c != '+' && c != '-') break;
            ++pos;
            Node rhs = parse_term();
            Node n;
            n.kind = Node::Kind::Binary;
            n.op = c;
            n.args = {std::move(lhs), std::move(rhs)};
            n.offset = start;
            n.length = pos - start;
            lhs = std::move(n);
        }
        return lhs;
    }

    Node parse_term() {
        skip_ws();
        int start = pos;
        Node lhs = parse_unary();
        while (true) {
            char c = peek();
            if (c != '*' && c != '/') break;
            ++pos;
            Node rhs = parse_unary();
            Node n;
            n.kind = Node::Kind::Binary;
            n.op = c;
            n.args = {std::move(lhs), std::move(rhs)};
            n.offset = start;
            n.length = pos - start;
            lhs = std::move(n);
        }
        return lhs;
    }

    Node parse_unary() {
        skip_ws();
        int start = pos;
        if (accept('-')) {
            Node inner = parse_unary();
            Node n;
            n.kind = Node::Kind::Unary;
            n.op = '-';
            n.args = {std::move(inner)};
            n.offset = start;
            n.length = pos - start;
            return n;
        }
        return parse_power();
    }

    Node parse_power() {
        skip_ws();
        int start = pos;
        Node base = parse_atom();
        if (peek() == '^') {
            ++pos;
            // Right-associative; the exponent may carry a unary minus.
            Node exponent = parse_power_rhs();
            Node n;
            n.kind = Node::Kind::Binary;
            n.op = '^';
            n.args = {std::move(base), std::move(exponent)};
            n.offset = start;
            n.length = pos - start;
            return n;
        }
        return base;
    }

    Node parse_power_rhs() {
        skip_ws();
        int start = pos;
        if (accept('-')) {
            Node inner = parse_power_rhs();
            Node n;
            n.kind = Node::Kind::Unary;
            n.op = '-';
            n.args = {std::move(inner)};
            n.offset = start;
            n.length = pos - start;
            return n;
        }
        return parse_power();
    }

    Node parse_atom() {
        skip_ws();
        int start = pos;
        if (pos >= (int)src.size()) throw ParseError("unexpected end of input", pos);
        char c = src[pos];
        if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
        if (std::isalpha((unsigned char)c) || c == '_') return parse_identifier();
        if (c == '(') {
            ++pos;
            Node inner = parse_expression();
            expect(')');
            inner.offset = start;
            inner.length = pos - start;
            return inner;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }

    Node parse_number() {
        int start = pos;
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("invalid number", pos);
        pos += (int)(end - begin);
        Node n;
        n.kind = Node::Kind::Constant;
        n.value = v;
        n.offset = start;
        n.length = pos - start;
        return n;
    }

    Node parse_identifier() {
        int start = pos;
        while (pos < (int)src.size() &&
               (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
            ++pos;
        std::string name = src.substr(start, pos - start);
        Node n;
        n.offset = start;
        n.length = pos - start;

        if (name == "t" || name == "x" || name == "y" || name == "mu") {
            n.kind = Node::Kind::Variable;
            n.var = name == "t" ? Var::T : name == "x" ? Var::X : name == "y" ? Var::Y : Var::Mu;
            return n;
        }
        if (name == "pi") {
            n.kind = Node::Kind::Constant;
            n.value = M_PI;
            return n;
        }
        if (name == "e") {
            n.kind = Node::Kind::Constant;
            n.value = M_E;
            return n;
        }

        Func f;
        int arity = 1;
        if (name == "sin") f = Func::Sin;
        else if (name == "cos") f = Func::Cos;
        else if (name == "sqrt") f = Func::Sqrt;
        else if (name == "exp") f = Func::Exp;
        else if (name == "abs") f = Func::Abs;
        else if (name == "pow") { f = Func::Pow; arity = 2; }
        else throw ParseError("unknown identifier '" + name + "'", start);

        expect('(');
        n.kind = Node::Kind::Call;
        n.func = f;
        n.args.push_back(parse_expression());
        while (accept(',')) n.args.push_back(parse_expression());
        expect(')');
        if ((int)n.args.size() != arity)
            throw ParseError("function '" + name + "' takes " + std::to_string(arity) +
                                 " argument(s), got " + std::to_string(n.args.size()),
                             start);
        n.length = pos - start;
        return n;
    }
};

std::string span_text(const std::string& source, const Node& n) {
    if (n.offset >= 0 && n.offset + n.length <= (int)source.size() && n.length > 0)
        return source.substr(n.offset, n.length);
    return unparse(n);
}

double eval_node(const Node& n, const std::string& source, double t, double x, double y,
                 double mu) {
    switch (n.kind) {
        case Node::Kind::Constant:
            return n.value;
        case Node::Kind::Variable:
            switch (n.var) {
                case Var::T: return t;
                case Var::X: return x;
                case Var::Y: return y;
                case Var::Mu: return mu;
            }
            break;
        case Node::Kind::Unary:
            return -eval_node(n.args[0], source, t, x, y, mu);
        case Node::Kind::Binary: {
            const double a = eval_node(n.args[0], source, t, x, y, mu);
            const double b = eval_node(n.args[1], source, t, x, y, mu);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/':
                    if (b == 0.0) throw EvalError("division by zero", span_text(source, n));
                    return a / b;
                case '^': {
                    const double r = std::pow(a, b);
                    if (!std::isfinite(r))
                        throw EvalError("pow out of domain", span_text(source, n));
                    return r;
                }
            }
            break;
        }
        case Node::Kind::Call: {
            const double a = eval_node(n.args[0], source, t, x, y, mu);
            switch (n.func) {
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Sqrt:
                    if (a < 0.0)
                        throw EvalError("sqrt of negative value", span_text(source, n));
                    return std::sqrt(a);
                case Func::Exp: return std::exp(a);
                case Func::Abs: return std::fabs(a);
                case Func::Pow: {
                    const double b = eval_node(n.args[1], source, t, x, y, mu);
                    const double r = std::pow(a, b);
                    if (!std::isfinite(r))
                        throw EvalError("pow out of domain", span_text(source, n));
                    return r;
                }
            }
            break;
        }
    }
    throw EvalError("malformed expression node", span_text(source, n));
}

int precedence_of(const Node& n) {
    switch (n.kind) {
        case Node::Kind::Binary:
            if (n.op == '+' || n.op == '-') return 1;
            if (n.op == '*' || n.op == '/') return 2;
            return 4;  // '^'
        case Node::Kind::Unary:
            return 3;
        default:
            return 5;
    }
}

void unparse_node(const Node& n, std::string& out, int parent_prec, bool right_side) {
    const int prec = precedence_of(n);
    const bool parens =
        prec < parent_prec || (prec == parent_prec && right_side && prec <= 2);
    if (parens) out += '(';
    switch (n.kind) {
        case Node::Kind::Constant: {
            char buf[40];
            if (n.value < 0) {
                out += '(';
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                out += buf;
                out += ')';
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                out += buf;
            }
            break;
        }
        case Node::Kind::Variable:
            out += n.var == Var::T ? "t" : n.var == Var::X ? "x" : n.var == Var::Y ? "y" : "mu";
            break;
        case Node::Kind::Unary:
            out += '-';
            unparse_node(n.args[0], out, 3, true);
            break;
        case Node::Kind::Binary:
            // '^' is right-associative: the left child needs parens on ties.
            unparse_node(n.args[0], out, n.op == '^' ? prec + 1 : prec, false);
            out += n.op;
            unparse_node(n.args[1], out, prec, n.op != '^');
            break;
        case Node::Kind::Call: {
            const char* name = nullptr;
            switch (n.func) {
                case Func::Sin: name = "sin"; break;
                case Func::Cos: name = "cos"; break;
                case Func::Sqrt: name = "sqrt"; break;
                case Func::Exp: name = "exp"; break;
                case Func::Abs: name = "abs"; break;
                case Func::Pow: name = "pow"; break;
            }
            out += name;
            out += '(';
            for (size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ',';
                unparse_node(n.args[i], out, 0, false);
            }
            out += ')';
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace

bool tree_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Node::Kind::Constant:
            if (a.value != b.value) return false;
            break;
        case Node::Kind::Variable:
            if (a.var != b.var) return false;
            break;
        case Node::Kind::Unary:
        case Node::Kind::Binary:
            if (a.op != b.op) return false;
            break;
        case Node::Kind::Call:
            if (a.func != b.func) return false;
            break;
    }
    if (a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i)
        if (!tree_equal(a.args[i], b.args[i])) return false;
    return true;
}

double Expression::eval(double t, double x, double y, double mu) const {
    return eval_node(root, source, t, x, y, mu);
}

Expression parse(const std::string& source) {
    if (source.empty()) throw ParseError("empty expression", 0);
    Parser p(source);
    Expression e;
    e.root = p.parse_expression();
    p.skip_ws();
    if (p.pos != (int)source.size())
        throw ParseError("trailing characters after expression", p.pos);
    e.source = source;
    return e;
}

std::string unparse(const Node& n) {
    std::string out;
    unparse_node(n, out, 0, false);
    return out;
}

std::string unparse(const Expression& e) { return unparse(e.root); }

}  // namespace torusbif::expr
