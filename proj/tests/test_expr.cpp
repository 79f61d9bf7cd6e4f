#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "torusbif/expr.hpp"

using namespace torusbif;
using expr::Expression;
using expr::Node;

namespace {

// Reference evaluator: shunting-yard to RPN, then a stack machine.  Applies
// operations in the same order as the AST walk, so results must match to the
// last bit.
struct RpnTok {
    enum { Num, Var, Op, Fun } kind;
    double v = 0;
    int var = 0;
    char op = 0;
    int fun = 0;  // matches expr::Func order, arity via fun==5 (pow)
};

std::vector<RpnTok> to_rpn(const std::string& src) {
    struct StackOp {
        char op;  // operator or '(' or 'f' for function
        int fun = 0;
    };
    std::vector<RpnTok> out;
    std::vector<StackOp> ops;
    auto prec = [](char c) { return c == '^' ? 4 : c == 'u' ? 3 : (c == '*' || c == '/') ? 2 : 1; };
    size_t i = 0;
    bool prev_operand = false;
    auto skip = [&] { while (i < src.size() && isspace((unsigned char)src[i])) ++i; };
    while (skip(), i < src.size()) {
        const char c = src[i];
        if (isdigit((unsigned char)c) || c == '.') {
            char* end;
            out.push_back({RpnTok::Num, std::strtod(src.c_str() + i, &end)});
            i = end - src.c_str();
            prev_operand = true;
        } else if (isalpha((unsigned char)c)) {
            size_t j = i;
            while (j < src.size() && (isalnum((unsigned char)src[j]) || src[j] == '_')) ++j;
            const std::string name = src.substr(i, j - i);
            i = j;
            if (name == "t") out.push_back({RpnTok::Var, 0, 0});
            else if (name == "x") out.push_back({RpnTok::Var, 0, 1});
            else if (name == "y") out.push_back({RpnTok::Var, 0, 2});
            else if (name == "mu") out.push_back({RpnTok::Var, 0, 3});
            else if (name == "pi") out.push_back({RpnTok::Num, M_PI});
            else if (name == "e") out.push_back({RpnTok::Num, M_E});
            else {
                int f = name == "sin" ? 0 : name == "cos" ? 1 : name == "sqrt" ? 2
                        : name == "exp" ? 3 : name == "abs" ? 4 : 5;
                ops.push_back({'f', f});
                prev_operand = false;
                continue;
            }
            prev_operand = true;
        } else if (c == '(') {
            ops.push_back({'('});
            ++i;
            prev_operand = false;
        } else if (c == ')' || c == ',') {
            while (!ops.empty() && ops.back().op != '(') {
                const auto o = ops.back();
                ops.pop_back();
                if (o.op == 'f') out.push_back({RpnTok::Fun, 0, 0, 0, o.fun});
                else out.push_back({RpnTok::Op, 0, 0, o.op});
            }
            if (c == ')') {
                ops.pop_back();  // '('
                if (!ops.empty() && ops.back().op == 'f') {
                    out.push_back({RpnTok::Fun, 0, 0, 0, ops.back().fun});
                    ops.pop_back();
                }
                prev_operand = true;
            } else {
                ops.push_back({'('});  // reopen for the next argument
                prev_operand = false;
            }
            ++i;
        } else {
            char op = c;
            if (c == '-' && !prev_operand) op = 'u';
            const int p = prec(op);
            const bool right = op == '^' || op == 'u';
            while (!ops.empty() && ops.back().op != '(' && ops.back().op != 'f') {
                const int q = prec(ops.back().op);
                if (q > p || (q == p && !right)) {
                    out.push_back({RpnTok::Op, 0, 0, ops.back().op});
                    ops.pop_back();
                } else {
                    break;
                }
            }
            ops.push_back({op});
            ++i;
            prev_operand = false;
        }
    }
    while (!ops.empty()) {
        if (ops.back().op == 'f') out.push_back({RpnTok::Fun, 0, 0, 0, ops.back().fun});
        else out.push_back({RpnTok::Op, 0, 0, ops.back().op});
        ops.pop_back();
    }
    return out;
}

double eval_rpn(const std::vector<RpnTok>& rpn, double t, double x, double y, double mu) {
    std::vector<double> st;
    for (const auto& tok : rpn) {
        switch (tok.kind) {
            case RpnTok::Num: st.push_back(tok.v); break;
            case RpnTok::Var:
                st.push_back(tok.var == 0 ? t : tok.var == 1 ? x : tok.var == 2 ? y : mu);
                break;
            case RpnTok::Op: {
                if (tok.op == 'u') {
                    st.back() = -st.back();
                    break;
                }
                const double b = st.back();
                st.pop_back();
                const double a = st.back();
                st.pop_back();
                st.push_back(tok.op == '+' ? a + b
                             : tok.op == '-' ? a - b
                             : tok.op == '*' ? a * b
                             : tok.op == '/' ? a / b
                                             : std::pow(a, b));
                break;
            }
            case RpnTok::Fun: {
                if (tok.fun == 5) {
                    const double b = st.back();
                    st.pop_back();
                    const double a = st.back();
                    st.pop_back();
                    st.push_back(std::pow(a, b));
                } else {
                    const double a = st.back();
                    st.pop_back();
                    st.push_back(tok.fun == 0 ? std::sin(a)
                                 : tok.fun == 1 ? std::cos(a)
                                 : tok.fun == 2 ? std::sqrt(a)
                                 : tok.fun == 3 ? std::exp(a)
                                                : std::fabs(a));
                }
                break;
            }
        }
    }
    REQUIRE(st.size() == 1);
    return st.back();
}

Node random_ast(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 4);
    Node n;
    switch (kind(rng)) {
        case 0: {
            n.kind = Node::Kind::Constant;
            std::uniform_real_distribution<double> u(0.1, 4.0);
            n.value = u(rng);
            break;
        }
        case 1: {
            n.kind = Node::Kind::Variable;
            n.var = static_cast<expr::Var>(rng() % 4);
            break;
        }
        case 2: {
            n.kind = Node::Kind::Unary;
            n.op = '-';
            n.args.push_back(random_ast(rng, depth - 1));
            break;
        }
        case 3: {
            n.kind = Node::Kind::Binary;
            const char opsel[] = {'+', '-', '*', '/', '^'};
            n.op = opsel[rng() % 5];
            n.args.push_back(random_ast(rng, depth - 1));
            n.args.push_back(random_ast(rng, depth - 1));
            if (n.op == '^') {
                // Keep exponents simple so evaluation stays in domain.
                Node e;
                e.kind = Node::Kind::Constant;
                e.value = (double)(1 + rng() % 3);
                n.args[1] = e;
            }
            break;
        }
        default: {
            n.kind = Node::Kind::Call;
            const expr::Func fs[] = {expr::Func::Sin, expr::Func::Cos, expr::Func::Exp,
                                     expr::Func::Abs};
            n.func = fs[rng() % 4];
            n.args.push_back(random_ast(rng, depth - 1));
            break;
        }
    }
    return n;
}

std::string random_expr_text(std::mt19937& rng, int depth) {
    return expr::unparse(random_ast(rng, depth));
}

}  // namespace

TEST_CASE("parse basic shapes") {
    const Expression e1 = expr::parse("x");
    CHECK(e1.root.kind == Node::Kind::Variable);
    CHECK(e1.root.var == expr::Var::X);

    // -y + 2*x^2 must parse as Add(Neg(y), Mul(2, Pow(x, 2))).
    const Expression e2 = expr::parse("-y + 2*x^2");
    REQUIRE(e2.root.kind == Node::Kind::Binary);
    CHECK(e2.root.op == '+');
    CHECK(e2.root.args[0].kind == Node::Kind::Unary);
    CHECK(e2.root.args[0].args[0].var == expr::Var::Y);
    const Node& mul = e2.root.args[1];
    CHECK(mul.op == '*');
    CHECK(mul.args[0].value == 2.0);
    CHECK(mul.args[1].op == '^');

    const Expression e3 = expr::parse("1/sqrt(x^2+y^2)");
    REQUIRE(e3.root.kind == Node::Kind::Binary);
    CHECK(e3.root.op == '/');
    CHECK(e3.root.args[1].kind == Node::Kind::Call);
    CHECK(e3.root.args[1].func == expr::Func::Sqrt);
}

TEST_CASE("eval basics and domain errors") {
    CHECK(expr::parse("x").eval(0, 3, 0, 0) == 3.0);
    CHECK(expr::parse("x^2+y^2").eval(0, 3, 4, 0) == 25.0);
    CHECK(expr::parse("1/sqrt(x^2+y^2)").eval(0, 0.6, 0.8, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(expr::parse("pow(x, 3)").eval(0, 2, 0, 0) == 8.0);
    CHECK(expr::parse("pi").eval(0, 0, 0, 0) == M_PI);

    CHECK_THROWS_AS(expr::parse("1/x").eval(0, 0, 0, 0), expr::EvalError);
    CHECK_THROWS_AS(expr::parse("sqrt(x)").eval(0, -1, 0, 0), expr::EvalError);
    try {
        expr::parse("1 + 1/(x-x)").eval(0, 2, 0, 0);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(e.subexpr == "1/(x-x)");
    }
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK_THROWS_AS(expr::parse(""), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("x +"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("foo(x)"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("sin(x, y)"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("pow(x)"), expr::ParseError);
    try {
        expr::parse("x + $");
        FAIL("expected ParseError");
    } catch (const expr::ParseError& e) {
        CHECK(e.offset == 4);
    }
}

TEST_CASE("precedence and associativity") {
    CHECK(expr::parse("2-3-4").eval(0, 0, 0, 0) == -5.0);
    CHECK(expr::parse("2^3^2").eval(0, 0, 0, 0) == 512.0);  // right-assoc
    CHECK(expr::parse("-2^2").eval(0, 0, 0, 0) == -4.0);    // ^ binds tighter
    CHECK(expr::parse("2^-1").eval(0, 0, 0, 0) == 0.5);
    CHECK(expr::parse("-x*y").eval(0, 2, 3, 0) == -6.0);
    CHECK(expr::parse("12/4/3").eval(0, 0, 0, 0) == 1.0);
}

TEST_CASE("round trip: parse(unparse(ast)) is node-identical, 1000 random ASTs") {
    std::mt19937 rng(12345);
    for (int i = 0; i < 1000; ++i) {
        const Node ast = random_ast(rng, 6);
        const std::string text = expr::unparse(ast);
        const Expression back = expr::parse(text);
        CHECK(expr::tree_equal(ast, back.root));
        // A second round trip must be textually stable too.
        CHECK(expr::unparse(back) == text);
    }
}

TEST_CASE("eval agrees with a shunting-yard reference to 0 ULP, 1000 exprs") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::string text = random_expr_text(rng, 5);
        const double t = u(rng), x = u(rng), y = u(rng), mu = u(rng);
        double a;
        try {
            a = expr::parse(text).eval(t, x, y, mu);
        } catch (const expr::EvalError&) {
            continue;  // division by zero etc.; reference would fault too
        }
        const double b = eval_rpn(to_rpn(text), t, x, y, mu);
        if (std::isfinite(a) && std::isfinite(b)) {
            CHECK(a == b);
            ++checked;
        }
    }
    CHECK(checked > 800);
}
