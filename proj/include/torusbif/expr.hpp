#ifndef TORUSBIF_EXPR_HPP
#define TORUSBIF_EXPR_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace torusbif::expr {

/// Error while parsing an expression string; offset is in bytes from the start.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int offset_)
        : std::runtime_error(msg + " (at byte " + std::to_string(offset_) + ")"), offset(offset_) {}
    int offset;
};

/// Domain error during evaluation, carrying the offending subexpression text.
struct EvalError : std::runtime_error {
    EvalError(const std::string& msg, const std::string& subexpr_)
        : std::runtime_error(msg + " in subexpression '" + subexpr_ + "'"), subexpr(subexpr_) {}
    std::string subexpr;
};

enum class Var { T, X, Y, Mu };
enum class Func { Sin, Cos, Sqrt, Exp, Abs, Pow };

struct Node {
    enum class Kind { Constant, Variable, Unary, Binary, Call };

    Kind kind = Kind::Constant;
    double value = 0.0;   // Constant
    Var var = Var::T;     // Variable
    char op = 0;          // Unary '-' or Binary '+','-','*','/','^'
    Func func = Func::Sin;
    std::vector<Node> args;
    int offset = 0, length = 0;  // span in the original source
};

bool tree_equal(const Node& a, const Node& b);

struct Expression {
    std::string source;
    Node root;

    double eval(double t, double x, double y, double mu) const;
};

/// Parses an arithmetic expression in variables t, x, y, mu with constants
/// pi and e, functions sin, cos, sqrt, exp, abs, pow(a,b), operators
/// + - * / ^ and unary minus. Throws ParseError on bad input.
Expression parse(const std::string& source);

/// Renders the AST back to text; parse(unparse(e)) has an identical tree.
std::string unparse(const Expression& e);
std::string unparse(const Node& n);

}  // namespace torusbif::expr

#endif
