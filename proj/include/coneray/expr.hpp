#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coneray {

using Env = std::map<std::string, double, std::less<>>;

/// Immutable scalar expression tree.
///
/// Grammar, loosest to tightest binding:
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := atom ('^' unary)?          (right-associative)
///   atom    := number | identifier | identifier '(' args ')' | '(' sum ')'
/// Functions: exp, log, sqrt, abs (one argument), min, max (two arguments).
class Expr {
public:
    enum class Kind { literal, variable, negate, binary, call };
    enum class BinaryOp { add, sub, mul, div, pow };
    enum class Function { exp, log, sqrt, abs, min, max };

    /// The literal 0.
    Expr();

    static Expr literal(double value);
    static Expr variable(std::string name);
    static Expr negate(Expr operand);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr call(Function fn, std::vector<Expr> args);

    Kind kind() const;
    double value() const;
    const std::string& name() const;
    BinaryOp op() const;
    Function function() const;
    std::span<const Expr> children() const;

    /// Structural equality.
    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Expr parse(std::string_view text);

/// Evaluates e; throws UnboundVariable or DomainError. Never returns a non-finite value.
double eval(const Expr& e, const Env& env);

std::set<std::string> free_vars(const Expr& e);

/// Canonical text form; parse(to_string(e)) == e for every parser-produced tree.
std::string to_string(const Expr& e);

std::string_view function_name(Expr::Function fn);

/// An expression with its variables resolved to positions in a value array,
/// for evaluation in per-node loops. Same arithmetic and domain checks as eval().
class CompiledExpr {
public:
    CompiledExpr() = default;
    /// Throws UnboundVariable if e references a name not in slots.
    CompiledExpr(const Expr& e, std::span<const std::string> slots);

    double operator()(std::span<const double> values) const;

    bool uses_slot(std::size_t slot) const;

private:
    struct Op {
        Expr::Kind kind;
        Expr::BinaryOp bop;
        Expr::Function fn;
        double value;
        std::size_t slot;
        int lhs;
        int rhs;
    };
    int emit(const Expr& e, std::span<const std::string> slots);
    double run(int index, std::span<const double> values) const;

    std::vector<Op> ops_;
    int root_ = -1;
};

} // namespace coneray
