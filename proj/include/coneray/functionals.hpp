#pragma once

#include "coneray/expr.hpp"
#include "coneray/state.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace coneray {

/// A real-valued functional of a state, built from point values, gradient point
/// values and domain integrals, combined with arithmetic.
///
/// Component indices and gradient axes are 1-based. Evaluation points snap to the
/// nearest mesh node, which is exact for the disk center and O(h) elsewhere.
class FunctionalSpec {
public:
    enum class Kind { point, grad_point, integral, combine };
    using Arg = std::pair<std::string, FunctionalSpec>;

    static FunctionalSpec point(int component, Point at);
    static FunctionalSpec grad_point(int component, int axis, Point at);
    /// integrand may use the pointwise_names() variables.
    static FunctionalSpec integral(Expr integrand);
    /// outer may use the argument names and pi.
    static FunctionalSpec combine(Expr outer, std::vector<Arg> args);
    static FunctionalSpec constant(double value);

    Kind kind() const;
    int component() const;
    int axis() const;
    const Point& at() const;
    const Expr& expr() const;
    const std::vector<Arg>& args() const;

    /// Largest component index referenced anywhere in the tree.
    int max_component() const;

private:
    struct Node;
    explicit FunctionalSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Throws ConfigError when F references components beyond n or variables that do not exist.
void check_functional(const FunctionalSpec& F, std::size_t n);

/// Throws ContractViolation for a dimension mismatch or a point outside the domain;
/// DomainError propagates from the arithmetic.
double evaluate(const FunctionalSpec& F, const State& u);

struct ExampleFunctionals {
    FunctionalSpec w1;
    FunctionalSpec w2;
    FunctionalSpec h1;
    FunctionalSpec h2;
};

/// The two-component disk example:
///   w1 = 1/(exp(u2(0)) + int |grad u1|^2),  w2 = exp(-int (|grad u1|^2 + |grad u2|^2)),
///   h1 = u1(0) + (du2/dx1(0))^2,            h2 = u1(0)^2 + int |grad u2|^2.
ExampleFunctionals example_functionals();

} // namespace coneray
