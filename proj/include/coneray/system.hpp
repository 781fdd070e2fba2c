#pragma once

#include "coneray/elliptic.hpp"
#include "coneray/expr.hpp"
#include "coneray/functionals.hpp"
#include "coneray/state.hpp"

#include <memory>
#include <vector>

namespace coneray {

/// One equation of the system:
///   L u_i = lambda f(x, u, Du, w[u]) in the domain,  B u_i = lambda zeta h[u] on the boundary.
/// f may use pointwise_names(n) plus "w"; zeta uses x1, x2, pi.
struct ComponentSpec {
    EllipticOperatorSpec op = EllipticOperatorSpec::laplacian();
    BoundaryOperatorSpec bc = BoundaryOperatorSpec::dirichlet();
    Expr zeta = Expr::literal(1.0);
    Expr f = Expr::literal(0.0);
    FunctionalSpec w = FunctionalSpec::constant(1.0);
    FunctionalSpec h = FunctionalSpec::constant(0.0);
};

/// Validated system with its assembled operators and boundary lifts gamma_i.
/// Immutable; apply_Phi on distinct states may run concurrently.
class Problem {
public:
    /// Throws ConfigError on any invalid component, including zeta < 0 on the boundary.
    static Problem build(std::shared_ptr<const Mesh> mesh, std::vector<ComponentSpec> components);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
    std::size_t n() const noexcept { return components_.size(); }

    const ComponentSpec& component(std::size_t i) const { return components_[i]; }
    const DiscreteOperator& op(std::size_t i) const { return ops_[i]; }
    const ScalarField& gamma(std::size_t i) const { return gammas_[i]; }
    const CompiledExpr& compiled_f(std::size_t i) const { return fs_[i]; }

private:
    Problem() = default;

    std::shared_ptr<const Mesh> mesh_;
    std::vector<ComponentSpec> components_;
    std::vector<DiscreteOperator> ops_;
    std::vector<ScalarField> gammas_;
    std::vector<CompiledExpr> fs_;
};

/// Variables available to f for an n-component problem: pointwise_names(n) and "w".
std::vector<std::string> nonlinearity_names(std::size_t n);

/// F_i(u)(x) = f_i(x, u(x), Du(x), w_i[u]) at every node.
std::vector<ScalarField> apply_F(const Problem& p, const State& u);

/// Phi(u)_i = K_i F_i(u) + gamma_i h_i[u].
State apply_Phi(const Problem& p, const State& u);

/// ||u - lambda Phi(u)||_1. Requires lambda > 0.
double residual(const Problem& p, const State& u, double lambda);

} // namespace coneray
