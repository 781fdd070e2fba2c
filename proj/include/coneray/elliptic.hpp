#pragma once

#include "coneray/expr.hpp"
#include "coneray/mesh.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace coneray {

/// L u = -sum a_jl d2u/dx_j dx_l + sum a_j du/dx_j + a0 u, coefficients in (x1, x2, pi).
/// The second-order matrix is stored by its three distinct entries, so a_12 = a_21 holds
/// by construction; make() rejects asymmetric input.
struct EllipticOperatorSpec {
    Expr a11;
    Expr a12;
    Expr a22;
    std::array<Expr, 2> drift;
    Expr a0;
    double mu0 = 1.0;

    static EllipticOperatorSpec make(std::array<std::array<Expr, 2>, 2> a, std::array<Expr, 2> drift, Expr a0,
                                     double mu0);
    /// -Laplacian with mu0 = 1.
    static EllipticOperatorSpec laplacian();
};

enum class BoundaryKind { dirichlet, neumann, oblique };

/// B u = b u + bdelta du/dnu. Dirichlet: bdelta = 0, b = 1. Neumann: bdelta = 1, b = 0.
/// Oblique: bdelta = 1, b >= 0 and not identically zero.
struct BoundaryOperatorSpec {
    BoundaryKind kind = BoundaryKind::dirichlet;
    Expr b = Expr::literal(1.0);
    int bdelta = 0;
    /// Direction field; the mesh's outward normal when empty. Normalized per node.
    std::optional<std::array<Expr, 2>> nu;

    static BoundaryOperatorSpec dirichlet();
    static BoundaryOperatorSpec neumann();
    static BoundaryOperatorSpec oblique(Expr b);
};

std::string_view boundary_kind_name(BoundaryKind kind);

struct Diagnostics {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string summary() const;
};

/// Checks symmetry-derived ellipticity, a0 >= 0 and the boundary-kind clauses at every node.
Diagnostics validate(const EllipticOperatorSpec& L, const BoundaryOperatorSpec& B, const Mesh& mesh);

/// Coefficient variables: x1, x2 and pi.
Env coefficient_env(const Point& x);

/// Assembled and factorized L with its boundary rows. Copies share the factorization;
/// solves do not mutate it.
class DiscreteOperator {
public:
    using Matrix = Eigen::SparseMatrix<double>;

    /// Throws ConfigError if validate() fails and SingularOperator if factorization fails.
    static DiscreteOperator assemble(const EllipticOperatorSpec& L, const BoundaryOperatorSpec& B,
                                     std::shared_ptr<const Mesh> mesh);

    const Matrix& matrix() const;
    const Mesh& mesh() const;
    const std::shared_ptr<const Mesh>& mesh_ptr() const;
    BoundaryKind boundary_kind() const;

    /// L u = g at interior nodes, B u = 0 on the boundary (boundary entries of g are ignored).
    ScalarField solve_K(const ScalarField& g) const;

    /// L u = 0 at interior nodes, B u = zeta on the boundary.
    ScalarField solve_lift(const Expr& zeta) const;

    /// Raw solve of the assembled system A u = rhs.
    ScalarField solve(const ScalarField& rhs) const;

private:
    struct Impl;
    explicit DiscreteOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

} // namespace coneray
