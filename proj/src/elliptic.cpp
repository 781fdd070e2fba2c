#include "coneray/elliptic.hpp"

#include "coneray/error.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace coneray {

EllipticOperatorSpec EllipticOperatorSpec::make(std::array<std::array<Expr, 2>, 2> a, std::array<Expr, 2> drift,
                                                Expr a0, double mu0) {
    if (!(a[0][1] == a[1][0])) {
        throw ConfigError("second-order coefficients must be symmetric: a12 = '" + to_string(a[0][1]) +
                          "' but a21 = '" + to_string(a[1][0]) + "'");
    }
    return {a[0][0], a[0][1], a[1][1], std::move(drift), std::move(a0), mu0};
}

EllipticOperatorSpec EllipticOperatorSpec::laplacian() {
    const Expr one = Expr::literal(1.0);
    const Expr zero = Expr::literal(0.0);
    return {one, zero, one, {zero, zero}, zero, 1.0};
}

BoundaryOperatorSpec BoundaryOperatorSpec::dirichlet() { return {BoundaryKind::dirichlet, Expr::literal(1.0), 0, {}}; }

BoundaryOperatorSpec BoundaryOperatorSpec::neumann() { return {BoundaryKind::neumann, Expr::literal(0.0), 1, {}}; }

BoundaryOperatorSpec BoundaryOperatorSpec::oblique(Expr b) { return {BoundaryKind::oblique, std::move(b), 1, {}}; }

std::string_view boundary_kind_name(BoundaryKind kind) {
    switch (kind) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::oblique: return "oblique";
    }
    return "?";
}

std::string Diagnostics::summary() const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) {
            out += "; ";
        }
        out += v;
    }
    return out;
}

Env coefficient_env(const Point& x) { return Env{{"x1", x[0]}, {"x2", x[1]}, {"pi", std::numbers::pi}}; }

namespace {

std::string where(const Point& x) {
    std::ostringstream os;
    os.precision(6);
    os << "(" << x[0] << ", " << x[1] << ")";
    return os.str();
}

struct Coefficients {
    double a11, a12, a22, b1, b2, c;
};

Coefficients coefficients_at(const EllipticOperatorSpec& L, const Point& x) {
    const Env env = coefficient_env(x);
    return {eval(L.a11, env), eval(L.a12, env), eval(L.a22, env),
            eval(L.drift[0], env), eval(L.drift[1], env), eval(L.a0, env)};
}

double smallest_eigenvalue(const Coefficients& k) {
    const double mean = 0.5 * (k.a11 + k.a22);
    const double half_diff = 0.5 * (k.a11 - k.a22);
    return mean - std::hypot(half_diff, k.a12);
}

Point boundary_direction(const BoundaryOperatorSpec& B, const Mesh& mesh, std::size_t i) {
    if (!B.nu) {
        return *mesh.nu(i);
    }
    const Env env = coefficient_env(mesh.node(i));
    const double v1 = eval((*B.nu)[0], env);
    const double v2 = eval((*B.nu)[1], env);
    const double len = std::hypot(v1, v2);
    if (!(len > 0.0)) {
        throw DomainError("boundary direction field vanishes at " + where(mesh.node(i)));
    }
    return {v1 / len, v2 / len};
}

} // namespace

Diagnostics validate(const EllipticOperatorSpec& L, const BoundaryOperatorSpec& B, const Mesh& mesh) {
    Diagnostics d;
    if (!(L.mu0 > 0.0)) {
        d.violations.push_back("mu0: declared ellipticity constant must be positive");
    }

    double worst_eig = INFINITY;
    std::size_t worst_eig_node = 0;
    double worst_a0 = INFINITY;
    std::size_t worst_a0_node = 0;
    bool a0_nonzero = false;
    try {
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const Coefficients k = coefficients_at(L, mesh.node(i));
            const double e = smallest_eigenvalue(k);
            if (e < worst_eig) {
                worst_eig = e;
                worst_eig_node = i;
            }
            if (k.c < worst_a0) {
                worst_a0 = k.c;
                worst_a0_node = i;
            }
            a0_nonzero = a0_nonzero || k.c != 0.0;
        }
    } catch (const Error& e) {
        d.violations.push_back(std::string("coefficients: ") + e.what());
        return d;
    }
    if (L.mu0 > 0.0 && worst_eig < L.mu0 * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "ellipticity: smallest eigenvalue of [a_jl] is " << worst_eig << " < mu0 = " << L.mu0 << " at "
           << where(mesh.node(worst_eig_node));
        d.violations.push_back(os.str());
    }
    if (worst_a0 < 0.0) {
        std::ostringstream os;
        os << "a0: must be >= 0, found " << worst_a0 << " at " << where(mesh.node(worst_a0_node));
        d.violations.push_back(os.str());
    }

    const int expected_delta = B.kind == BoundaryKind::dirichlet ? 0 : 1;
    if (B.bdelta != expected_delta) {
        d.violations.push_back(std::string(boundary_kind_name(B.kind)) + ": bdelta must be " +
                               std::to_string(expected_delta));
    }
    try {
        bool b_nonzero = false;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            if (!mesh.is_boundary(i)) {
                continue;
            }
            const double b = eval(B.b, coefficient_env(mesh.node(i)));
            b_nonzero = b_nonzero || b != 0.0;
            const auto at = where(mesh.node(i));
            if (B.kind == BoundaryKind::dirichlet && b != 1.0) {
                d.violations.push_back("dirichlet: b must be identically 1, found " + std::to_string(b) + " at " + at);
                break;
            }
            if (B.kind == BoundaryKind::neumann && b != 0.0) {
                d.violations.push_back("neumann: b must be identically 0, found " + std::to_string(b) + " at " + at);
                break;
            }
            if (B.kind == BoundaryKind::oblique && b < 0.0) {
                d.violations.push_back("oblique: b must be >= 0, found " + std::to_string(b) + " at " + at);
                break;
            }
            if (B.nu) {
                const Point v = boundary_direction(B, mesh, i);
                const Point& n = *mesh.nu(i);
                if (!(v[0] * n[0] + v[1] * n[1] > 1e-12)) {
                    d.violations.push_back("nu: direction field must point outward (nowhere tangent) at " + at);
                    break;
                }
            }
        }
        if (B.kind == BoundaryKind::oblique && !b_nonzero) {
            d.violations.push_back("oblique: b must not vanish identically (b = 0 is the neumann case)");
        }
    } catch (const Error& e) {
        d.violations.push_back(std::string("boundary coefficients: ") + e.what());
    }
    if (B.kind == BoundaryKind::neumann && !a0_nonzero) {
        d.violations.push_back("neumann: requires a0 not identically zero, found a0 = 0 at every node (a0 ≡ 0)");
    }
    return d;
}

// ---------------------------------------------------------------------------

struct DiscreteOperator::Impl {
    std::shared_ptr<const Mesh> mesh;
    BoundaryKind kind;
    Matrix matrix;
    double norm = 0.0; // max absolute row sum
    Eigen::VectorXd row_scale;  // 1 / max |entry| per row; lu factorizes diag(row_scale) * matrix
    Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
};

namespace {

using Triplet = Eigen::Triplet<double>;

void add_boundary_rows(const BoundaryOperatorSpec& B, const Mesh& mesh, std::vector<Triplet>& t) {
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (!mesh.is_boundary(i)) {
            continue;
        }
        const auto row = static_cast<Eigen::Index>(i);
        if (B.kind == BoundaryKind::dirichlet) {
            t.emplace_back(row, row, 1.0);
            continue;
        }
        const double b = eval(B.b, coefficient_env(mesh.node(i)));
        const Point v = boundary_direction(B, mesh, i);
        // b u + nu . grad u, with grad u from the mesh's second-order boundary stencils.
        std::map<Eigen::Index, double> acc;
        acc[row] += b;
        for (RowSparse::InnerIterator it(mesh.d_dx1(), row); it; ++it) {
            acc[it.col()] += v[0] * it.value();
        }
        for (RowSparse::InnerIterator it(mesh.d_dx2(), row); it; ++it) {
            acc[it.col()] += v[1] * it.value();
        }
        for (const auto& [col, w] : acc) {
            if (std::abs(w) > 1e-13 * (1.0 + std::abs(b))) {
                t.emplace_back(row, col, w);
            }
        }
    }
}

void add_disk_interior_rows(const EllipticOperatorSpec& L, const Mesh& mesh, std::vector<Triplet>& t) {
    const int nr = mesh.n_r();
    const int nt = mesh.n_theta();
    const double h = mesh.h_r();
    const double ht = mesh.h_theta();
    const double dtheta = 2.0 * std::sin(ht);             // first angular difference
    const double dtheta2 = 4.0 * std::pow(std::sin(0.5 * ht), 2); // second angular difference
    auto idx = [&](int k, int j) { return static_cast<Eigen::Index>(mesh.disk_node(k, j)); };

    // Center: Fourier projections of the first ring give
    //   u_xx + u_yy = 4 (C0 - u0) / h^2,  u_xx - u_yy = 4 C2 / h^2,  u_xy = 2 S2 / h^2,
    //   u_x = C1 / h,  u_y = S1 / h.
    {
        const Coefficients k = coefficients_at(L, {0.0, 0.0});
        t.emplace_back(0, 0, 2.0 * (k.a11 + k.a22) / (h * h) + k.c);
        for (int j = 0; j < nt; ++j) {
            const double th = j * ht;
            const double w0 = 1.0 / nt;
            const double w2c = 2.0 * std::cos(2.0 * th) / nt;
            const double w2s = 2.0 * std::sin(2.0 * th) / nt;
            const double uxx = (2.0 * w0 + 2.0 * w2c) / (h * h);
            const double uyy = (2.0 * w0 - 2.0 * w2c) / (h * h);
            const double uxy = 2.0 * w2s / (h * h);
            const double ux = 2.0 * std::cos(th) / (nt * h);
            const double uy = 2.0 * std::sin(th) / (nt * h);
            const double w = -(k.a11 * uxx + 2.0 * k.a12 * uxy + k.a22 * uyy) + k.b1 * ux + k.b2 * uy;
            t.emplace_back(0, idx(1, j), w);
        }
    }

    for (int kr = 1; kr < nr; ++kr) {
        const double r = kr * h;
        for (int j = 0; j < nt; ++j) {
            const double th = j * ht;
            const double c = std::cos(th);
            const double s = std::sin(th);
            const Coefficients k = coefficients_at(L, mesh.node(mesh.disk_node(kr, j)));

            const double p_rr = -(k.a11 * c * c + 2.0 * k.a12 * s * c + k.a22 * s * s);
            const double p_rt = -(2.0 * s * c * (k.a22 - k.a11) + 2.0 * k.a12 * (c * c - s * s)) / r;
            const double p_tt = -(k.a11 * s * s - 2.0 * k.a12 * s * c + k.a22 * c * c) / (r * r);
            const double p_r = -(k.a11 * s * s - 2.0 * k.a12 * s * c + k.a22 * c * c) / r + k.b1 * c + k.b2 * s;
            const double p_t = -(2.0 * s * c * (k.a11 - k.a22) - 2.0 * k.a12 * (c * c - s * s)) / (r * r) +
                               (-k.b1 * s + k.b2 * c) / r;

            const Eigen::Index row = idx(kr, j);
            t.emplace_back(row, row, -2.0 * p_rr / (h * h) - 2.0 * p_tt / dtheta2 + k.c);
            t.emplace_back(row, idx(kr + 1, j), p_rr / (h * h) + p_r / (2.0 * h));
            t.emplace_back(row, idx(kr - 1, j), p_rr / (h * h) - p_r / (2.0 * h));
            t.emplace_back(row, idx(kr, j + 1), p_tt / dtheta2 + p_t / dtheta);
            t.emplace_back(row, idx(kr, j - 1), p_tt / dtheta2 - p_t / dtheta);
            if (p_rt != 0.0) {
                const double w = p_rt / (2.0 * h * dtheta);
                t.emplace_back(row, idx(kr + 1, j + 1), w);
                t.emplace_back(row, idx(kr + 1, j - 1), -w);
                t.emplace_back(row, idx(kr - 1, j + 1), -w);
                t.emplace_back(row, idx(kr - 1, j - 1), w);
            }
        }
    }
}

void add_rect_interior_rows(const EllipticOperatorSpec& L, const Mesh& mesh, std::vector<Triplet>& t) {
    const double hx = mesh.h_x();
    const double hy = mesh.h_y();
    auto idx = [&](int ix, int iy) { return static_cast<Eigen::Index>(mesh.rect_node(ix, iy)); };
    for (int iy = 1; iy < mesh.ny() - 1; ++iy) {
        for (int ix = 1; ix < mesh.nx() - 1; ++ix) {
            const Eigen::Index row = idx(ix, iy);
            const Coefficients k = coefficients_at(L, mesh.node(static_cast<std::size_t>(row)));
            t.emplace_back(row, row, 2.0 * k.a11 / (hx * hx) + 2.0 * k.a22 / (hy * hy) + k.c);
            t.emplace_back(row, idx(ix + 1, iy), -k.a11 / (hx * hx) + k.b1 / (2.0 * hx));
            t.emplace_back(row, idx(ix - 1, iy), -k.a11 / (hx * hx) - k.b1 / (2.0 * hx));
            t.emplace_back(row, idx(ix, iy + 1), -k.a22 / (hy * hy) + k.b2 / (2.0 * hy));
            t.emplace_back(row, idx(ix, iy - 1), -k.a22 / (hy * hy) - k.b2 / (2.0 * hy));
            if (k.a12 != 0.0) {
                const double w = -2.0 * k.a12 / (4.0 * hx * hy);
                t.emplace_back(row, idx(ix + 1, iy + 1), w);
                t.emplace_back(row, idx(ix - 1, iy - 1), w);
                t.emplace_back(row, idx(ix + 1, iy - 1), -w);
                t.emplace_back(row, idx(ix - 1, iy + 1), -w);
            }
        }
    }
}

} // namespace

DiscreteOperator DiscreteOperator::assemble(const EllipticOperatorSpec& L, const BoundaryOperatorSpec& B,
                                            std::shared_ptr<const Mesh> mesh) {
    if (!mesh) {
        throw ContractViolation("assemble: null mesh");
    }
    const Diagnostics d = validate(L, B, *mesh);
    if (!d.ok()) {
        throw ConfigError("invalid elliptic operator: " + d.summary());
    }

    std::vector<Triplet> t;
    t.reserve(mesh->size() * 9);
    if (mesh->kind() == MeshKind::disk) {
        add_disk_interior_rows(L, *mesh, t);
    } else {
        add_rect_interior_rows(L, *mesh, t);
    }
    add_boundary_rows(B, *mesh, t);

    auto impl = std::make_shared<Impl>();
    impl->mesh = mesh;
    impl->kind = B.kind;
    const auto n = static_cast<Eigen::Index>(mesh->size());
    impl->matrix.resize(n, n);
    impl->matrix.setFromTriplets(t.begin(), t.end());
    impl->matrix.prune(0.0);
    impl->matrix.makeCompressed();
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(n);
    for (Eigen::Index c = 0; c < impl->matrix.outerSize(); ++c) {
        for (Matrix::InnerIterator it(impl->matrix, c); it; ++it) {
            row_sums[it.row()] += std::abs(it.value());
            row_max[it.row()] = std::max(row_max[it.row()], std::abs(it.value()));
        }
    }
    impl->norm = row_sums.maxCoeff();
    if (row_max.minCoeff() == 0.0) {
        throw SingularOperator("discrete elliptic operator has an empty row");
    }
    // Rows scaled to unit max entry before factorization.
    impl->row_scale = row_max.cwiseInverse();
    const Matrix scaled = impl->row_scale.asDiagonal() * impl->matrix;
    impl->lu.analyzePattern(scaled);
    impl->lu.factorize(scaled);
    if (impl->lu.info() != Eigen::Success) {
        throw SingularOperator("factorization of the discrete elliptic operator failed: " + impl->lu.lastErrorMessage());
    }
    return DiscreteOperator(std::move(impl));
}

const DiscreteOperator::Matrix& DiscreteOperator::matrix() const { return impl_->matrix; }
const Mesh& DiscreteOperator::mesh() const { return *impl_->mesh; }
const std::shared_ptr<const Mesh>& DiscreteOperator::mesh_ptr() const { return impl_->mesh; }
BoundaryKind DiscreteOperator::boundary_kind() const { return impl_->kind; }

ScalarField DiscreteOperator::solve(const ScalarField& rhs) const {
    if (rhs.size() != impl_->matrix.rows()) {
        throw ContractViolation("solve: right-hand side has " + std::to_string(rhs.size()) + " entries, operator has " +
                                std::to_string(impl_->matrix.rows()));
    }
    const double scale = rhs.lpNorm<Eigen::Infinity>();
    if (scale == 0.0) {
        return ScalarField::Zero(rhs.size());
    }
    // Normwise backward error |A u - rhs| / (|A| |u| + |rhs|).
    auto backward = [&](const ScalarField& u, const ScalarField& r) {
        return r.lpNorm<Eigen::Infinity>() / (impl_->norm * u.lpNorm<Eigen::Infinity>() + scale);
    };
    const auto& d = impl_->row_scale;
    ScalarField u = impl_->lu.solve(d.cwiseProduct(rhs));
    ScalarField r = rhs - impl_->matrix * u;
    if (backward(u, r) > 1e-14) {
        u += impl_->lu.solve(d.cwiseProduct(r));
        r = rhs - impl_->matrix * u;
    }
    if (!u.allFinite() || !(backward(u, r) <= 1e-10)) {
        std::ostringstream os;
        os << "discrete elliptic solve left backward error " << backward(u, r) << " > 1e-10";
        throw SingularOperator(os.str());
    }
    return u;
}

ScalarField DiscreteOperator::solve_K(const ScalarField& g) const {
    const Mesh& m = mesh();
    if (static_cast<std::size_t>(g.size()) != m.size()) {
        throw ContractViolation("solve_K: field has " + std::to_string(g.size()) + " entries, mesh has " +
                                std::to_string(m.size()));
    }
    ScalarField rhs = g;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.is_boundary(i)) {
            rhs[static_cast<Eigen::Index>(i)] = 0.0;
        }
    }
    return solve(rhs);
}

ScalarField DiscreteOperator::solve_lift(const Expr& zeta) const {
    const Mesh& m = mesh();
    ScalarField rhs = ScalarField::Zero(static_cast<Eigen::Index>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.is_boundary(i)) {
            rhs[static_cast<Eigen::Index>(i)] = eval(zeta, coefficient_env(m.node(i)));
        }
    }
    return solve(rhs);
}

} // namespace coneray
