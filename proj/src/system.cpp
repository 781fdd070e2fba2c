#include "coneray/system.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <sstream>

namespace coneray {

std::vector<std::string> nonlinearity_names(std::size_t n) {
    auto names = pointwise_names(n);
    names.emplace_back("w");
    return names;
}

Problem Problem::build(std::shared_ptr<const Mesh> mesh, std::vector<ComponentSpec> components) {
    if (!mesh) {
        throw ContractViolation("Problem::build: null mesh");
    }
    if (components.empty()) {
        throw ConfigError("problem needs at least one component");
    }
    Problem p;
    p.mesh_ = mesh;
    const std::size_t n = components.size();
    const auto names = nonlinearity_names(n);

    for (std::size_t i = 0; i < n; ++i) {
        const ComponentSpec& c = components[i];
        const std::string label = "component " + std::to_string(i + 1) + ": ";
        try {
            p.fs_.emplace_back(c.f, names);
        } catch (const UnboundVariable& e) {
            throw ConfigError(label + "f uses unknown variable '" + e.name() + "'");
        }
        try {
            check_functional(c.w, n);
            check_functional(c.h, n);
        } catch (const ConfigError& e) {
            throw ConfigError(label + e.what());
        }
        for (const auto& v : free_vars(c.zeta)) {
            if (v != "x1" && v != "x2" && v != "pi") {
                throw ConfigError(label + "zeta uses unknown variable '" + v + "'");
            }
        }

        try {
            p.ops_.push_back(DiscreteOperator::assemble(c.op, c.bc, mesh));
        } catch (const ConfigError& e) {
            throw ConfigError(label + e.what());
        }

        for (std::size_t k = 0; k < mesh->size(); ++k) {
            if (!mesh->is_boundary(k)) {
                continue;
            }
            const double z = eval(c.zeta, coefficient_env(mesh->node(k)));
            if (z < 0.0) {
                std::ostringstream os;
                os << label << "zeta must be >= 0 on the boundary, found " << z << " at (" << mesh->node(k)[0] << ", "
                   << mesh->node(k)[1] << ")";
                throw ConfigError(os.str());
            }
        }
        ScalarField gamma = p.ops_.back().solve_lift(c.zeta);
        if (gamma.minCoeff() < -1e-12) {
            throw Error(label + "boundary lift gamma is negative (" + std::to_string(gamma.minCoeff()) +
                        "); the discrete maximum principle failed for this operator");
        }
        p.gammas_.push_back(std::move(gamma));
    }
    p.components_ = std::move(components);
    return p;
}

std::vector<ScalarField> apply_F(const Problem& p, const State& u) {
    if (u.n() != p.n() || u.mesh().size() != p.mesh().size()) {
        throw ContractViolation("apply_F: state does not match the problem's mesh and component count");
    }
    const std::size_t n = p.n();
    const Mesh& mesh = p.mesh();
    const std::size_t w_slot = nonlinearity_names(n).size() - 1;
    std::vector<double> slots(w_slot + 1);
    std::vector<ScalarField> out;
    out.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const CompiledExpr& f = p.compiled_f(i);
        double w = 0.0;
        if (f.uses_slot(w_slot)) {
            w = evaluate(p.component(i).w, u);
        }
        ScalarField Fi(static_cast<Eigen::Index>(mesh.size()));
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            fill_pointwise(u, k, slots);
            slots[w_slot] = w;
            try {
                Fi[static_cast<Eigen::Index>(k)] = f(slots);
            } catch (const DomainError& e) {
                std::ostringstream os;
                os << "f of component " << (i + 1) << " at node " << k << " (" << mesh.node(k)[0] << ", "
                   << mesh.node(k)[1] << "): " << e.what();
                throw DomainError(os.str());
            }
        }
        out.push_back(std::move(Fi));
    }
    return out;
}

State apply_Phi(const Problem& p, const State& u) {
    std::vector<ScalarField> F = apply_F(p, u);
    std::vector<ScalarField> phi;
    phi.reserve(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) {
        ScalarField v = p.op(i).solve_K(F[i]);
        const double hv = evaluate(p.component(i).h, u);
        if (hv != 0.0) {
            v += hv * p.gamma(i);
        }
        phi.push_back(std::move(v));
    }
    return State(p.mesh_ptr(), std::move(phi));
}

double residual(const Problem& p, const State& u, double lambda) {
    if (!(lambda > 0.0)) {
        throw ContractViolation("residual: lambda must be positive");
    }
    const State phi = apply_Phi(p, u);
    std::vector<ScalarField> diff;
    diff.reserve(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) {
        diff.push_back(u.component(i) - lambda * phi.component(i));
    }
    return c1_norm(State(p.mesh_ptr(), std::move(diff)));
}

} // namespace coneray
