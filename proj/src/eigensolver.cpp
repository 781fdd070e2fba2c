#include "coneray/eigensolver.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace coneray {

void SolverOptions::check() const {
    if (!(tol > 0.0) || !(norm_floor > 0.0) || max_iter < 1) {
        throw ContractViolation("solver options: tol, norm_floor and max_iter must be positive");
    }
    if (residual_tol && !(*residual_tol > 0.0)) {
        throw ContractViolation("solver options: residual_tol must be positive");
    }
    if (!(relaxation > 0.0) || relaxation > 1.0) {
        throw ContractViolation("solver options: relaxation must lie in (0, 1]");
    }
}

std::string_view status_name(SolveStatus s) {
    switch (s) {
    case SolveStatus::ok: return "ok";
    case SolveStatus::uncertified: return "uncertified";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::norm_collapse: return "norm_collapse";
    }
    return "?";
}

namespace {

double c1_distance(const State& a, const State& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.n(); ++i) {
        m = std::max({m, (a.component(i) - b.component(i)).lpNorm<Eigen::Infinity>(),
                      (a.gradient(i).dx1 - b.gradient(i).dx1).lpNorm<Eigen::Infinity>(),
                      (a.gradient(i).dx2 - b.gradient(i).dx2).lpNorm<Eigen::Infinity>()});
    }
    return m;
}

/// Sets negative nodal values to zero; returns the clipped state and the largest clipped magnitude.
std::pair<State, double> clip_to_cone(const State& v) {
    double clipped = 0.0;
    std::vector<ScalarField> parts;
    parts.reserve(v.n());
    bool any = false;
    for (std::size_t i = 0; i < v.n(); ++i) {
        ScalarField c = v.component(i);
        const double lo = c.minCoeff();
        if (lo < 0.0) {
            any = true;
            clipped = std::max(clipped, -lo);
            c = c.cwiseMax(0.0);
        }
        parts.push_back(std::move(c));
    }
    if (!any) {
        return {v, 0.0};
    }
    return {State(v.mesh_ptr(), std::move(parts)), clipped};
}

State onto_sphere(const State& u, double rho) {
    const double norm = c1_norm(u);
    return u.scaled(rho / norm);
}

} // namespace

EigenPair solve_eigenpair(const Problem& p, double rho, const SolverOptions& opts, const std::optional<State>& u0) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw ContractViolation("solve_eigenpair: rho must be positive and finite");
    }
    opts.check();
    const double residual_tol = opts.residual_tol.value_or(1e-6 * rho);

    State u;
    if (u0) {
        if (u0->n() != p.n() || u0->mesh().size() != p.mesh().size()) {
            throw ContractViolation("solve_eigenpair: initial state does not match the problem");
        }
        if (!in_cone(*u0) || !(c1_norm(*u0) > 0.0)) {
            throw ContractViolation("solve_eigenpair: initial state must be in the cone with positive norm");
        }
        u = onto_sphere(*u0, rho);
    } else {
        u = State::constant(p.mesh_ptr(), p.n(), rho);
    }

    EigenPair out;
    out.rho = rho;
    const double w = opts.relaxation;

    bool settled = false;
    bool alternating = false;
    std::vector<ScalarField> last_diff;
    int k = 0;
    while (k < opts.max_iter) {
        ++k;
        auto [v, clipped] = clip_to_cone(apply_Phi(p, u));
        out.clip = std::max(out.clip, clipped);
        const double nv = c1_norm(v);
        if (!(nv >= opts.norm_floor)) {
            std::ostringstream os;
            os << "||Phi(u)||_1 = " << nv << " fell below the floor " << opts.norm_floor
               << " at iteration " << k << "; the positivity condition (d) does not hold along this path";
            out.u = u;
            out.iterations = k;
            out.status = SolveStatus::norm_collapse;
            out.message = os.str();
            return out;
        }
        State next = v.scaled(rho / nv);
        if (w < 1.0) {
            std::vector<ScalarField> mix;
            mix.reserve(p.n());
            for (std::size_t i = 0; i < p.n(); ++i) {
                mix.push_back((1.0 - w) * u.component(i) + w * next.component(i));
            }
            next = onto_sphere(State(p.mesh_ptr(), std::move(mix)), rho);
        } else {
            next = onto_sphere(next, rho);
        }
        const double step = c1_distance(next, u);
        std::vector<ScalarField> diff;
        diff.reserve(p.n());
        double dot = 0.0;
        for (std::size_t i = 0; i < p.n(); ++i) {
            diff.push_back(next.component(i) - u.component(i));
            if (!last_diff.empty()) {
                dot += diff[i].dot(last_diff[i]);
            }
        }
        alternating = !last_diff.empty() && dot < 0.0;
        last_diff = std::move(diff);
        u = std::move(next);
        if (opts.observer) {
            opts.observer(IterateInfo{k, u, step, clipped});
        }
        if (step <= opts.tol * rho) {
            settled = true;
            break;
        }
    }

    out.u = u;
    out.iterations = k;
    const double phi_norm = c1_norm(apply_Phi(p, u));
    if (!(phi_norm >= opts.norm_floor)) {
        out.status = SolveStatus::norm_collapse;
        out.message = "||Phi(u)||_1 vanished at the final iterate";
        return out;
    }
    out.lambda = rho / phi_norm;
    out.residual = residual(p, u, out.lambda);

    std::ostringstream os;
    if (!settled) {
        out.status = SolveStatus::max_iterations;
        os << "no convergence after " << k << " iterations; residual " << out.residual;
        if (alternating) {
            os << "; successive steps alternate in direction, under-relaxation (e.g. 0.5) damps this";
        }
    } else if (out.residual > residual_tol) {
        out.status = SolveStatus::uncertified;
        os << "iteration settled but residual " << out.residual << " exceeds " << residual_tol;
    } else {
        out.status = SolveStatus::ok;
    }
    out.message = os.str();
    return out;
}

std::vector<EigenPair> sweep_rho(const Problem& p, std::span<const double> rhos, const SolverOptions& opts,
                                 bool warm_start) {
    if (rhos.empty()) {
        throw ContractViolation("sweep_rho: empty list of radii");
    }
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        if (!(rhos[i] > 0.0) || (i > 0 && !(rhos[i] > rhos[i - 1]))) {
            throw ContractViolation("sweep_rho: radii must be positive and strictly increasing");
        }
    }

    std::vector<EigenPair> out;
    out.reserve(rhos.size());
    if (!warm_start) {
        std::vector<std::future<EigenPair>> jobs;
        jobs.reserve(rhos.size());
        for (double rho : rhos) {
            jobs.push_back(std::async(std::launch::async, [&p, rho, &opts] {
                SolverOptions local = opts;
                local.observer = nullptr;
                return solve_eigenpair(p, rho, local);
            }));
        }
        for (auto& j : jobs) {
            out.push_back(j.get());
        }
        return out;
    }

    std::optional<State> start;
    for (double rho : rhos) {
        EigenPair pair = solve_eigenpair(p, rho, opts, start);
        if (pair.ok()) {
            start = pair.u;
        }
        out.push_back(std::move(pair));
    }
    return out;
}

} // namespace coneray
