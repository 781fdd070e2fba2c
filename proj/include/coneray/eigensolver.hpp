#pragma once

#include "coneray/system.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coneray {

struct IterateInfo {
    int iteration;
    const State& u;   ///< iterate after rescaling onto the sphere
    double step;      ///< ||u_k - u_{k-1}||_1
    double clipped;   ///< magnitude of the most negative value removed this step
};

struct SolverOptions {
    double tol = 1e-8;                   ///< on ||u_{k+1} - u_k||_1 / rho
    std::optional<double> residual_tol;  ///< absolute; 1e-6 * rho when unset
    int max_iter = 500;
    double relaxation = 1.0;             ///< omega in (0, 1]
    double norm_floor = 1e-14;
    std::function<void(const IterateInfo&)> observer;

    void check() const;
};

enum class SolveStatus {
    ok,              ///< converged and residual-certified
    uncertified,     ///< iteration settled but the residual exceeds residual_tol
    max_iterations,
    norm_collapse,   ///< ||Phi(u)||_1 fell below norm_floor
};

std::string_view status_name(SolveStatus s);

struct EigenPair {
    State u;
    double lambda = 0.0;
    double rho = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double clip = 0.0;  ///< largest negative magnitude clipped over the run
    SolveStatus status = SolveStatus::ok;
    std::string message;

    bool ok() const noexcept { return status == SolveStatus::ok; }
};

/// Normalized positive iteration on the sphere ||u||_1 = rho:
///   v = max(Phi(u_k), 0),  u_{k+1} = (1 - omega) u_k + omega rho v / ||v||_1, rescaled to norm rho.
/// Stops once the step is below tol * rho; lambda = rho / ||Phi(u*)||_1.
/// The default start is the constant state rho in every component.
EigenPair solve_eigenpair(const Problem& p, double rho, const SolverOptions& opts = {},
                          const std::optional<State>& u0 = std::nullopt);

/// Solves at each rho in increasing order. With warm_start, each solve starts from the
/// previous eigenfunction rescaled to the next rho; otherwise points are solved
/// independently (in parallel). Failures are recorded in the returned pairs.
std::vector<EigenPair> sweep_rho(const Problem& p, std::span<const double> rhos, const SolverOptions& opts = {},
                                 bool warm_start = true);

} // namespace coneray
