#pragma once

#include "coneray/system.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coneray {

/// Declared bounds for one component at a fixed rho:
///   w_lo <= w_i[u] <= w_hi and h_i[u] >= h_lower on the cone ball,
///   f_i >= f_lower(x) on the box of admissible (x, u, Du, w).
struct ComponentBounds {
    double w_lo = 0.0;
    double w_hi = 0.0;
    Expr f_lower = Expr::literal(0.0);  ///< in x1, x2, pi, rho
    double h_lower = 0.0;
};

struct HypothesisDecl {
    double rho = 1.0;
    std::vector<ComponentBounds> components;
};

/// Bounds as expressions in rho and pi (f_lower also in x1, x2), so one declaration
/// serves a whole sweep.
struct ComponentBoundsTemplate {
    Expr w_lo;
    Expr w_hi;
    Expr f_lower;
    Expr h_lower;
};

struct HypothesisTemplate {
    std::vector<ComponentBoundsTemplate> components;

    /// Throws ConfigError if any expression fails or the result is inconsistent.
    HypothesisDecl instantiate(double rho) const;
};

/// w_lo <= w_hi, h_lower >= 0, f_lower >= 0 at every node. Throws ConfigError.
void check_decl(const Problem& p, const HypothesisDecl& d);

/// f_lower_i evaluated at every mesh node.
ScalarField f_lower_field(const Mesh& mesh, const HypothesisDecl& d, std::size_t component);

struct PhiReport {
    std::vector<double> per_component;  ///< |K_i f_lower_i + h_lower_i gamma_i|_inf
    double max = 0.0;
    std::size_t best_component = 0;     ///< 0-based argmax
    bool supported() const noexcept { return max > 0.0; }
};

PhiReport compute_phi(const Problem& p, const HypothesisDecl& d);

/// One random cone-ball state; sample_cone_ball(..)[index] == cone_ball_sample(.., index).
State cone_ball_sample(std::shared_ptr<const Mesh> mesh, std::size_t n, double rho, std::uint64_t seed,
                       std::size_t index);

/// count states in the discrete cone with 0 < ||u||_1 <= rho, deterministic in seed.
/// Each component is a clipped random trigonometric polynomial with 6 modes per axis;
/// the state is then scaled so its norm is uniform in (0, rho].
std::vector<State> sample_cone_ball(std::shared_ptr<const Mesh> mesh, std::size_t n, double rho, std::size_t count,
                                    std::uint64_t seed);

/// A point of the box: node x, values u in [0, rho]^n, partials in [-rho, rho]^(2n), w in [w_lo, w_hi].
struct BoxSample {
    std::size_t node = 0;
    std::vector<double> u;
    std::vector<double> du;  ///< du[2*i + j] = d u_i / d x_(j+1)
    double w = 0.0;
};

inline constexpr std::size_t box_anchor_count = 4;

/// Deterministic corners: node 0, u in {0, rho}^n (all equal), du = 0, w in {w_lo, w_hi}.
BoxSample box_anchor(const Problem& p, const HypothesisDecl& d, std::size_t component, std::size_t index);
BoxSample box_sample(const Problem& p, const HypothesisDecl& d, std::size_t component, std::uint64_t seed,
                     std::size_t index);

/// f_i at a box point.
double eval_f_at(const Problem& p, std::size_t component, const BoxSample& s);

enum class Verdict { supported, violated, not_checked };
std::string_view verdict_name(Verdict v);

struct Witness {
    std::string kind;  ///< zero_state | cone_sample | sphere_sample | box_anchor | box_sample | node
    std::uint64_t seed = 0;
    std::size_t index = 0;
    double value = 0.0;  ///< the offending quantity value
    double bound = 0.0;  ///< the bound it violates
    std::string detail;
};

struct QuantityReport {
    std::string name;
    std::string condition;  ///< a | b | c | d
    std::string method;     ///< sampled | exhaustive
    std::size_t evaluated = 0;
    double min = 0.0;
    double max = 0.0;
    std::size_t violations = 0;
    std::optional<Witness> worst;
    Verdict verdict = Verdict::not_checked;
};

struct SampleReport {
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::vector<QuantityReport> quantities;
    PhiReport phi;

    /// violated if any quantity of the condition is, supported if all checked ones are.
    Verdict condition(const std::string& name) const;
    bool any_violated() const;
    void merge(const SampleReport& other);
};

/// Sampled w- and h-bounds on the cone ball (plus the zero state), and the lower bound
/// ||Phi(u)||_1 >= max_i phi_i on samples rescaled to the sphere ||u||_1 = rho.
SampleReport check_bounds(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed);

/// f_i >= f_lower_i sampled over the box (plus box_anchor_count anchors).
SampleReport check_f_lower(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed);

/// Exhaustive nodal checks: zeta >= 0, gamma >= 0, f_lower >= 0, and condition (d) from compute_phi.
SampleReport check_analytic(const Problem& p, const HypothesisDecl& d);

/// check_analytic + check_bounds + check_f_lower.
SampleReport check_all(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed);

} // namespace coneray
