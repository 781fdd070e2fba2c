#include "coneray/hypotheses.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace coneray {

namespace {

// Comparisons against declared bounds allow this much relative rounding.
constexpr double kRelSlack = 1e-12;

double slack(double bound) { return kRelSlack * std::max(1.0, std::abs(bound)); }

enum class Stream : std::uint32_t { cone = 1, box = 2 };

/// Uniform doubles from mt19937_64, seeded from (seed, stream, index, sub).
class SampleRng {
public:
    SampleRng(std::uint64_t seed, Stream stream, std::uint64_t index, std::uint64_t sub) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(sub)};
        engine_.seed(seq);
    }

    /// In [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

Env bounds_env(double rho) { return Env{{"rho", rho}, {"pi", std::numbers::pi}}; }

constexpr int kModes = 6;

/// Per-node cos/sin of p*pi*s along each axis, s the coordinate normalized to [0, 1]
/// over the mesh's bounding box.
class ConeSampler {
public:
    ConeSampler(std::shared_ptr<const Mesh> mesh, std::size_t n, double rho)
        : mesh_(std::move(mesh)), n_(n), rho_(rho) {
        if (!(rho > 0.0)) {
            throw ContractViolation("cone sampler: rho must be positive");
        }
        if (n == 0) {
            throw ContractViolation("cone sampler: need at least one component");
        }
        const Mesh& m = *mesh_;
        std::array<double, 2> lo{};
        std::array<double, 2> hi{};
        if (m.kind() == MeshKind::disk) {
            lo = {-m.radius(), -m.radius()};
            hi = {m.radius(), m.radius()};
        } else {
            hi = {m.lx(), m.ly()};
        }
        const auto size = static_cast<Eigen::Index>(m.size());
        for (int axis = 0; axis < 2; ++axis) {
            for (int p = 0; p < kModes; ++p) {
                cos_[axis][p].resize(size);
                sin_[axis][p].resize(size);
                for (Eigen::Index k = 0; k < size; ++k) {
                    const double s = (m.node(static_cast<std::size_t>(k))[axis] - lo[axis]) / (hi[axis] - lo[axis]);
                    cos_[axis][p][k] = std::cos(p * std::numbers::pi * s);
                    sin_[axis][p][k] = std::sin(p * std::numbers::pi * s);
                }
            }
        }
    }

    State sample(std::uint64_t seed, std::size_t index) const {
        SampleRng rng(seed, Stream::cone, index, 0);
        const auto size = static_cast<Eigen::Index>(mesh_->size());
        std::vector<ScalarField> parts;
        parts.reserve(n_);
        for (std::size_t c = 0; c < n_; ++c) {
            // f = sum_p cos(p pi s1 + alpha_p) * sum_q a_pq cos(q pi s2 + beta_q)
            std::array<ScalarField, kModes> x_modes;
            std::array<ScalarField, kModes> y_modes;
            for (int p = 0; p < kModes; ++p) {
                const double alpha = 2.0 * std::numbers::pi * rng.uniform();
                x_modes[p] = std::cos(alpha) * cos_[0][p] - std::sin(alpha) * sin_[0][p];
            }
            for (int q = 0; q < kModes; ++q) {
                const double beta = 2.0 * std::numbers::pi * rng.uniform();
                y_modes[q] = std::cos(beta) * cos_[1][q] - std::sin(beta) * sin_[1][q];
            }
            ScalarField f = ScalarField::Zero(size);
            for (int p = 0; p < kModes; ++p) {
                ScalarField inner = ScalarField::Zero(size);
                for (int q = 0; q < kModes; ++q) {
                    const double a = (2.0 * rng.uniform() - 1.0) / (1.0 + p + q);
                    inner += a * y_modes[q];
                }
                f += x_modes[p].cwiseProduct(inner);
            }
            parts.push_back(f.cwiseMax(0.0));
        }
        const double target = rho_ * (1.0 - rng.uniform());  // in (0, rho]
        State u(mesh_, std::move(parts));
        double norm = c1_norm(u);
        if (!(norm > 0.0)) {
            // Every component clipped away entirely; fall back to a positive constant.
            u = State::constant(mesh_, n_, 1.0);
            norm = 1.0;
        }
        return u.scaled(target / norm);
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    std::size_t n_;
    double rho_;
    std::array<std::array<ScalarField, kModes>, 2> cos_;
    std::array<std::array<ScalarField, kModes>, 2> sin_;
};

/// Running extrema and the worst violation of one checked quantity.
class Tracker {
public:
    Tracker(std::string name, std::string condition, std::string method) {
        q_.name = std::move(name);
        q_.condition = std::move(condition);
        q_.method = std::move(method);
        q_.min = std::numeric_limits<double>::infinity();
        q_.max = -std::numeric_limits<double>::infinity();
    }

    /// excess > 0 marks a violation; the largest excess keeps its witness.
    void observe(double value, double excess, const Witness& w) {
        ++q_.evaluated;
        q_.min = std::min(q_.min, value);
        q_.max = std::max(q_.max, value);
        if (excess > 0.0) {
            ++q_.violations;
            if (excess > worst_excess_) {
                worst_excess_ = excess;
                q_.worst = w;
            }
        }
    }

    /// Evaluation failures count as violations.
    void observe_failure(const Witness& w) {
        ++q_.evaluated;
        ++q_.violations;
        if (!q_.worst || worst_excess_ < std::numeric_limits<double>::infinity()) {
            worst_excess_ = std::numeric_limits<double>::infinity();
            q_.worst = w;
        }
    }

    QuantityReport finish() {
        if (q_.evaluated == 0) {
            q_.min = q_.max = 0.0;
            q_.verdict = Verdict::not_checked;
        } else {
            q_.verdict = q_.violations == 0 ? Verdict::supported : Verdict::violated;
        }
        return q_;
    }

private:
    QuantityReport q_;
    double worst_excess_ = 0.0;
};

Witness witness(std::string kind, std::uint64_t seed, std::size_t index, double value, double bound,
                std::string detail = {}) {
    return Witness{std::move(kind), seed, index, value, bound, std::move(detail)};
}

/// Excess of value over the interval [lo, hi], after slack.
double interval_excess(double value, double lo, double hi) {
    if (value < lo - slack(lo)) {
        return lo - value;
    }
    if (value > hi + slack(hi)) {
        return value - hi;
    }
    return 0.0;
}

double eval_f_lower(const Expr& f_lower, const Point& x, double rho) {
    Env env = coefficient_env(x);
    env["rho"] = rho;
    return eval(f_lower, env);
}

} // namespace

// ---------------------------------------------------------------------------

HypothesisDecl HypothesisTemplate::instantiate(double rho) const {
    if (!(rho > 0.0)) {
        throw ContractViolation("hypotheses: rho must be positive");
    }
    HypothesisDecl d;
    d.rho = rho;
    const Env env = bounds_env(rho);
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto& t = components[i];
        try {
            d.components.push_back({eval(t.w_lo, env), eval(t.w_hi, env), t.f_lower, eval(t.h_lower, env)});
        } catch (const Error& e) {
            throw ConfigError("hypotheses, component " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return d;
}

void check_decl(const Problem& p, const HypothesisDecl& d) {
    if (d.components.size() != p.n()) {
        throw ConfigError("hypotheses declare " + std::to_string(d.components.size()) + " components, the problem has " +
                          std::to_string(p.n()));
    }
    for (std::size_t i = 0; i < p.n(); ++i) {
        const auto& c = d.components[i];
        const std::string label = "hypotheses, component " + std::to_string(i + 1) + ": ";
        if (!(c.w_lo <= c.w_hi)) {
            throw ConfigError(label + "w_lo must not exceed w_hi");
        }
        if (!(c.h_lower >= 0.0)) {
            throw ConfigError(label + "h_lower must be >= 0");
        }
        for (const auto& v : free_vars(c.f_lower)) {
            if (v != "x1" && v != "x2" && v != "pi" && v != "rho") {
                throw ConfigError(label + "f_lower uses unknown variable '" + v + "'");
            }
        }
        try {
            const ScalarField fl = f_lower_field(p.mesh(), d, i);
            if (fl.minCoeff() < 0.0) {
                throw ConfigError(label + "f_lower must be >= 0 at every node");
            }
        } catch (const DomainError& e) {
            throw ConfigError(label + "f_lower: " + e.what());
        }
    }
}

ScalarField f_lower_field(const Mesh& mesh, const HypothesisDecl& d, std::size_t component) {
    ScalarField out(static_cast<Eigen::Index>(mesh.size()));
    const Expr& e = d.components.at(component).f_lower;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = eval_f_lower(e, mesh.node(k), d.rho);
    }
    return out;
}

PhiReport compute_phi(const Problem& p, const HypothesisDecl& d) {
    check_decl(p, d);
    PhiReport r;
    for (std::size_t i = 0; i < p.n(); ++i) {
        ScalarField v = p.op(i).solve_K(f_lower_field(p.mesh(), d, i));
        const double eta = d.components[i].h_lower;
        if (eta != 0.0) {
            v += eta * p.gamma(i);
        }
        const double phi = v.lpNorm<Eigen::Infinity>();
        r.per_component.push_back(phi);
        if (phi > r.max) {
            r.max = phi;
            r.best_component = i;
        }
    }
    return r;
}

State cone_ball_sample(std::shared_ptr<const Mesh> mesh, std::size_t n, double rho, std::uint64_t seed,
                       std::size_t index) {
    return ConeSampler(std::move(mesh), n, rho).sample(seed, index);
}

std::vector<State> sample_cone_ball(std::shared_ptr<const Mesh> mesh, std::size_t n, double rho, std::size_t count,
                                    std::uint64_t seed) {
    if (count < 1) {
        throw ContractViolation("sample_cone_ball: count must be >= 1");
    }
    const ConeSampler sampler(std::move(mesh), n, rho);
    std::vector<State> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(sampler.sample(seed, k));
    }
    return out;
}

BoxSample box_anchor(const Problem& p, const HypothesisDecl& d, std::size_t component, std::size_t index) {
    if (index >= box_anchor_count) {
        throw ContractViolation("box_anchor: index out of range");
    }
    const auto& c = d.components.at(component);
    BoxSample s;
    s.node = 0;
    s.u.assign(p.n(), (index & 1U) ? d.rho : 0.0);
    s.du.assign(2 * p.n(), 0.0);
    s.w = (index & 2U) ? c.w_hi : c.w_lo;
    return s;
}

BoxSample box_sample(const Problem& p, const HypothesisDecl& d, std::size_t component, std::uint64_t seed,
                     std::size_t index) {
    const auto& c = d.components.at(component);
    SampleRng rng(seed, Stream::box, index, component);
    BoxSample s;
    const auto nodes = static_cast<double>(p.mesh().size());
    s.node = std::min(p.mesh().size() - 1, static_cast<std::size_t>(rng.uniform() * nodes));
    s.u.resize(p.n());
    for (auto& v : s.u) {
        v = d.rho * rng.uniform();
    }
    s.du.resize(2 * p.n());
    for (auto& v : s.du) {
        v = d.rho * (2.0 * rng.uniform() - 1.0);
    }
    s.w = c.w_lo + (c.w_hi - c.w_lo) * rng.uniform();
    return s;
}

double eval_f_at(const Problem& p, std::size_t component, const BoxSample& s) {
    const std::size_t n = p.n();
    std::vector<double> slots(nonlinearity_names(n).size());
    const Point& x = p.mesh().node(s.node);
    slots[0] = x[0];
    slots[1] = x[1];
    slots[2] = std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        const double g1 = s.du[2 * i];
        const double g2 = s.du[2 * i + 1];
        slots[3 + i] = s.u[i];
        slots[3 + n + 2 * i] = g1;
        slots[3 + n + 2 * i + 1] = g2;
        slots[3 + 3 * n + i] = g1 * g1 + g2 * g2;
    }
    slots.back() = s.w;
    return p.compiled_f(component)(slots);
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::supported: return "supported";
    case Verdict::violated: return "violated";
    case Verdict::not_checked: return "not_checked";
    }
    return "?";
}

Verdict SampleReport::condition(const std::string& name) const {
    bool any = false;
    for (const auto& q : quantities) {
        if (q.condition != name || q.verdict == Verdict::not_checked) {
            continue;
        }
        if (q.verdict == Verdict::violated) {
            return Verdict::violated;
        }
        any = true;
    }
    return any ? Verdict::supported : Verdict::not_checked;
}

bool SampleReport::any_violated() const {
    return std::any_of(quantities.begin(), quantities.end(),
                       [](const QuantityReport& q) { return q.verdict == Verdict::violated; });
}

void SampleReport::merge(const SampleReport& other) {
    quantities.insert(quantities.end(), other.quantities.begin(), other.quantities.end());
    samples = std::max(samples, other.samples);
    if (!other.phi.per_component.empty()) {
        phi = other.phi;
    }
}

// ---------------------------------------------------------------------------

SampleReport check_bounds(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed) {
    if (count < 1) {
        throw ContractViolation("check_bounds: sample count must be >= 1");
    }
    check_decl(p, d);
    const PhiReport phi = compute_phi(p, d);
    const std::size_t n = p.n();
    const double rho = d.rho;

    std::vector<Tracker> w_track;
    std::vector<Tracker> h_track;
    for (std::size_t i = 0; i < n; ++i) {
        w_track.emplace_back("w" + std::to_string(i + 1), "a", "sampled");
        h_track.emplace_back("h" + std::to_string(i + 1), "c", "sampled");
    }
    Tracker sphere("phi_sphere_bound", "d", "sampled");

    auto visit_ball = [&](const State& u, const std::string& kind, std::size_t index) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = d.components[i];
            try {
                const double w = evaluate(p.component(i).w, u);
                const double excess = interval_excess(w, c.w_lo, c.w_hi);
                w_track[i].observe(w, excess, witness(kind, seed, index, w, w < c.w_lo ? c.w_lo : c.w_hi));
            } catch (const DomainError& e) {
                w_track[i].observe_failure(witness(kind, seed, index, 0.0, c.w_lo, e.what()));
            }
            try {
                const double h = evaluate(p.component(i).h, u);
                const double excess = h < c.h_lower - slack(c.h_lower) ? c.h_lower - h : 0.0;
                h_track[i].observe(h, excess, witness(kind, seed, index, h, c.h_lower));
            } catch (const DomainError& e) {
                h_track[i].observe_failure(witness(kind, seed, index, 0.0, c.h_lower, e.what()));
            }
        }
    };

    visit_ball(State::zeros(p.mesh_ptr(), n), "zero_state", 0);
    const ConeSampler sampler(p.mesh_ptr(), n, rho);
    for (std::size_t k = 0; k < count; ++k) {
        const State u = sampler.sample(seed, k);
        visit_ball(u, "cone_sample", k);

        const State on_sphere = u.scaled(rho / c1_norm(u));
        try {
            const double norm = c1_norm(apply_Phi(p, on_sphere));
            const double excess = norm < phi.max - slack(phi.max) ? phi.max - norm : 0.0;
            sphere.observe(norm, excess, witness("sphere_sample", seed, k, norm, phi.max));
        } catch (const DomainError& e) {
            sphere.observe_failure(witness("sphere_sample", seed, k, 0.0, phi.max, e.what()));
        }
    }

    SampleReport r;
    r.rho = rho;
    r.seed = seed;
    r.samples = count;
    r.phi = phi;
    for (auto& t : w_track) {
        r.quantities.push_back(t.finish());
    }
    for (auto& t : h_track) {
        r.quantities.push_back(t.finish());
    }
    r.quantities.push_back(sphere.finish());
    return r;
}

SampleReport check_f_lower(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed) {
    if (count < 1) {
        throw ContractViolation("check_f_lower: sample count must be >= 1");
    }
    check_decl(p, d);
    SampleReport r;
    r.rho = d.rho;
    r.seed = seed;
    r.samples = count;

    for (std::size_t i = 0; i < p.n(); ++i) {
        Tracker t("f" + std::to_string(i + 1) + "_lower", "b", "sampled");
        auto visit = [&](const BoxSample& s, const std::string& kind, std::size_t index) {
            const double bound = eval_f_lower(d.components[i].f_lower, p.mesh().node(s.node), d.rho);
            try {
                const double f = eval_f_at(p, i, s);
                const double excess = f < bound - slack(bound) ? bound - f : 0.0;
                t.observe(f - bound, excess, witness(kind, seed, index, f, bound));
            } catch (const DomainError& e) {
                t.observe_failure(witness(kind, seed, index, 0.0, bound, e.what()));
            }
        };
        for (std::size_t a = 0; a < box_anchor_count; ++a) {
            visit(box_anchor(p, d, i, a), "box_anchor", a);
        }
        for (std::size_t k = 0; k < count; ++k) {
            visit(box_sample(p, d, i, seed, k), "box_sample", k);
        }
        r.quantities.push_back(t.finish());
    }
    return r;
}

SampleReport check_analytic(const Problem& p, const HypothesisDecl& d) {
    check_decl(p, d);
    SampleReport r;
    r.rho = d.rho;
    const Mesh& mesh = p.mesh();

    for (std::size_t i = 0; i < p.n(); ++i) {
        const std::string idx = std::to_string(i + 1);

        Tracker zeta("zeta" + idx + "_nonneg", "c", "exhaustive");
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            if (mesh.is_boundary(k)) {
                const double z = eval(p.component(i).zeta, coefficient_env(mesh.node(k)));
                zeta.observe(z, z < 0.0 ? -z : 0.0, witness("node", 0, k, z, 0.0));
            }
        }
        r.quantities.push_back(zeta.finish());

        Tracker gamma("gamma" + idx + "_nonneg", "c", "exhaustive");
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            const double g = p.gamma(i)[static_cast<Eigen::Index>(k)];
            gamma.observe(g, g < -1e-12 ? -g : 0.0, witness("node", 0, k, g, 0.0));
        }
        r.quantities.push_back(gamma.finish());

        Tracker fl("f" + idx + "_lower_nonneg", "b", "exhaustive");
        const ScalarField values = f_lower_field(mesh, d, i);
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            const double v = values[static_cast<Eigen::Index>(k)];
            fl.observe(v, v < 0.0 ? -v : 0.0, witness("node", 0, k, v, 0.0));
        }
        r.quantities.push_back(fl.finish());
    }

    r.phi = compute_phi(p, d);
    QuantityReport q;
    q.name = "phi";
    q.condition = "d";
    q.method = "exhaustive";
    q.evaluated = r.phi.per_component.size();
    q.min = *std::min_element(r.phi.per_component.begin(), r.phi.per_component.end());
    q.max = r.phi.max;
    if (r.phi.supported()) {
        q.verdict = Verdict::supported;
    } else {
        q.verdict = Verdict::violated;
        q.violations = 1;
        q.worst = witness("node", 0, 0, r.phi.max, 0.0, "no component has a positive margin");
    }
    r.quantities.push_back(q);
    return r;
}

SampleReport check_all(const Problem& p, const HypothesisDecl& d, std::size_t count, std::uint64_t seed) {
    SampleReport r = check_analytic(p, d);
    r.seed = seed;
    r.merge(check_bounds(p, d, count, seed));
    r.merge(check_f_lower(p, d, count, seed));
    return r;
}

} // namespace coneray
