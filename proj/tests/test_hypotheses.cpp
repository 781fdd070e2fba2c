#include <doctest.h>

#include "coneray/config.hpp"
#include "coneray/error.hpp"
#include "coneray/hypotheses.hpp"
#include "fields.hpp"

#include <cmath>
#include <numbers>

using namespace coneray;
constexpr double pi = std::numbers::pi;

namespace {

nlohmann::json kirchhoff(int n_r = 32) {
    nlohmann::json doc = preset_config("kirchhoff-disk");
    doc["mesh"]["n_r"] = n_r;
    doc["mesh"]["n_theta"] = 2 * n_r;
    return doc;
}

struct Setup {
    ProblemConfig cfg;
    Problem problem;
    HypothesisDecl decl;
};

Setup setup(const nlohmann::json& doc, double rho) {
    ProblemConfig cfg = parse_config(doc);
    Problem p = build_problem(cfg);
    HypothesisDecl d = cfg.hypotheses->instantiate(rho);
    return {std::move(cfg), std::move(p), std::move(d)};
}

const QuantityReport& quantity(const SampleReport& r, const std::string& name) {
    for (const auto& q : r.quantities) {
        if (q.name == name) {
            return q;
        }
    }
    throw std::runtime_error("no quantity " + name);
}

bool same(const State& a, const State& b) {
    for (std::size_t i = 0; i < a.n(); ++i) {
        if (a.component(i) != b.component(i)) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("phi of the example matches the closed form") {
    for (double rho : {0.5, 1.0, 2.0}) {
        const Setup s = setup(kirchhoff(), rho);
        const PhiReport phi = compute_phi(s.problem, s.decl);
        const double expected = 1.0 / (8 * pi * rho * rho + 4 * std::exp(rho));
        INFO("rho = ", rho);
        CHECK(std::abs(phi.per_component[0] - expected) <= 1e-2 * expected);
        CHECK(phi.per_component[1] == 0.0);
        CHECK(phi.best_component == 0);
        CHECK(phi.supported());
    }
    CHECK(std::abs(1.0 / (8 * pi + 4 * std::exp(1.0)) - 0.02777) <= 1e-5);
}

TEST_CASE("phi without positivity violates condition d") {
    nlohmann::json doc = kirchhoff(16);
    doc["hypotheses"]["components"][0]["f_lower"] = 0;
    const Setup s = setup(doc, 1.0);
    const PhiReport phi = compute_phi(s.problem, s.decl);
    CHECK(phi.max == 0.0);
    CHECK_FALSE(phi.supported());
    const SampleReport r = check_analytic(s.problem, s.decl);
    CHECK(r.condition("d") == Verdict::violated);
}

TEST_CASE("phi from the boundary lift alone") {
    nlohmann::json doc = kirchhoff(64);
    doc["hypotheses"]["components"][0]["f_lower"] = 0;
    doc["hypotheses"]["components"][0]["h_lower"] = 1;
    const Setup s = setup(doc, 1.0);
    const PhiReport phi = compute_phi(s.problem, s.decl);
    CHECK(std::abs(phi.per_component[0] - 1.0) <= 1e-10);
}

TEST_CASE("phi is monotone in f_lower") {
    const Setup base = setup(kirchhoff(16), 1.0);
    const std::vector<std::string> lowers{"0", "0.1*x1^2", "0.1*x1^2 + 0.05", "0.1*x1^2 + 0.05 + x2^2",
                                          "1 + x1^2 + x2^2"};
    double prev = -1.0;
    for (const auto& f : lowers) {
        HypothesisDecl d = base.decl;
        d.components[1].f_lower = parse(f);
        const double phi2 = compute_phi(base.problem, d).per_component[1];
        INFO(f);
        CHECK(phi2 >= prev);
        prev = phi2;
    }
}

TEST_CASE("declarations are validated") {
    const Setup s = setup(kirchhoff(8), 1.0);
    HypothesisDecl d = s.decl;
    d.components[0].w_lo = 2.0;
    CHECK_THROWS_AS(check_decl(s.problem, d), ConfigError);
    d = s.decl;
    d.components[1].h_lower = -0.1;
    CHECK_THROWS_AS(check_decl(s.problem, d), ConfigError);
    d = s.decl;
    d.components[1].f_lower = parse("x1");
    CHECK_THROWS_AS(check_decl(s.problem, d), ConfigError);
    d = s.decl;
    d.components.pop_back();
    CHECK_THROWS_AS(check_decl(s.problem, d), ConfigError);
    d = s.decl;
    d.components[0].f_lower = parse("u1");
    CHECK_THROWS_AS(check_decl(s.problem, d), ConfigError);

    HypothesisTemplate t = *s.cfg.hypotheses;
    t.components[0].w_hi = parse("log(rho - 1)");
    CHECK_THROWS_AS(t.instantiate(1.0), ConfigError);
    CHECK_NOTHROW(t.instantiate(3.0));
}

TEST_CASE("cone-ball samples") {
    auto m = testing::disk(16, 32);
    const double rho = 1.5;
    const auto a = sample_cone_ball(m, 2, rho, 1000, 42);
    const auto b = sample_cone_ball(m, 2, rho, 1000, 42);
    REQUIRE(a.size() == 1000);
    double lo = INFINITY;
    double hi = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(same(a[k], b[k]));
        CHECK(in_cone(a[k]));
        const double n = c1_norm(a[k]);
        CHECK(n > 0.0);
        CHECK(n <= rho + 1e-12);
        lo = std::min(lo, n);
        hi = std::max(hi, n);
        const State on_sphere = a[k].scaled(rho / n);
        CHECK(std::abs(c1_norm(on_sphere) - rho) <= 1e-12 * rho);
        CHECK(in_cone(on_sphere));
    }
    CHECK(lo < 0.05 * rho);
    CHECK(hi > 0.95 * rho);
    CHECK(same(a[123], cone_ball_sample(m, 2, rho, 42, 123)));
    CHECK_FALSE(same(a[0], sample_cone_ball(m, 2, rho, 1, 43)[0]));
    CHECK_FALSE(same(a[0], a[1]));
}

TEST_CASE("samples on the rectangle") {
    auto m = testing::rect(2, 1, 20, 10);
    for (const auto& u : sample_cone_ball(m, 3, 0.7, 200, 5)) {
        CHECK(in_cone(u));
        CHECK(c1_norm(u) <= 0.7 + 1e-12);
    }
}

TEST_CASE("w bounds of the example") {
    const Setup s = setup(kirchhoff(32), 1.0);
    const SampleReport r = check_bounds(s.problem, s.decl, 1000, 42);
    const auto& w1 = quantity(r, "w1");
    const auto& w2 = quantity(r, "w2");
    CHECK(w1.evaluated == 1001);
    CHECK(w1.violations == 0);
    CHECK(w2.violations == 0);
    CHECK(w1.min >= 1.0 / (2 * pi + std::exp(1.0)));
    CHECK(w1.max <= 1.0);
    CHECK(w2.min >= std::exp(-4 * pi));
    CHECK(w2.max <= 1.0);
    CHECK(w1.method == "sampled");
    CHECK(r.condition("a") == Verdict::supported);
    CHECK(r.condition("c") == Verdict::supported);
    CHECK(r.condition("d") == Verdict::supported);
    CHECK(quantity(r, "h1").min >= 0.0);
    CHECK(quantity(r, "phi_sphere_bound").min >= r.phi.max);
}

TEST_CASE("zero state violates a low upper bound for w1") {
    nlohmann::json doc = kirchhoff(16);
    doc["hypotheses"]["components"][0]["w_hi"] = 0.5;
    const Setup s = setup(doc, 1.0);
    const SampleReport r = check_bounds(s.problem, s.decl, 50, 42);
    const auto& w1 = quantity(r, "w1");
    CHECK(w1.verdict == Verdict::violated);
    REQUIRE(w1.worst);
    CHECK(w1.worst->kind == "zero_state");
    CHECK(w1.worst->value == 1.0);
    CHECK(w1.worst->bound == 0.5);
    CHECK(r.condition("a") == Verdict::violated);
    CHECK(r.any_violated());
}

TEST_CASE("f lower bounds of the example") {
    const Setup s = setup(kirchhoff(16), 1.0);
    const SampleReport r = check_f_lower(s.problem, s.decl, 1000, 42);
    CHECK(quantity(r, "f1_lower").verdict == Verdict::supported);
    CHECK(quantity(r, "f2_lower").verdict == Verdict::supported);
    CHECK(quantity(r, "f1_lower").evaluated == 1000 + box_anchor_count);
    CHECK(quantity(r, "f1_lower").min >= 0.0);
    CHECK(r.condition("b") == Verdict::supported);
}

TEST_CASE("box samples respect the box") {
    const Setup s = setup(kirchhoff(8), 1.5);
    for (std::size_t k = 0; k < 200; ++k) {
        const BoxSample b = box_sample(s.problem, s.decl, 1, 9, k);
        CHECK(b.node < s.problem.mesh().size());
        for (double u : b.u) {
            CHECK(u >= 0.0);
            CHECK(u <= 1.5);
        }
        for (double v : b.du) {
            CHECK(std::abs(v) <= 1.5);
        }
        CHECK(b.w >= s.decl.components[1].w_lo);
        CHECK(b.w <= s.decl.components[1].w_hi);
    }
    const BoxSample top = box_anchor(s.problem, s.decl, 0, 3);
    CHECK(top.u == std::vector<double>{1.5, 1.5});
    CHECK(top.w == s.decl.components[0].w_hi);
    CHECK(eval_f_at(s.problem, 0, box_anchor(s.problem, s.decl, 0, 0)) == s.decl.components[0].w_lo);
}

TEST_CASE("a negative nonlinearity is caught at the zero anchor") {
    nlohmann::json doc = kirchhoff(8);
    doc["components"][0]["f"] = "u1 - 1";
    doc["components"][0]["w"] = 1;
    doc["hypotheses"]["components"][0]["f_lower"] = 0;
    const Setup s = setup(doc, 2.0);
    const SampleReport r = check_f_lower(s.problem, s.decl, 100, 42);
    const auto& q = quantity(r, "f1_lower");
    CHECK(q.verdict == Verdict::violated);
    REQUIRE(q.worst);
    CHECK(q.worst->kind == "box_anchor");
    const BoxSample b = box_anchor(s.problem, s.decl, 0, q.worst->index);
    CHECK(b.u[0] == 0.0);
    CHECK(eval_f_at(s.problem, 0, b) == -1.0);
    CHECK(q.worst->value == -1.0);
}

TEST_CASE("witnesses re-derive standalone") {
    nlohmann::json doc = kirchhoff(16);
    doc["hypotheses"]["components"][0]["w_lo"] = 0.9;
    doc["hypotheses"]["components"][0]["f_lower"] = "2 + x1";
    doc["hypotheses"]["components"][1]["f_lower"] = "0.01";
    const Setup s = setup(doc, 1.0);
    const SampleReport r = check_all(s.problem, s.decl, 200, 77);

    const auto& w1 = quantity(r, "w1");
    REQUIRE(w1.worst);
    CHECK(w1.worst->kind == "cone_sample");
    const State u = cone_ball_sample(s.problem.mesh_ptr(), 2, 1.0, w1.worst->seed, w1.worst->index);
    CHECK(evaluate(s.problem.component(0).w, u) == w1.worst->value);
    CHECK(w1.worst->value < 0.9);

    const auto& sphere = quantity(r, "phi_sphere_bound");
    REQUIRE(sphere.worst);
    CHECK(sphere.worst->kind == "sphere_sample");
    const State v = cone_ball_sample(s.problem.mesh_ptr(), 2, 1.0, sphere.worst->seed, sphere.worst->index);
    const double norm = c1_norm(apply_Phi(s.problem, v.scaled(1.0 / c1_norm(v))));
    CHECK(norm == sphere.worst->value);
    CHECK(norm < sphere.worst->bound);

    for (const char* name : {"f1_lower", "f2_lower"}) {
        const auto& q = quantity(r, name);
        REQUIRE(q.worst);
        const std::size_t i = name[1] == '1' ? 0 : 1;
        const BoxSample b = q.worst->kind == "box_anchor"
                                ? box_anchor(s.problem, s.decl, i, q.worst->index)
                                : box_sample(s.problem, s.decl, i, q.worst->seed, q.worst->index);
        CHECK(eval_f_at(s.problem, i, b) == q.worst->value);
        CHECK(q.worst->value < q.worst->bound);
    }
}

TEST_CASE("analytic checks are exhaustive") {
    const Setup s = setup(kirchhoff(16), 1.0);
    const SampleReport r = check_analytic(s.problem, s.decl);
    const auto& gamma = quantity(r, "gamma1_nonneg");
    CHECK(gamma.method == "exhaustive");
    CHECK(gamma.evaluated == s.problem.mesh().size());
    CHECK(quantity(r, "zeta2_nonneg").evaluated == s.problem.mesh().boundary_count());
    CHECK(r.condition("c") == Verdict::supported);
    CHECK(r.condition("a") == Verdict::not_checked);

    SampleReport merged = r;
    merged.merge(check_bounds(s.problem, s.decl, 10, 1));
    CHECK(merged.condition("a") == Verdict::supported);
    CHECK(merged.quantities.size() == r.quantities.size() + 5);
}
