// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "coneray/cli.hpp"
#include "coneray/config.hpp"
#include "coneray/eigensolver.hpp"
#include "coneray/elliptic.hpp"
#include "coneray/hypotheses.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace coneray;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const Mesh> disk(int n_r, int n_theta) {
    return std::make_shared<const Mesh>(Mesh::disk(1.0, n_r, n_theta));
}

std::shared_ptr<const Mesh> rect(double lx, double ly, int nx, int ny) {
    return std::make_shared<const Mesh>(Mesh::rectangle(lx, ly, nx, ny));
}

double max_abs(const ScalarField& v) { return v.cwiseAbs().maxCoeff(); }

ScalarField torsion(const Mesh& m) {
    ScalarField v(static_cast<Eigen::Index>(m.size()));
    for (std::size_t k = 0; k < m.size(); ++k) {
        const auto& x = m.node(k);
        v[static_cast<Eigen::Index>(k)] = (1 - x[0] * x[0] - x[1] * x[1]) / 4;
    }
    return v;
}

DiscreteOperator dirichlet_laplacian(std::shared_ptr<const Mesh> m) {
    return DiscreteOperator::assemble(EllipticOperatorSpec::laplacian(), BoundaryOperatorSpec::dirichlet(),
                                      std::move(m));
}

Problem linear(std::shared_ptr<const Mesh> m) {
    ComponentSpec c;
    c.f = parse("u1");
    return Problem::build(std::move(m), {c});
}

struct Kirchhoff {
    ProblemConfig cfg;
    Problem problem;
};

Kirchhoff kirchhoff() {
    ProblemConfig cfg = load_config("preset:kirchhoff-disk");
    Problem p = build_problem(cfg);
    return {std::move(cfg), std::move(p)};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---------------------------------------------------------------------------

Outcome k_of_one() {
    const auto t0 = std::chrono::steady_clock::now();
    double err[2];
    int k = 0;
    for (auto m : {disk(64, 128), disk(128, 256)}) {
        const auto op = dirichlet_laplacian(m);
        err[k++] = max_abs(op.solve_K(ScalarField::Ones(m->size())) - torsion(*m));
    }
    const double t = seconds_since(t0);
    const double ratio = err[0] / err[1];
    return {err[0] <= 1e-3 && ratio >= 3.5 && t < 5.0,
            fmt("err(64x128) %.3e <= 1e-3, err(128x256) %.3e, reduction %.2f >= 3.5, %.2f s < 5 s", err[0], err[1],
                ratio, t)};
}

Outcome sup_norm_and_lift() {
    const auto m = disk(64, 128);
    const auto op = dirichlet_laplacian(m);
    const double sup = max_abs(op.solve_K(ScalarField::Ones(m->size())));
    const double lift = max_abs(op.solve_lift(Expr::literal(1)).array() - 1.0);
    return {std::abs(sup - 0.25) <= 1e-3 && lift <= 1e-10,
            fmt("||K(1)|| = %.6f (0.25 +- 1e-3), max |gamma - 1| = %.2e <= 1e-10", sup, lift)};
}

Outcome phi_formula(const Kirchhoff& s) {
    bool pass = true;
    std::string detail;
    for (double rho : {0.5, 1.0, 2.0}) {
        const double phi = compute_phi(s.problem, s.cfg.hypotheses->instantiate(rho)).per_component[0];
        const double expected = oracle::example_phi1(rho);
        const double e = rel(phi, expected);
        pass = pass && e <= 1e-2;
        detail += fmt("%srho %.1f: %.6f vs %.6f (rel %.1e)", detail.empty() ? "" : ", ", rho, phi, expected, e);
    }
    return {pass, detail + ", tol 1e-2"};
}

Outcome w_bounds(const Kirchhoff& s) {
    const SampleReport r = check_bounds(s.problem, s.cfg.hypotheses->instantiate(1.0), 1000, 42);
    const QuantityReport* w[2] = {nullptr, nullptr};
    for (const auto& q : r.quantities) {
        if (q.name == "w1") {
            w[0] = &q;
        } else if (q.name == "w2") {
            w[1] = &q;
        }
    }
    const double lo1 = oracle::example_w1_lower(1.0);
    const double lo2 = oracle::example_w2_lower(1.0);
    const bool pass = w[0]->min >= lo1 && w[0]->max <= 1.0 && w[1]->min >= lo2 && w[1]->max <= 1.0 &&
                      w[0]->violations == 0 && w[1]->violations == 0;
    return {pass, fmt("w1 in [%.5f, %.5f] within [%.5f, 1], w2 in [%.3e, %.5f] within [%.3e, 1], violations %zu",
                      w[0]->min, w[0]->max, lo1, w[1]->min, w[1]->max, lo2, w[0]->violations + w[1]->violations)};
}

Outcome linear_oracles() {
    const double j01 = oracle::bessel_j0_first_zero();
    const EigenPair d = solve_eigenpair(linear(disk(64, 128)), 1.0);
    const EigenPair q = solve_eigenpair(linear(rect(pi, pi, 64, 64)), 1.0);
    const double ed = rel(d.lambda, j01 * j01);
    const double eq = rel(q.lambda, 2.0);

    SolverOptions tight;
    tight.tol = 1e-11;
    tight.max_iter = 5000;
    double worst_dense = 0.0;
    for (auto m : {disk(16, 32), rect(pi, pi, 32, 32)}) {
        const Problem p = linear(m);
        const EigenPair e = solve_eigenpair(p, 1.0, tight);
        worst_dense = std::max(worst_dense, e.ok() ? rel(e.lambda, oracle::dense_smallest_eigenvalue(p.op(0))) : 1.0);
    }
    return {d.ok() && q.ok() && ed <= 1e-2 && eq <= 1e-2 && worst_dense <= 1e-6,
            fmt("disk %.4f vs %.4f (rel %.1e), square %.4f vs 2 (rel %.1e), tol 1e-2; dense match %.1e <= 1e-6",
                d.lambda, j01 * j01, ed, q.lambda, eq, worst_dense)};
}

Outcome existence(const Kirchhoff& s, double& worst_clip) {
    std::vector<double> rhos(8);
    for (int k = 0; k < 8; ++k) {
        rhos[static_cast<std::size_t>(k)] = 0.25 + k * (2.0 - 0.25) / 7;
    }
    std::size_t plain_ok = 0;
    for (const auto& e : sweep_rho(s.problem, rhos)) {
        plain_ok += e.ok() ? 1 : 0;
    }
    SolverOptions relaxed;
    relaxed.relaxation = 0.5;
    const auto t0 = std::chrono::steady_clock::now();
    const auto pairs = sweep_rho(s.problem, rhos, relaxed);
    const double t = seconds_since(t0);

    bool pass = pairs.size() == 8 && t < 60.0;
    double norm_err = 0.0;
    double min_value = INFINITY;
    double res = 0.0;
    double res_oracle = 0.0;
    for (const auto& e : pairs) {
        pass = pass && e.ok();
        norm_err = std::max(norm_err, std::abs(c1_norm(e.u) - e.rho));
        min_value = std::min(min_value, e.u.min_value());
        res = std::max(res, e.residual / e.rho);
        res_oracle = std::max(res_oracle, oracle::example_residual(s.problem.op(0), e.u, e.lambda) / e.rho);
        worst_clip = std::max(worst_clip, e.clip / e.rho);
    }
    pass = pass && norm_err <= 1e-8 && min_value >= 0.0 && res <= 1e-6 && res_oracle <= 1e-6;
    return {pass, fmt("omega 0.5: %zu eigenpairs, lambda %.4f..%.4f, max | ||u|| - rho | %.1e <= 1e-8, min u %.2e >= 0, "
                      "residual/rho %.1e (independent %.1e) <= 1e-6, %.1f s < 60 s; omega 1: %zu/8 certified",
                      pairs.size(), pairs.front().lambda, pairs.back().lambda, norm_err, min_value, res, res_oracle,
                      t, plain_ok)};
}

Outcome cone_invariance(const Kirchhoff& s, double worst_clip) {
    const auto m = disk(32, 64);
    EllipticOperatorSpec shifted = EllipticOperatorSpec::laplacian();
    shifted.a0 = Expr::literal(1);
    const std::vector<std::pair<EllipticOperatorSpec, BoundaryOperatorSpec>> kinds{
        {EllipticOperatorSpec::laplacian(), BoundaryOperatorSpec::dirichlet()},
        {shifted, BoundaryOperatorSpec::neumann()},
        {EllipticOperatorSpec::laplacian(), BoundaryOperatorSpec::oblique(parse("1 + x1^2"))},
    };
    double floor_k = 0.0;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const auto& [L, B] : kinds) {
        const auto op = DiscreteOperator::assemble(L, B, m);
        for (int k = 0; k < 100; ++k) {
            ScalarField g(static_cast<Eigen::Index>(m->size()));
            for (auto& x : g) {
                x = U(rng) < 0.2 ? 10 * U(rng) : U(rng) * U(rng);
            }
            floor_k = std::min(floor_k, op.solve_K(g).minCoeff());
        }
    }
    double floor_phi = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
        floor_phi = std::min(floor_phi, apply_Phi(s.problem, cone_ball_sample(s.problem.mesh_ptr(), 2, 1.0, 42, k))
                                            .min_value());
    }
    return {floor_k >= -1e-12 && floor_phi >= -1e-12 && worst_clip <= 1e-8,
            fmt("min Kg %.2e, min Phi(u) %.2e (floor -1e-12), clip/rho %.1e <= 1e-8", floor_k, floor_phi,
                worst_clip)};
}

Outcome homogeneity() {
    const Problem p = build_problem(load_config("preset:linear-disk"));
    std::vector<double> lambdas;
    bool ok = true;
    for (double rho : {0.5, 1.0, 2.0}) {
        const EigenPair e = solve_eigenpair(p, rho);
        ok = ok && e.ok();
        lambdas.push_back(e.lambda);
    }
    const double spread = std::max(rel(lambdas[1], lambdas[0]), rel(lambdas[2], lambdas[0]));
    return {ok && spread <= 1e-8,
            fmt("lambda %.12f / %.12f / %.12f, spread %.1e <= 1e-8", lambdas[0], lambdas[1], lambdas[2], spread)};
}

Outcome parser() {
    using Op = Expr::BinaryOp;
    struct Binary {
        const char* text;
        Op op;
        int prec;
        bool right;
    };
    const Binary ops[] = {{"+", Op::add, 1, false},
                          {"-", Op::sub, 1, false},
                          {"*", Op::mul, 2, false},
                          {"/", Op::div, 2, false},
                          {"^", Op::pow, 4, true}};
    const auto v = [](const char* n) { return Expr::variable(n); };
    int table = 0;
    int table_ok = 0;
    for (const auto& o1 : ops) {
        for (const auto& o2 : ops) {
            const bool left = o1.prec > o2.prec || (o1.prec == o2.prec && !o1.right);
            const Expr expected = left ? Expr::binary(o2.op, Expr::binary(o1.op, v("a"), v("b")), v("c"))
                                       : Expr::binary(o1.op, v("a"), Expr::binary(o2.op, v("b"), v("c")));
            ++table;
            table_ok += parse(std::string("a") + o1.text + "b" + o2.text + "c") == expected ? 1 : 0;
        }
    }

    std::mt19937_64 rng(99);
    const auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    std::function<Expr(int)> make = [&](int depth) -> Expr {
        if (depth == 0 || pick(4) == 0) {
            switch (pick(3)) {
            case 0: return v("x1");
            case 1: return v("x2");
            default: return Expr::literal(std::uniform_real_distribution<double>(0.0, 10.0)(rng));
            }
        }
        switch (pick(6)) {
        case 0: return Expr::binary(ops[pick(5)].op, make(depth - 1), make(depth - 1));
        case 1: return Expr::negate(make(depth - 1));
        case 2: return Expr::call(Expr::Function::min, {make(depth - 1), make(depth - 1)});
        case 3: return Expr::call(Expr::Function::exp, {make(depth - 1)});
        case 4: return Expr::binary(Op::pow, make(depth - 1), Expr::literal(2));
        default: return Expr::call(Expr::Function::abs, {make(depth - 1)});
        }
    };
    int trips_ok = 0;
    for (int k = 0; k < 1000; ++k) {
        const Expr e = make(6);
        const std::string text = to_string(e);
        const Expr back = parse(text);
        trips_ok += back == e && to_string(back) == text ? 1 : 0;
    }
    return {table_ok == table && trips_ok == 1000,
            fmt("precedence table %d/%d, round trips %d/1000", table_ok, table, trips_ok)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "coneray_acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    int codes = 0;
    for (const char* run : {"1", "2"}) {
        const fs::path dir = root / run;
        codes |= run_cli({"check", "preset:kirchhoff-disk", "--rho", "1", "--samples", "200", "--seed", "42", "--out",
                          (dir / "check").string()},
                         sink, sink);
        codes |= run_cli({"sweep", "preset:kirchhoff-disk", "--rho-min", "0.25", "--rho-max", "2", "--points", "4",
                          "--relax", "0.5", "--out", (dir / "sweep").string()},
                         sink, sink);
    }
    int same = 0;
    const char* files[] = {"check/report.json", "sweep/branch.csv", "sweep/branch.json"};
    for (const char* f : files) {
        const std::string a = slurp(root / "1" / f);
        same += !a.empty() && a == slurp(root / "2" / f) ? 1 : 0;
    }
    fs::remove_all(root);
    return {codes == 0 && same == 3, fmt("exit codes %s, identical data files %d/3", codes == 0 ? "0" : "nonzero", same)};
}

} // namespace

int main() {
    const Kirchhoff s = kirchhoff();
    double worst_clip = 0.0;
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"K(1) on the unit disk", k_of_one},
        {"sup norm of K(1) and boundary lift", sup_norm_and_lift},
        {"phi_1 closed form", [&] { return phi_formula(s); }},
        {"w bounds over 1000 samples", [&] { return w_bounds(s); }},
        {"linear eigenvalue oracles", linear_oracles},
        {"existence sweep of the example", [&] { return existence(s, worst_clip); }},
        {"cone invariance", [&] { return cone_invariance(s, worst_clip); }},
        {"homogeneity of the linear preset", homogeneity},
        {"expression parser", parser},
        {"determinism of check and sweep", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
