#include "coneray/cli.hpp"

#include "coneray/config.hpp"
#include "coneray/eigensolver.hpp"
#include "coneray/error.hpp"
#include "coneray/hypotheses.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace coneray {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Shortest decimal that round-trips.
std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) {
        throw Error("cannot write " + path.string());
    }
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory " + dir + ": " + ec.message());
    }
    return fs::path(dir);
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run metadata lives apart from the data files so those stay byte-reproducible.
void write_meta(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                const std::string& digest) {
    json meta = {{"command", command}, {"args", args}, {"digest", digest}, {"timestamp", utc_timestamp()},
                 {"version", kVersion}};
    write_file(dir / "meta.json", meta.dump(2) + "\n");
}

std::string field_csv(const State& u, std::size_t i) {
    const Mesh& mesh = u.mesh();
    const ScalarField& v = u.component(i);
    const Gradient& g = u.gradient(i);
    std::string s = "x1,x2,value,du_dx1,du_dx2\n";
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto e = static_cast<Eigen::Index>(k);
        const Point& x = mesh.node(k);
        s += fmt(x[0]) + "," + fmt(x[1]) + "," + fmt(v[e]) + "," + fmt(g.dx1[e]) + "," + fmt(g.dx2[e]) + "\n";
    }
    return s;
}

json pair_json(const EigenPair& p, const std::string& digest) {
    json j = {{"digest", digest},
              {"rho", p.rho},
              {"lambda", p.lambda},
              {"residual", p.residual},
              {"iterations", p.iterations},
              {"clip", p.clip},
              {"status", std::string(status_name(p.status))}};
    if (!p.message.empty()) {
        j["message"] = p.message;
    }
    return j;
}

struct SolverFlags {
    double tol = 1e-8;
    int max_iter = 500;
    double relax = 1.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--tol", tol, "Stopping tolerance on the step, relative to rho")->capture_default_str();
        cmd->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
        cmd->add_option("--relax", relax, "Relaxation factor in (0, 1]")->capture_default_str();
    }

    SolverOptions options() const {
        SolverOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.relaxation = relax;
        o.check();
        return o;
    }
};

int cmd_solve(const std::string& source, double rho, const SolverFlags& flags, const std::string& out_dir,
              const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw ContractViolation("--rho must be positive and finite, got " + fmt(rho));
    }
    const SolverOptions opts = flags.options();
    const ProblemConfig cfg = load_config(source);
    const Problem p = build_problem(cfg);

    EigenPair pair;
    try {
        pair = solve_eigenpair(p, rho, opts);
    } catch (const DomainError& e) {
        err << "error: evaluation failed during the iteration: " << e.what() << "\n";
        return exit_no_convergence;
    }

    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "eigenpair.json", pair_json(pair, cfg.digest).dump(2) + "\n");
    for (std::size_t i = 0; i < p.n(); ++i) {
        write_file(dir / ("u" + std::to_string(i + 1) + ".csv"), field_csv(pair.u, i));
    }
    write_meta(dir, "solve", args, cfg.digest);

    out << "rho " << fmt(rho) << "  lambda " << fmt(pair.lambda) << "  residual " << fmt(pair.residual)
        << "  iterations " << pair.iterations << "  status " << status_name(pair.status) << "\n";
    if (!pair.ok()) {
        err << "error: " << pair.message << "\n";
        return exit_no_convergence;
    }
    return exit_ok;
}

std::vector<double> rho_grid(double lo, double hi, int points, bool log_spacing) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
        throw ContractViolation("need 0 < --rho-min < --rho-max");
    }
    if (points < 1) {
        throw ContractViolation("--points must be >= 1");
    }
    std::vector<double> rhos(static_cast<std::size_t>(points));
    if (points == 1) {
        rhos[0] = lo;
        return rhos;
    }
    for (int k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / (points - 1);
        rhos[static_cast<std::size_t>(k)] =
            log_spacing ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
    }
    rhos.back() = hi;
    return rhos;
}

int cmd_sweep(const std::string& source, double lo, double hi, int points, bool log_spacing, bool warm,
              const SolverFlags& flags, const std::string& out_dir, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err) {
    const std::vector<double> rhos = rho_grid(lo, hi, points, log_spacing);
    const SolverOptions opts = flags.options();
    const ProblemConfig cfg = load_config(source);
    const Problem p = build_problem(cfg);

    std::vector<EigenPair> pairs;
    try {
        pairs = sweep_rho(p, rhos, opts, warm);
    } catch (const DomainError& e) {
        err << "error: evaluation failed during the sweep: " << e.what() << "\n";
        return exit_no_convergence;
    }

    std::string csv = "rho,lambda,residual,iterations,status\n";
    json records = json::array();
    std::size_t ok = 0;
    for (const auto& pair : pairs) {
        csv += fmt(pair.rho) + "," + fmt(pair.lambda) + "," + fmt(pair.residual) + "," +
               std::to_string(pair.iterations) + "," + std::string(status_name(pair.status)) + "\n";
        records.push_back(pair_json(pair, cfg.digest));
        ok += pair.ok() ? 1 : 0;
        out << "rho " << fmt(pair.rho) << "  lambda " << fmt(pair.lambda) << "  status "
            << status_name(pair.status) << "\n";
    }
    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "branch.csv", csv);
    write_file(dir / "branch.json", json{{"digest", cfg.digest}, {"records", records}}.dump(2) + "\n");
    write_meta(dir, "sweep", args, cfg.digest);

    if (ok == 0) {
        err << "error: no point of the sweep converged\n";
        return exit_no_convergence;
    }
    if (ok < pairs.size()) {
        err << "warning: " << pairs.size() - ok << " of " << pairs.size() << " points failed\n";
    }
    return exit_ok;
}

json quantity_json(const QuantityReport& q) {
    json j = {{"name", q.name},         {"condition", q.condition}, {"method", q.method},
              {"evaluated", q.evaluated}, {"min", q.min},           {"max", q.max},
              {"violations", q.violations}, {"verdict", std::string(verdict_name(q.verdict))}};
    if (q.worst) {
        const Witness& w = *q.worst;
        j["witness"] = {{"kind", w.kind}, {"seed", w.seed}, {"index", w.index}, {"value", w.value},
                        {"bound", w.bound}};
        if (!w.detail.empty()) {
            j["witness"]["detail"] = w.detail;
        }
    }
    return j;
}

int cmd_check(const std::string& source, double rho, long long samples, unsigned long long seed,
              const std::string& out_dir, const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw ContractViolation("--rho must be positive and finite, got " + fmt(rho));
    }
    if (samples < 1) {
        throw ContractViolation("--samples must be >= 1");
    }
    const ProblemConfig cfg = load_config(source);
    if (!cfg.hypotheses) {
        throw ConfigError("config has no hypotheses section; check needs declared bounds");
    }
    const Problem p = build_problem(cfg);
    const HypothesisDecl d = cfg.hypotheses->instantiate(rho);
    check_decl(p, d);
    const SampleReport r = check_all(p, d, static_cast<std::size_t>(samples), seed);

    json conditions = json::object();
    for (const char* c : {"a", "b", "c", "d"}) {
        conditions[c] = std::string(verdict_name(r.condition(c)));
    }
    json quantities = json::array();
    for (const auto& q : r.quantities) {
        quantities.push_back(quantity_json(q));
    }
    json report = {
        {"digest", cfg.digest},
        {"rho", rho},
        {"seed", seed},
        {"samples", samples},
        {"note", "sampled verdicts are falsification attempts on seeded samples, not proofs; "
                 "exhaustive verdicts cover every mesh node"},
        {"conditions", conditions},
        {"phi", {{"per_component", r.phi.per_component}, {"max", r.phi.max},
                 {"component", r.phi.best_component + 1}}},
        {"quantities", quantities},
    };
    const fs::path dir = prepare_dir(out_dir);
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_meta(dir, "check", args, cfg.digest);

    for (const auto& q : r.quantities) {
        out << q.name << " (" << q.condition << ", " << q.method << "): " << verdict_name(q.verdict) << "  min "
            << fmt(q.min) << "  max " << fmt(q.max) << "\n";
    }
    out << "phi max " << fmt(r.phi.max) << " (component " << r.phi.best_component + 1 << ")\n";
    if (r.any_violated()) {
        err << "hypotheses violated; witnesses in " << (dir / "report.json").string() << "\n";
        return exit_violated;
    }
    return exit_ok;
}

int cmd_example(const std::string& name, const std::string& out_file, std::ostream& out) {
    const json doc = preset_config(name);
    parse_config(doc);
    const std::string text = doc.dump(2) + "\n";
    if (out_file.empty() || out_file == "-") {
        out << text;
    } else {
        write_file(out_file, text);
    }
    return exit_ok;
}

} // namespace

unsigned long long default_seed() {
    if (const char* env = std::getenv("CONE_RAY_SEED")) {
        unsigned long long v = 0;
        const std::string_view s(env);
        auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && end == s.data() + s.size() && !s.empty()) {
            return v;
        }
    }
    return 42;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Positive eigenpairs of elliptic systems with functional boundary conditions", "coneray"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config;
    std::string out_dir = "out";
    SolverFlags flags;

    double rho = 1.0;
    auto* solve = app.add_subcommand("solve", "Solve for one eigenpair on the sphere of radius rho");
    solve->add_option("config", config, "Config file or preset:NAME")->required();
    solve->add_option("--rho", rho, "Sphere radius in the C1 norm")->required();
    flags.add_to(solve);
    solve->add_option("--out", out_dir, "Output directory")->capture_default_str();

    double rho_min = 0.0;
    double rho_max = 0.0;
    int points = 8;
    bool log_spacing = false;
    bool no_warm = false;
    auto* sweep = app.add_subcommand("sweep", "Follow the eigenpair branch over a range of rho");
    sweep->add_option("config", config, "Config file or preset:NAME")->required();
    sweep->add_option("--rho-min", rho_min, "Smallest radius")->required();
    sweep->add_option("--rho-max", rho_max, "Largest radius")->required();
    sweep->add_option("--points", points, "Number of radii")->capture_default_str();
    sweep->add_flag("--log-spacing", log_spacing, "Space radii geometrically");
    sweep->add_flag("--no-warm-start", no_warm, "Solve every radius from the constant start, in parallel");
    flags.add_to(sweep);
    sweep->add_option("--out", out_dir, "Output directory")->capture_default_str();

    double check_rho = 1.0;
    long long samples = 1000;
    unsigned long long seed = default_seed();
    auto* check = app.add_subcommand("check", "Test the declared hypotheses at one rho");
    check->add_option("config", config, "Config file or preset:NAME")->required();
    check->add_option("--rho", check_rho, "Sphere radius")->capture_default_str();
    check->add_option("--samples", samples, "Samples per sampled quantity")->capture_default_str();
    check->add_option("--seed", seed, "Sampling seed (default: $CONE_RAY_SEED or 42)")->capture_default_str();
    check->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string name;
    std::string emit = "config";
    std::string emit_out;
    auto* example = app.add_subcommand("example", "Print a built-in problem config");
    example->add_option("--name", name, "kirchhoff-disk | linear-disk | linear-square")->required();
    example->add_option("--emit", emit, "What to emit")->check(CLI::IsMember({"config"}))->capture_default_str();
    example->add_option("--out", emit_out, "Write to this file instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_config;
    }

    try {
        if (*solve) {
            return cmd_solve(config, rho, flags, out_dir, args, out, err);
        }
        if (*sweep) {
            return cmd_sweep(config, rho_min, rho_max, points, log_spacing, !no_warm, flags, out_dir, args, out,
                             err);
        }
        if (*check) {
            return cmd_check(config, check_rho, samples, seed, out_dir, args, out, err);
        }
        return cmd_example(name, emit_out, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const ContractViolation& e) {
        err << "precondition: " << e.what() << "\n";
    } catch (const SingularOperator& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    }
    return exit_config;
}

} // namespace coneray
