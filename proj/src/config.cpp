#include "coneray/config.hpp"

#include "coneray/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

namespace coneray {

using nlohmann::json;

namespace {

/// A JSON object being read, with its path for diagnostics and the set of keys consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            fail("expected an object");
        }
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

    std::string path(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    bool has(std::string_view key) const { return j_.contains(key); }

    const json& at(std::string_view key) const {
        if (!j_.contains(key)) {
            fail("missing required key '" + std::string(key) + "'");
        }
        return j_.at(std::string(key));
    }

    /// Rejects any key outside allowed.
    void only(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [key, _] : j_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string list;
                for (auto a : allowed) {
                    list += (list.empty() ? "" : ", ") + std::string(a);
                }
                fail("unknown key '" + key + "' (allowed: " + list + ")");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
};

[[noreturn]] void fail_at(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        fail_at(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        fail_at(path, "expected a finite number");
    }
    return v;
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        fail_at(path, "expected an integer");
    }
    const auto v = j.get<long long>();
    if (v < -1000000000 || v > 1000000000) {
        fail_at(path, "integer out of range");
    }
    return static_cast<int>(v);
}

/// A string is parsed; a number becomes a literal.
Expr expression(const json& j, const std::string& path) {
    if (j.is_number()) {
        return Expr::literal(number(j, path));
    }
    if (!j.is_string()) {
        fail_at(path, "expected an expression string or a number");
    }
    try {
        return parse(j.get<std::string>());
    } catch (const ParseError& e) {
        fail_at(path, e.what());
    }
}

/// Free variables of e must lie in allowed.
void restrict_vars(const Expr& e, const std::set<std::string>& allowed, const std::string& path) {
    for (const auto& v : free_vars(e)) {
        if (!allowed.contains(v)) {
            std::string list;
            for (const auto& a : allowed) {
                list += (list.empty() ? "" : ", ") + a;
            }
            fail_at(path, "unknown variable '" + v + "' (allowed: " + list + ")");
        }
    }
}

const std::set<std::string> kCoefficientVars{"x1", "x2", "pi"};
const std::set<std::string> kBoundsVars{"rho", "pi"};
const std::set<std::string> kLowerVars{"x1", "x2", "pi", "rho"};

Point point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) {
        fail_at(path, "expected [x1, x2]");
    }
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

json expr_json(const Expr& e) {
    if (e.kind() == Expr::Kind::literal) {
        return e.value();
    }
    return to_string(e);
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Mesh> read_mesh(const json& j, json& out) {
    Section s(j, "mesh");
    const json& kind = s.at("kind");
    if (!kind.is_string()) {
        fail_at(s.path("kind"), "expected \"disk\" or \"rectangle\"");
    }
    const auto k = kind.get<std::string>();
    if (k == "disk") {
        s.only({"kind", "radius", "n_r", "n_theta"});
        const double radius = s.has("radius") ? number(s.at("radius"), s.path("radius")) : 1.0;
        const int n_r = integer(s.at("n_r"), s.path("n_r"));
        const int n_theta = integer(s.at("n_theta"), s.path("n_theta"));
        out = {{"kind", "disk"}, {"radius", radius}, {"n_r", n_r}, {"n_theta", n_theta}};
        try {
            return std::make_shared<const Mesh>(Mesh::disk(radius, n_r, n_theta));
        } catch (const ConfigError& e) {
            s.fail(e.what());
        }
    }
    if (k == "rectangle") {
        s.only({"kind", "lx", "ly", "nx", "ny"});
        const double lx = number(s.at("lx"), s.path("lx"));
        const double ly = number(s.at("ly"), s.path("ly"));
        const int nx = integer(s.at("nx"), s.path("nx"));
        const int ny = integer(s.at("ny"), s.path("ny"));
        out = {{"kind", "rectangle"}, {"lx", lx}, {"ly", ly}, {"nx", nx}, {"ny", ny}};
        try {
            return std::make_shared<const Mesh>(Mesh::rectangle(lx, ly, nx, ny));
        } catch (const ConfigError& e) {
            s.fail(e.what());
        }
    }
    fail_at(s.path("kind"), "unknown mesh kind '" + k + "' (allowed: disk, rectangle)");
}

EllipticOperatorSpec read_operator(const json& j, const std::string& path, json& out) {
    Section s(j, path);
    s.only({"a", "drift", "a0", "mu0"});
    const json& a = s.at("a");
    const std::string apath = s.path("a");
    if (!a.is_array() || a.size() != 2 || !a[0].is_array() || a[0].size() != 2 || !a[1].is_array() ||
        a[1].size() != 2) {
        fail_at(apath, "expected a 2x2 array");
    }
    std::array<std::array<Expr, 2>, 2> m;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            const std::string p = apath + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
            m[r][c] = expression(a[r][c], p);
            restrict_vars(m[r][c], kCoefficientVars, p);
        }
    }
    std::array<Expr, 2> drift{Expr::literal(0.0), Expr::literal(0.0)};
    if (s.has("drift")) {
        const json& d = s.at("drift");
        if (!d.is_array() || d.size() != 2) {
            fail_at(s.path("drift"), "expected [a1, a2]");
        }
        for (int c = 0; c < 2; ++c) {
            const std::string p = s.path("drift") + "[" + std::to_string(c) + "]";
            drift[c] = expression(d[c], p);
            restrict_vars(drift[c], kCoefficientVars, p);
        }
    }
    Expr a0 = Expr::literal(0.0);
    if (s.has("a0")) {
        a0 = expression(s.at("a0"), s.path("a0"));
        restrict_vars(a0, kCoefficientVars, s.path("a0"));
    }
    const double mu0 = s.has("mu0") ? number(s.at("mu0"), s.path("mu0")) : 1.0;
    EllipticOperatorSpec L;
    try {
        L = EllipticOperatorSpec::make(m, drift, a0, mu0);
    } catch (const Error& e) {
        fail_at(path, e.what());
    }
    out = {{"a", {{expr_json(m[0][0]), expr_json(m[0][1])}, {expr_json(m[1][0]), expr_json(m[1][1])}}},
           {"drift", {expr_json(drift[0]), expr_json(drift[1])}},
           {"a0", expr_json(a0)},
           {"mu0", mu0}};
    return L;
}

BoundaryOperatorSpec read_boundary(const json& j, const std::string& path, json& out) {
    Section s(j, path);
    const json& kind = s.at("kind");
    if (!kind.is_string()) {
        fail_at(s.path("kind"), "expected \"dirichlet\", \"neumann\" or \"oblique\"");
    }
    const auto k = kind.get<std::string>();
    BoundaryOperatorSpec B;
    if (k == "dirichlet") {
        s.only({"kind"});
        B = BoundaryOperatorSpec::dirichlet();
    } else if (k == "neumann") {
        s.only({"kind", "nu"});
        B = BoundaryOperatorSpec::neumann();
    } else if (k == "oblique") {
        s.only({"kind", "b", "nu"});
        Expr b = expression(s.at("b"), s.path("b"));
        restrict_vars(b, kCoefficientVars, s.path("b"));
        B = BoundaryOperatorSpec::oblique(std::move(b));
    } else {
        fail_at(s.path("kind"), "unknown boundary kind '" + k + "' (allowed: dirichlet, neumann, oblique)");
    }
    out = {{"kind", k}};
    if (k == "oblique") {
        out["b"] = expr_json(B.b);
    }
    if (s.has("nu")) {
        const json& nu = s.at("nu");
        if (!nu.is_array() || nu.size() != 2) {
            fail_at(s.path("nu"), "expected [nu1, nu2]");
        }
        std::array<Expr, 2> v;
        for (int c = 0; c < 2; ++c) {
            const std::string p = s.path("nu") + "[" + std::to_string(c) + "]";
            v[c] = expression(nu[c], p);
            restrict_vars(v[c], kCoefficientVars, p);
        }
        out["nu"] = {expr_json(v[0]), expr_json(v[1])};
        B.nu = v;
    }
    return B;
}

FunctionalSpec read_functional(const json& j, const std::string& path, json& out) {
    if (j.is_number() || j.is_string()) {
        const Expr e = expression(j, path);
        restrict_vars(e, {"pi"}, path);
        out = expr_json(e);
        return FunctionalSpec::combine(e, {});
    }
    if (!j.is_object() || j.size() != 1) {
        fail_at(path, "expected a number, a constant expression, or an object with exactly one of "
                      "point, grad_point, integral, combine");
    }
    const auto& [key, body] = *j.items().begin();
    const std::string p = path + "." + key;
    if (key == "point" || key == "grad_point") {
        Section s(body, p);
        const bool grad = key == "grad_point";
        if (grad) {
            s.only({"component", "axis", "at"});
        } else {
            s.only({"component", "at"});
        }
        const int component = integer(s.at("component"), s.path("component"));
        if (component < 1) {
            fail_at(s.path("component"), "component indices start at 1");
        }
        const Point at = point(s.at("at"), s.path("at"));
        if (grad) {
            const int axis = integer(s.at("axis"), s.path("axis"));
            if (axis != 1 && axis != 2) {
                fail_at(s.path("axis"), "axis must be 1 or 2");
            }
            out = {{key, {{"component", component}, {"axis", axis}, {"at", {at[0], at[1]}}}}};
            return FunctionalSpec::grad_point(component, axis, at);
        }
        out = {{key, {{"component", component}, {"at", {at[0], at[1]}}}}};
        return FunctionalSpec::point(component, at);
    }
    if (key == "integral") {
        const Expr e = expression(body, p);
        out = {{key, expr_json(e)}};
        return FunctionalSpec::integral(e);
    }
    if (key == "combine") {
        Section s(body, p);
        s.only({"expr", "args"});
        const Expr e = expression(s.at("expr"), s.path("expr"));
        std::vector<FunctionalSpec::Arg> args;
        json args_out = json::object();
        if (s.has("args")) {
            const json& a = s.at("args");
            if (!a.is_object()) {
                fail_at(s.path("args"), "expected an object of named functionals");
            }
            for (const auto& [name, sub] : a.items()) {
                json sub_out;
                args.emplace_back(name, read_functional(sub, s.path("args") + "." + name, sub_out));
                args_out[name] = std::move(sub_out);
            }
        }
        out = {{key, {{"expr", expr_json(e)}, {"args", std::move(args_out)}}}};
        try {
            return FunctionalSpec::combine(e, std::move(args));
        } catch (const ConfigError& err) {
            fail_at(p, err.what());
        }
    }
    fail_at(path, "unknown functional kind '" + key + "' (allowed: point, grad_point, integral, combine)");
}

ComponentSpec read_component(const json& j, const std::string& path, std::size_t n, json& out) {
    Section s(j, path);
    s.only({"operator", "boundary", "zeta", "f", "w", "h"});
    ComponentSpec c;
    out = json::object();
    if (s.has("operator")) {
        c.op = read_operator(s.at("operator"), s.path("operator"), out["operator"]);
    } else {
        out["operator"] = {{"a", {{1.0, 0.0}, {0.0, 1.0}}}, {"drift", {0.0, 0.0}}, {"a0", 0.0}, {"mu0", 1.0}};
    }
    if (s.has("boundary")) {
        c.bc = read_boundary(s.at("boundary"), s.path("boundary"), out["boundary"]);
    } else {
        out["boundary"] = {{"kind", "dirichlet"}};
    }
    if (s.has("zeta")) {
        c.zeta = expression(s.at("zeta"), s.path("zeta"));
        restrict_vars(c.zeta, kCoefficientVars, s.path("zeta"));
    }
    out["zeta"] = expr_json(c.zeta);

    c.f = expression(s.at("f"), s.path("f"));
    const auto names = nonlinearity_names(n);
    restrict_vars(c.f, std::set<std::string>(names.begin(), names.end()), s.path("f"));
    out["f"] = expr_json(c.f);

    if (s.has("w")) {
        c.w = read_functional(s.at("w"), s.path("w"), out["w"]);
    } else {
        out["w"] = 1.0;
    }
    if (s.has("h")) {
        c.h = read_functional(s.at("h"), s.path("h"), out["h"]);
    } else {
        out["h"] = 0.0;
    }
    for (const auto& [key, F] : {std::pair{"w", &c.w}, std::pair{"h", &c.h}}) {
        try {
            check_functional(*F, n);
        } catch (const ConfigError& e) {
            fail_at(s.path(key), e.what());
        }
    }
    return c;
}

HypothesisTemplate read_hypotheses(const json& j, std::size_t n, json& out) {
    Section s(j, "hypotheses");
    s.only({"components"});
    const json& list = s.at("components");
    if (!list.is_array() || list.size() != n) {
        fail_at("hypotheses.components", "expected an array with one entry per component (" + std::to_string(n) + ")");
    }
    HypothesisTemplate t;
    out = {{"components", json::array()}};
    for (std::size_t i = 0; i < n; ++i) {
        Section c(list[i], "hypotheses.components[" + std::to_string(i) + "]");
        c.only({"w_lo", "w_hi", "f_lower", "h_lower"});
        ComponentBoundsTemplate b;
        b.w_lo = expression(c.at("w_lo"), c.path("w_lo"));
        restrict_vars(b.w_lo, kBoundsVars, c.path("w_lo"));
        b.w_hi = expression(c.at("w_hi"), c.path("w_hi"));
        restrict_vars(b.w_hi, kBoundsVars, c.path("w_hi"));
        b.f_lower = expression(c.at("f_lower"), c.path("f_lower"));
        restrict_vars(b.f_lower, kLowerVars, c.path("f_lower"));
        b.h_lower = expression(c.at("h_lower"), c.path("h_lower"));
        restrict_vars(b.h_lower, kBoundsVars, c.path("h_lower"));
        out["components"].push_back({{"w_lo", expr_json(b.w_lo)},
                                     {"w_hi", expr_json(b.w_hi)},
                                     {"f_lower", expr_json(b.f_lower)},
                                     {"h_lower", expr_json(b.h_lower)}});
        t.components.push_back(std::move(b));
    }
    return t;
}

// ---------------------------------------------------------------------------

json dirichlet_laplacian() {
    json a = json::array({json::array({1, 0}), json::array({0, 1})});
    return json{{"a", a}, {"drift", json::array({0, 0})}, {"a0", 0}, {"mu0", 1}};
}

json point_at_origin(int component) {
    json body = {{"component", component}, {"at", json::array({0, 0})}};
    return json{{"point", body}};
}

json combine(const char* expr, json args) {
    json body = {{"expr", expr}, {"args", std::move(args)}};
    return json{{"combine", body}};
}

json integral(const char* integrand) { return json{{"integral", integrand}}; }

json kirchhoff_disk() {
    json gx_body = {{"component", 2}, {"axis", 1}, {"at", json::array({0, 0})}};

    json c1 = json::object();
    c1["operator"] = dirichlet_laplacian();
    c1["boundary"] = json{{"kind", "dirichlet"}};
    c1["zeta"] = "1";
    c1["f"] = "exp(u1)*(1+gn2sq)*w";
    c1["w"] = combine("1/(exp(pe)+ig)", json{{"pe", point_at_origin(2)}, {"ig", integral("gn1sq")}});
    c1["h"] = combine("pe+gx^2", json{{"pe", point_at_origin(1)}, {"gx", json{{"grad_point", gx_body}}}});

    json c2 = json::object();
    c2["operator"] = dirichlet_laplacian();
    c2["boundary"] = json{{"kind", "dirichlet"}};
    c2["zeta"] = "1";
    c2["f"] = "u2^2*gn1sq*w";
    c2["w"] = combine("exp(-ig)", json{{"ig", integral("gn1sq+gn2sq")}});
    c2["h"] = combine("pe^2+ig", json{{"pe", point_at_origin(1)}, {"ig", integral("gn2sq")}});

    json h1 = {{"w_lo", "1/(2*pi*rho^2+exp(rho))"},
               {"w_hi", "1"},
               {"f_lower", "1/(2*pi*rho^2+exp(rho))"},
               {"h_lower", "0"}};
    json h2 = {{"w_lo", "exp(-4*pi*rho^2)"}, {"w_hi", "1"}, {"f_lower", "0"}, {"h_lower", "0"}};

    json doc = json::object();
    doc["mesh"] = json{{"kind", "disk"}, {"radius", 1}, {"n_r", 64}, {"n_theta", 128}};
    doc["components"] = json::array({c1, c2});
    doc["hypotheses"] = json{{"components", json::array({h1, h2})}};
    return doc;
}

json linear(json mesh) {
    json c = json::object();
    c["operator"] = dirichlet_laplacian();
    c["boundary"] = json{{"kind", "dirichlet"}};
    c["zeta"] = "1";
    c["f"] = "u1";
    c["w"] = 1;
    c["h"] = 0;
    json doc = json::object();
    doc["mesh"] = std::move(mesh);
    doc["components"] = json::array({c});
    return doc;
}

} // namespace

ProblemConfig parse_config(const json& doc) {
    Section top(doc, "config");
    top.only({"mesh", "components", "hypotheses"});
    ProblemConfig cfg;
    json& out = cfg.canonical;
    out = json::object();

    cfg.mesh = read_mesh(top.at("mesh"), out["mesh"]);

    const json& list = top.at("components");
    if (!list.is_array() || list.empty()) {
        fail_at("components", "expected a non-empty array");
    }
    const std::size_t n = list.size();
    out["components"] = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json c;
        cfg.components.push_back(read_component(list[i], "components[" + std::to_string(i) + "]", n, c));
        out["components"].push_back(std::move(c));
    }
    if (top.has("hypotheses")) {
        cfg.hypotheses = read_hypotheses(top.at("hypotheses"), n, out["hypotheses"]);
    }
    cfg.digest = sha256_hex(out.dump());
    return cfg;
}

ProblemConfig load_config(const std::string& source) {
    constexpr std::string_view prefix = "preset:";
    if (source.starts_with(prefix)) {
        return parse_config(preset_config(std::string_view(source).substr(prefix.size())));
    }
    std::ifstream in(source);
    if (!in) {
        throw ConfigError("cannot open config file '" + source + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": invalid JSON: " + e.what());
    }
    return parse_config(doc);
}

std::vector<std::string> preset_names() { return {"kirchhoff-disk", "linear-disk", "linear-square"}; }

json preset_config(std::string_view name) {
    if (name == "kirchhoff-disk") {
        return kirchhoff_disk();
    }
    if (name == "linear-disk") {
        return linear({{"kind", "disk"}, {"radius", 1}, {"n_r", 64}, {"n_theta", 128}});
    }
    if (name == "linear-square") {
        const double pi = std::numbers::pi;
        return linear({{"kind", "rectangle"}, {"lx", pi}, {"ly", pi}, {"nx", 64}, {"ny", 64}});
    }
    std::string list;
    for (const auto& n : preset_names()) {
        list += (list.empty() ? "" : ", ") + n;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + list + ")");
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

Problem build_problem(const ProblemConfig& cfg) { return Problem::build(cfg.mesh, cfg.components); }

} // namespace coneray
