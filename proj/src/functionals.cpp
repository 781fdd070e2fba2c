#include "coneray/functionals.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>
#include <set>

namespace coneray {

struct FunctionalSpec::Node {
    Kind kind = Kind::combine;
    int component = 0;
    int axis = 0;
    Point at{};
    Expr expr = Expr::literal(0.0);
    std::vector<Arg> args;
};

FunctionalSpec FunctionalSpec::point(int component, Point at) {
    if (component < 1) {
        throw ConfigError("point functional: component index must be >= 1");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::point;
    n->component = component;
    n->at = at;
    return FunctionalSpec(std::move(n));
}

FunctionalSpec FunctionalSpec::grad_point(int component, int axis, Point at) {
    if (component < 1) {
        throw ConfigError("gradient point functional: component index must be >= 1");
    }
    if (axis != 1 && axis != 2) {
        throw ConfigError("gradient point functional: axis must be 1 or 2");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::grad_point;
    n->component = component;
    n->axis = axis;
    n->at = at;
    return FunctionalSpec(std::move(n));
}

FunctionalSpec FunctionalSpec::integral(Expr integrand) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::integral;
    n->expr = std::move(integrand);
    return FunctionalSpec(std::move(n));
}

FunctionalSpec FunctionalSpec::combine(Expr outer, std::vector<Arg> args) {
    std::set<std::string> names;
    for (const auto& [name, _] : args) {
        if (name == "pi" || !names.insert(name).second) {
            throw ConfigError("combine functional: duplicate or reserved argument name '" + name + "'");
        }
    }
    for (const auto& v : free_vars(outer)) {
        if (v != "pi" && !names.contains(v)) {
            throw ConfigError("combine functional: expression '" + to_string(outer) + "' uses '" + v +
                              "', which is not an argument");
        }
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::combine;
    n->expr = std::move(outer);
    n->args = std::move(args);
    return FunctionalSpec(std::move(n));
}

FunctionalSpec FunctionalSpec::constant(double value) { return combine(Expr::literal(value), {}); }

FunctionalSpec::Kind FunctionalSpec::kind() const { return node_->kind; }
int FunctionalSpec::component() const { return node_->component; }
int FunctionalSpec::axis() const { return node_->axis; }
const Point& FunctionalSpec::at() const { return node_->at; }
const Expr& FunctionalSpec::expr() const { return node_->expr; }
const std::vector<FunctionalSpec::Arg>& FunctionalSpec::args() const { return node_->args; }

namespace {

int integrand_max_component(const Expr& e) {
    int m = 0;
    for (const auto& v : free_vars(e)) {
        // u<i>, du<i>_dx<j>, gn<i>sq
        std::size_t start = 0;
        if (v.starts_with("du")) {
            start = 2;
        } else if (v.starts_with("gn")) {
            start = 2;
        } else if (v.starts_with("u")) {
            start = 1;
        } else {
            continue;
        }
        std::size_t end = start;
        while (end < v.size() && std::isdigit(static_cast<unsigned char>(v[end]))) {
            ++end;
        }
        if (end > start) {
            m = std::max(m, std::stoi(v.substr(start, end - start)));
        }
    }
    return m;
}

} // namespace

int FunctionalSpec::max_component() const {
    switch (node_->kind) {
    case Kind::point:
    case Kind::grad_point:
        return node_->component;
    case Kind::integral:
        return integrand_max_component(node_->expr);
    case Kind::combine: {
        int m = 0;
        for (const auto& [_, f] : node_->args) {
            m = std::max(m, f.max_component());
        }
        return m;
    }
    }
    return 0;
}

void check_functional(const FunctionalSpec& F, std::size_t n) {
    switch (F.kind()) {
    case FunctionalSpec::Kind::point:
    case FunctionalSpec::Kind::grad_point:
        if (static_cast<std::size_t>(F.component()) > n) {
            throw ConfigError("functional references component " + std::to_string(F.component()) + " of a " +
                              std::to_string(n) + "-component system");
        }
        break;
    case FunctionalSpec::Kind::integral: {
        const auto names = pointwise_names(n);
        for (const auto& v : free_vars(F.expr())) {
            if (std::find(names.begin(), names.end(), v) == names.end()) {
                throw ConfigError("integral functional: unknown variable '" + v + "' in '" + to_string(F.expr()) +
                                  "'");
            }
        }
        break;
    }
    case FunctionalSpec::Kind::combine:
        for (const auto& [_, f] : F.args()) {
            check_functional(f, n);
        }
        break;
    }
}

namespace {

std::size_t snap(const FunctionalSpec& F, const Mesh& mesh) {
    if (!mesh.contains(F.at())) {
        throw ContractViolation("functional evaluation point (" + std::to_string(F.at()[0]) + ", " +
                                std::to_string(F.at()[1]) + ") lies outside the domain");
    }
    return mesh.nearest_node(F.at());
}

void check_component(const FunctionalSpec& F, const State& u) {
    if (static_cast<std::size_t>(F.component()) > u.n()) {
        throw ContractViolation("functional references component " + std::to_string(F.component()) +
                                " but the state has " + std::to_string(u.n()));
    }
}

} // namespace

double evaluate(const FunctionalSpec& F, const State& u) {
    switch (F.kind()) {
    case FunctionalSpec::Kind::point: {
        check_component(F, u);
        const auto k = static_cast<Eigen::Index>(snap(F, u.mesh()));
        return u.component(static_cast<std::size_t>(F.component() - 1))[k];
    }
    case FunctionalSpec::Kind::grad_point: {
        check_component(F, u);
        const auto k = static_cast<Eigen::Index>(snap(F, u.mesh()));
        const Gradient& g = u.gradient(static_cast<std::size_t>(F.component() - 1));
        return F.axis() == 1 ? g.dx1[k] : g.dx2[k];
    }
    case FunctionalSpec::Kind::integral: {
        const auto names = pointwise_names(u.n());
        const CompiledExpr integrand(F.expr(), names);
        std::vector<double> slots(names.size());
        const Mesh& mesh = u.mesh();
        ScalarField values(static_cast<Eigen::Index>(mesh.size()));
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            fill_pointwise(u, i, slots);
            values[static_cast<Eigen::Index>(i)] = integrand(slots);
        }
        return mesh.integrate(values);
    }
    case FunctionalSpec::Kind::combine: {
        Env env{{"pi", std::numbers::pi}};
        for (const auto& [name, f] : F.args()) {
            env[name] = evaluate(f, u);
        }
        return eval(F.expr(), env);
    }
    }
    return 0.0;
}

ExampleFunctionals example_functionals() {
    const Point origin{0.0, 0.0};
    using A = FunctionalSpec::Arg;
    return {
        FunctionalSpec::combine(parse("1/(exp(pe) + ig)"),
                                {A{"pe", FunctionalSpec::point(2, origin)},
                                 A{"ig", FunctionalSpec::integral(parse("gn1sq"))}}),
        FunctionalSpec::combine(parse("exp(-ig)"), {A{"ig", FunctionalSpec::integral(parse("gn1sq + gn2sq"))}}),
        FunctionalSpec::combine(parse("pe + gx^2"),
                                {A{"pe", FunctionalSpec::point(1, origin)},
                                 A{"gx", FunctionalSpec::grad_point(2, 1, origin)}}),
        FunctionalSpec::combine(parse("pe^2 + ig"),
                                {A{"pe", FunctionalSpec::point(1, origin)},
                                 A{"ig", FunctionalSpec::integral(parse("gn2sq"))}}),
    };
}

} // namespace coneray
