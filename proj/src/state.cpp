#include "coneray/state.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <numbers>

namespace coneray {

State::State(std::shared_ptr<const Mesh> mesh, std::vector<ScalarField> components)
    : mesh_(std::move(mesh)), values_(std::move(components)) {
    if (!mesh_) {
        throw ContractViolation("State: null mesh");
    }
    grads_.reserve(values_.size());
    for (const auto& v : values_) {
        grads_.push_back(mesh_->gradient(v));
    }
}

State State::zeros(std::shared_ptr<const Mesh> mesh, std::size_t n) { return constant(std::move(mesh), n, 0.0); }

State State::constant(std::shared_ptr<const Mesh> mesh, std::size_t n, double value) {
    const auto size = static_cast<Eigen::Index>(mesh->size());
    return State(std::move(mesh), std::vector<ScalarField>(n, ScalarField::Constant(size, value)));
}

void State::set_component(std::size_t i, ScalarField values) {
    grads_.at(i) = mesh_->gradient(values);
    values_[i] = std::move(values);
}

State State::scaled(double factor) const {
    State out = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        out.values_[i] *= factor;
        out.grads_[i].dx1 *= factor;
        out.grads_[i].dx2 *= factor;
    }
    return out;
}

double State::min_value() const {
    double m = 0.0;
    for (const auto& v : values_) {
        if (v.size() > 0) {
            m = std::min(m, v.minCoeff());
        }
    }
    return m;
}

double c1_norm(const State& u) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.n(); ++i) {
        m = std::max({m, u.component(i).lpNorm<Eigen::Infinity>(), u.gradient(i).dx1.lpNorm<Eigen::Infinity>(),
                      u.gradient(i).dx2.lpNorm<Eigen::Infinity>()});
    }
    return m;
}

bool in_cone(const State& u, double tol) { return u.min_value() >= -tol; }

std::vector<std::string> pointwise_names(std::size_t n) {
    std::vector<std::string> names{"x1", "x2", "pi"};
    for (std::size_t i = 1; i <= n; ++i) {
        names.push_back("u" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= n; ++i) {
        names.push_back("du" + std::to_string(i) + "_dx1");
        names.push_back("du" + std::to_string(i) + "_dx2");
    }
    for (std::size_t i = 1; i <= n; ++i) {
        names.push_back("gn" + std::to_string(i) + "sq");
    }
    return names;
}

void fill_pointwise(const State& u, std::size_t node, std::span<double> out) {
    const auto k = static_cast<Eigen::Index>(node);
    const std::size_t n = u.n();
    const Point& x = u.mesh().node(node);
    out[0] = x[0];
    out[1] = x[1];
    out[2] = std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        const double g1 = u.gradient(i).dx1[k];
        const double g2 = u.gradient(i).dx2[k];
        out[3 + i] = u.component(i)[k];
        out[3 + n + 2 * i] = g1;
        out[3 + n + 2 * i + 1] = g2;
        out[3 + 3 * n + i] = g1 * g1 + g2 * g2;
    }
}

} // namespace coneray
