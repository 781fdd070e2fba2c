#pragma once

#include "coneray/mesh.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace coneray {

/// The n-tuple u = (u_1, ..., u_n) of nodal fields on one mesh, with the Cartesian
/// gradients of every component kept in sync with the values.
class State {
public:
    State() = default;
    State(std::shared_ptr<const Mesh> mesh, std::vector<ScalarField> components);

    static State zeros(std::shared_ptr<const Mesh> mesh, std::size_t n);
    static State constant(std::shared_ptr<const Mesh> mesh, std::size_t n, double value);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
    std::size_t n() const noexcept { return values_.size(); }

    /// 0-based component access.
    const ScalarField& component(std::size_t i) const { return values_[i]; }
    const Gradient& gradient(std::size_t i) const { return grads_[i]; }

    void set_component(std::size_t i, ScalarField values);
    State scaled(double factor) const;

    /// Most negative nodal value over all components (0 if none is negative).
    double min_value() const;

private:
    std::shared_ptr<const Mesh> mesh_;
    std::vector<ScalarField> values_;
    std::vector<Gradient> grads_;
};

/// max over components and axes of sup|u_i| and sup|du_i/dx_j|.
double c1_norm(const State& u);

/// Discrete cone membership: every nodal value >= -tol.
bool in_cone(const State& u, double tol = 0.0);

/// Variable names available to pointwise expressions for an n-component state:
/// x1, x2, pi, u<i>, du<i>_dx<j>, gn<i>sq (indices 1-based).
std::vector<std::string> pointwise_names(std::size_t n);

/// Writes the pointwise_names() values at one node into out.
void fill_pointwise(const State& u, std::size_t node, std::span<double> out);

} // namespace coneray
