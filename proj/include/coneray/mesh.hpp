#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace coneray {

using Point = std::array<double, 2>;
using ScalarField = Eigen::VectorXd;
using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class MeshKind { disk, rectangle };
enum class NodeClass { interior, boundary };

/// Cartesian partials of a nodal field.
struct Gradient {
    ScalarField dx1;
    ScalarField dx2;
};

/// Structured 2D mesh of a disk (polar grid with a shared center node) or an
/// axis-aligned rectangle [0, lx] x [0, ly]. Immutable after construction.
///
/// Disk numbering: node 0 is the center, ring k = 1..n_r at radius k*h_r holds
/// n_theta nodes at angles j*2pi/n_theta, stored at 1 + (k-1)*n_theta + j.
/// Ring n_r is the boundary.
///
/// Rectangle numbering: node (ix, iy) at (ix*h_x, iy*h_y) is stored at
/// iy*nx + ix; nx and ny count nodes including both edges.
class Mesh {
public:
    static Mesh disk(double radius, int n_r, int n_theta);
    static Mesh rectangle(double lx, double ly, int nx, int ny);

    MeshKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    const std::vector<Point>& nodes() const noexcept { return nodes_; }
    const Point& node(std::size_t i) const { return nodes_[i]; }
    NodeClass node_class(std::size_t i) const { return class_[i]; }
    bool is_boundary(std::size_t i) const { return class_[i] == NodeClass::boundary; }
    std::size_t boundary_count() const noexcept { return boundary_count_; }

    /// Outward unit direction at boundary nodes, empty at interior nodes.
    const std::optional<Point>& nu(std::size_t i) const { return nu_[i]; }

    const ScalarField& quad_weights() const noexcept { return weights_; }

    // Disk geometry.
    double radius() const noexcept { return radius_; }
    int n_r() const noexcept { return n_r_; }
    int n_theta() const noexcept { return n_theta_; }
    double h_r() const noexcept { return h_[0]; }
    double h_theta() const noexcept { return h_[1]; }
    std::size_t disk_node(int ring, int j) const;
    int ring_of(std::size_t i) const;
    int angle_of(std::size_t i) const;

    // Rectangle geometry.
    double lx() const noexcept { return extent_[0]; }
    double ly() const noexcept { return extent_[1]; }
    int nx() const noexcept { return counts_[0]; }
    int ny() const noexcept { return counts_[1]; }
    double h_x() const noexcept { return h_[0]; }
    double h_y() const noexcept { return h_[1]; }
    std::size_t rect_node(int ix, int iy) const { return static_cast<std::size_t>(iy) * counts_[0] + ix; }

    double area() const;

    /// Sum of quad_weights * values.
    double integrate(const ScalarField& values) const;

    Gradient gradient(const ScalarField& field) const;

    /// Sparse difference operators behind gradient(); row i is the stencil at node i.
    const RowSparse& d_dx1() const noexcept { return dx1_; }
    const RowSparse& d_dx2() const noexcept { return dx2_; }

    /// True when p lies in the closed domain (relative slack 1e-12).
    bool contains(const Point& p) const;
    std::size_t nearest_node(const Point& p) const;

private:
    Mesh() = default;
    void build_disk_operators();
    void build_rect_operators();
    void check_length(const ScalarField& values) const;

    MeshKind kind_ = MeshKind::disk;
    std::vector<Point> nodes_;
    std::vector<NodeClass> class_;
    std::vector<std::optional<Point>> nu_;
    ScalarField weights_;
    std::size_t boundary_count_ = 0;

    double radius_ = 0.0;
    int n_r_ = 0;
    int n_theta_ = 0;
    std::array<double, 2> extent_{};
    std::array<int, 2> counts_{};
    std::array<double, 2> h_{};

    RowSparse dx1_;
    RowSparse dx2_;
};

} // namespace coneray
