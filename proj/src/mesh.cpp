#include "coneray/mesh.hpp"

#include "coneray/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace coneray {

namespace {

using Triplet = Eigen::Triplet<double>;

} // namespace

Mesh Mesh::disk(double radius, int n_r, int n_theta) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw ConfigError("disk mesh: radius must be positive, got " + std::to_string(radius));
    }
    if (n_r < 4) {
        throw ConfigError("disk mesh: n_r must be >= 4, got " + std::to_string(n_r));
    }
    if (n_theta < 8 || n_theta % 2 != 0) {
        throw ConfigError("disk mesh: n_theta must be even and >= 8, got " + std::to_string(n_theta));
    }

    Mesh m;
    m.kind_ = MeshKind::disk;
    m.radius_ = radius;
    m.n_r_ = n_r;
    m.n_theta_ = n_theta;
    const double hr = radius / n_r;
    const double ht = 2.0 * std::numbers::pi / n_theta;
    m.h_ = {hr, ht};

    const std::size_t n = 1 + static_cast<std::size_t>(n_r) * n_theta;
    m.nodes_.reserve(n);
    m.class_.reserve(n);
    m.nu_.reserve(n);
    m.weights_.resize(static_cast<Eigen::Index>(n));

    m.nodes_.push_back({0.0, 0.0});
    m.class_.push_back(NodeClass::interior);
    m.nu_.emplace_back();
    // Center node owns the cap r in [0, h_r/2].
    m.weights_[0] = std::numbers::pi * 0.25 * hr * hr;

    for (int k = 1; k <= n_r; ++k) {
        const bool boundary = (k == n_r);
        const double r = boundary ? radius : k * hr;
        for (int j = 0; j < n_theta; ++j) {
            const double th = j * ht;
            const double c = std::cos(th);
            const double s = std::sin(th);
            const auto idx = static_cast<Eigen::Index>(m.nodes_.size());
            m.nodes_.push_back({r * c, r * s});
            if (boundary) {
                m.class_.push_back(NodeClass::boundary);
                m.nu_.emplace_back(Point{c, s});
                m.weights_[idx] = 0.5 * hr * r * ht;
            } else {
                m.class_.push_back(NodeClass::interior);
                m.nu_.emplace_back();
                m.weights_[idx] = hr * r * ht;
            }
        }
    }
    m.boundary_count_ = static_cast<std::size_t>(n_theta);
    m.build_disk_operators();
    return m;
}

Mesh Mesh::rectangle(double lx, double ly, int nx, int ny) {
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
        throw ConfigError("rectangle mesh: side lengths must be positive");
    }
    if (nx < 4 || ny < 4) {
        throw ConfigError("rectangle mesh: nx and ny must be >= 4, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
    }

    Mesh m;
    m.kind_ = MeshKind::rectangle;
    m.extent_ = {lx, ly};
    m.counts_ = {nx, ny};
    const double hx = lx / (nx - 1);
    const double hy = ly / (ny - 1);
    m.h_ = {hx, hy};

    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    m.nodes_.reserve(n);
    m.class_.reserve(n);
    m.nu_.reserve(n);
    m.weights_.resize(static_cast<Eigen::Index>(n));

    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double x = (ix == nx - 1) ? lx : ix * hx;
            const double y = (iy == ny - 1) ? ly : iy * hy;
            const auto idx = static_cast<Eigen::Index>(m.nodes_.size());
            m.nodes_.push_back({x, y});

            const int sx = (ix == 0) ? -1 : (ix == nx - 1 ? 1 : 0);
            const int sy = (iy == 0) ? -1 : (iy == ny - 1 ? 1 : 0);
            if (sx != 0 || sy != 0) {
                const double len = std::sqrt(static_cast<double>(sx * sx + sy * sy));
                m.class_.push_back(NodeClass::boundary);
                m.nu_.emplace_back(Point{sx / len, sy / len});
                ++m.boundary_count_;
            } else {
                m.class_.push_back(NodeClass::interior);
                m.nu_.emplace_back();
            }
            const double wx = (sx != 0) ? 0.5 * hx : hx;
            const double wy = (sy != 0) ? 0.5 * hy : hy;
            m.weights_[idx] = wx * wy;
        }
    }
    m.build_rect_operators();
    return m;
}

std::size_t Mesh::disk_node(int ring, int j) const {
    if (ring == 0) {
        return 0;
    }
    const int jj = ((j % n_theta_) + n_theta_) % n_theta_;
    return 1 + static_cast<std::size_t>(ring - 1) * n_theta_ + jj;
}

int Mesh::ring_of(std::size_t i) const {
    return i == 0 ? 0 : 1 + static_cast<int>((i - 1) / n_theta_);
}

int Mesh::angle_of(std::size_t i) const {
    return i == 0 ? 0 : static_cast<int>((i - 1) % n_theta_);
}

double Mesh::area() const {
    if (kind_ == MeshKind::disk) {
        return std::numbers::pi * radius_ * radius_;
    }
    return extent_[0] * extent_[1];
}

void Mesh::check_length(const ScalarField& values) const {
    if (static_cast<std::size_t>(values.size()) != nodes_.size()) {
        throw ContractViolation("nodal field has " + std::to_string(values.size()) + " entries, mesh has " +
                                std::to_string(nodes_.size()) + " nodes");
    }
}

double Mesh::integrate(const ScalarField& values) const {
    check_length(values);
    return weights_.dot(values);
}

Gradient Mesh::gradient(const ScalarField& field) const {
    check_length(field);
    return {dx1_ * field, dx2_ * field};
}

bool Mesh::contains(const Point& p) const {
    constexpr double slack = 1e-12;
    if (kind_ == MeshKind::disk) {
        return std::hypot(p[0], p[1]) <= radius_ * (1.0 + slack);
    }
    const double ex = slack * extent_[0];
    const double ey = slack * extent_[1];
    return p[0] >= -ex && p[0] <= extent_[0] + ex && p[1] >= -ey && p[1] <= extent_[1] + ey;
}

std::size_t Mesh::nearest_node(const Point& p) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double d = std::hypot(nodes_[i][0] - p[0], nodes_[i][1] - p[1]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Polar differences mapped to Cartesian partials:
//   d/dx1 = cos(t) d/dr - sin(t)/r d/dt,  d/dx2 = sin(t) d/dr + cos(t)/r d/dt.
// The angular difference divides by 2 sin(h_t) instead of 2 h_t, which makes it
// exact on the modes cos(t), sin(t) and so on every Cartesian-linear field.
void Mesh::build_disk_operators() {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    const double hr = h_[0];
    const double ht = h_[1];
    const double sin_ht = std::sin(ht);
    std::vector<Triplet> tx;
    std::vector<Triplet> ty;
    tx.reserve(static_cast<std::size_t>(n) * 5);
    ty.reserve(static_cast<std::size_t>(n) * 5);

    // Center: opposite first-ring nodes.
    const int nt = n_theta_;
    const auto c_east = static_cast<Eigen::Index>(disk_node(1, 0));
    const auto c_west = static_cast<Eigen::Index>(disk_node(1, nt / 2));
    tx.emplace_back(0, c_east, 0.5 / hr);
    tx.emplace_back(0, c_west, -0.5 / hr);
    if (nt % 4 == 0) {
        ty.emplace_back(0, static_cast<Eigen::Index>(disk_node(1, nt / 4)), 0.5 / hr);
        ty.emplace_back(0, static_cast<Eigen::Index>(disk_node(1, 3 * nt / 4)), -0.5 / hr);
    } else {
        // First sine coefficient of the ring: (2/N) sum u_j sin(t_j) = h_r du/dx2 + O(h^3).
        for (int j = 0; j < nt; ++j) {
            ty.emplace_back(0, static_cast<Eigen::Index>(disk_node(1, j)), 2.0 * std::sin(j * ht) / (nt * hr));
        }
    }

    for (int k = 1; k <= n_r_; ++k) {
        const double r = (k == n_r_) ? radius_ : k * hr;
        for (int j = 0; j < nt; ++j) {
            const auto row = static_cast<Eigen::Index>(disk_node(k, j));
            const double c = std::cos(j * ht);
            const double s = std::sin(j * ht);

            // d/dr stencil as (node, weight) pairs.
            std::array<std::pair<Eigen::Index, double>, 3> dr{};
            if (k < n_r_) {
                dr = {{{static_cast<Eigen::Index>(disk_node(k + 1, j)), 0.5 / hr},
                       {static_cast<Eigen::Index>(disk_node(k - 1, j)), -0.5 / hr},
                       {row, 0.0}}};
            } else {
                dr = {{{row, 1.5 / hr},
                       {static_cast<Eigen::Index>(disk_node(k - 1, j)), -2.0 / hr},
                       {static_cast<Eigen::Index>(disk_node(k - 2, j)), 0.5 / hr}}};
            }
            for (const auto& [col, w] : dr) {
                if (w != 0.0) {
                    tx.emplace_back(row, col, c * w);
                    ty.emplace_back(row, col, s * w);
                }
            }
            const auto jp = static_cast<Eigen::Index>(disk_node(k, j + 1));
            const auto jm = static_cast<Eigen::Index>(disk_node(k, j - 1));
            const double wt = 1.0 / (2.0 * sin_ht * r);
            tx.emplace_back(row, jp, -s * wt);
            tx.emplace_back(row, jm, s * wt);
            ty.emplace_back(row, jp, c * wt);
            ty.emplace_back(row, jm, -c * wt);
        }
    }

    dx1_.resize(n, n);
    dx2_.resize(n, n);
    dx1_.setFromTriplets(tx.begin(), tx.end());
    dx2_.setFromTriplets(ty.begin(), ty.end());
    dx1_.prune(0.0);
    dx2_.prune(0.0);
}

void Mesh::build_rect_operators() {
    const int nx = counts_[0];
    const int ny = counts_[1];
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    std::vector<Triplet> tx;
    std::vector<Triplet> ty;
    tx.reserve(static_cast<std::size_t>(n) * 3);
    ty.reserve(static_cast<std::size_t>(n) * 3);

    // Second-order difference along one axis: central inside, one-sided at the ends.
    auto axis = [](std::vector<Triplet>& out, Eigen::Index row, int i, int count, double h, auto&& at) {
        if (i == 0) {
            out.emplace_back(row, at(0), -1.5 / h);
            out.emplace_back(row, at(1), 2.0 / h);
            out.emplace_back(row, at(2), -0.5 / h);
        } else if (i == count - 1) {
            out.emplace_back(row, at(count - 1), 1.5 / h);
            out.emplace_back(row, at(count - 2), -2.0 / h);
            out.emplace_back(row, at(count - 3), 0.5 / h);
        } else {
            out.emplace_back(row, at(i + 1), 0.5 / h);
            out.emplace_back(row, at(i - 1), -0.5 / h);
        }
    };

    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const auto row = static_cast<Eigen::Index>(rect_node(ix, iy));
            axis(tx, row, ix, nx, h_[0], [&](int i) { return static_cast<Eigen::Index>(rect_node(i, iy)); });
            axis(ty, row, iy, ny, h_[1], [&](int i) { return static_cast<Eigen::Index>(rect_node(ix, i)); });
        }
    }

    dx1_.resize(n, n);
    dx2_.resize(n, n);
    dx1_.setFromTriplets(tx.begin(), tx.end());
    dx2_.setFromTriplets(ty.begin(), ty.end());
}

} // namespace coneray
