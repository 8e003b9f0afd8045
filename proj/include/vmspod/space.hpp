#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <vector>

#include "vmspod/mesh.hpp"

namespace vmspod {

namespace detail {

inline void fnv1a_accumulate(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

}  // namespace detail

/// Taylor-Hood (P2 velocity / P1 pressure) space on a structured rectangle
/// mesh. P2 scalar nodes coincide with the (2nx+1) x (2ny+1) refined grid;
/// velocity dofs interleave the two components as 2*node+comp.
class TaylorHoodSpace {
public:
    explicit TaylorHoodSpace(const Mesh& mesh) : mesh_(&mesh) {
        nx_ = mesh.nx;
        ny_ = mesh.ny;
        const int fx = 2 * nx_ + 1, fy = 2 * ny_ + 1;
        n_scalar_ = fx * fy;
        n_pressure_ = (nx_ + 1) * (ny_ + 1);

        const double hx = mesh.bounds.width() / (2 * nx_);
        const double hy = mesh.bounds.height() / (2 * ny_);
        p2_coords_.resize(n_scalar_);
        for (int j = 0; j < fy; ++j)
            for (int i = 0; i < fx; ++i)
                p2_coords_[j * fx + i] = {mesh.bounds.x0 + i * hx, mesh.bounds.y0 + j * hy};

        // Per-triangle P2 connectivity: 3 vertices then midpoints of edges
        // (0,1), (1,2), (2,0), all addressed on the refined grid.
        p2_conn_.resize(mesh.triangles.size());
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            std::array<std::array<int, 2>, 3> fv;  // fine-grid (i,j) of vertices
            for (int k = 0; k < 3; ++k) {
                const int v = mesh.triangles[t][k];
                fv[k] = {2 * (v % (nx_ + 1)), 2 * (v / (nx_ + 1))};
            }
            auto fid = [fx](int i, int j) { return j * fx + i; };
            auto& c = p2_conn_[t];
            for (int k = 0; k < 3; ++k) c[k] = fid(fv[k][0], fv[k][1]);
            c[3] = fid((fv[0][0] + fv[1][0]) / 2, (fv[0][1] + fv[1][1]) / 2);
            c[4] = fid((fv[1][0] + fv[2][0]) / 2, (fv[1][1] + fv[2][1]) / 2);
            c[5] = fid((fv[2][0] + fv[0][0]) / 2, (fv[2][1] + fv[0][1]) / 2);
        }

        dirichlet_scalar_.assign(n_scalar_, false);
        for (int j = 0; j < fy; ++j)
            for (int i = 0; i < fx; ++i)
                if (i == 0 || j == 0 || i == fx - 1 || j == fy - 1)
                    dirichlet_scalar_[j * fx + i] = true;

        std::uint64_t h = 1469598103934665603ULL;
        detail::fnv1a_accumulate(h, &nx_, sizeof nx_);
        detail::fnv1a_accumulate(h, &ny_, sizeof ny_);
        detail::fnv1a_accumulate(h, &mesh.bounds, sizeof mesh.bounds);
        detail::fnv1a_accumulate(h, &n_scalar_, sizeof n_scalar_);
        detail::fnv1a_accumulate(h, &n_pressure_, sizeof n_pressure_);
        fingerprint_ = h;
    }

    const Mesh& mesh() const { return *mesh_; }
    int n_scalar_nodes() const { return n_scalar_; }
    int n_velocity_dofs() const { return 2 * n_scalar_; }
    int n_pressure_dofs() const { return n_pressure_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    const std::array<double, 2>& p2_coord(int node) const { return p2_coords_[node]; }
    const std::array<int, 6>& p2_nodes(int tri) const { return p2_conn_[tri]; }

    static int velocity_dof(int node, int comp) { return 2 * node + comp; }
    /// P1 pressure dof of a mesh vertex (same index space).
    static int pressure_dof(int vertex) { return vertex; }

    bool is_dirichlet_node(int node) const { return dirichlet_scalar_[node]; }
    bool is_dirichlet_dof(int dof) const { return dirichlet_scalar_[dof / 2]; }

    /// P2 shape values at barycentric (l0,l1,l2), local node order as p2_nodes.
    static std::array<double, 6> p2_values(double l0, double l1, double l2) {
        return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
    }

    /// Gradients of the P2 shapes w.r.t. barycentric coordinates; the physical
    /// gradient follows from the chain rule with grad(l_k).
    static std::array<std::array<double, 3>, 6> p2_grad_bary(double l0, double l1, double l2) {
        return {{{4 * l0 - 1, 0, 0},
                 {0, 4 * l1 - 1, 0},
                 {0, 0, 4 * l2 - 1},
                 {4 * l1, 4 * l0, 0},
                 {0, 4 * l2, 4 * l1},
                 {4 * l2, 0, 4 * l0}}};
    }

    static std::array<double, 3> p1_values(double l0, double l1, double l2) {
        return {l0, l1, l2};
    }

private:
    const Mesh* mesh_;
    int nx_, ny_;
    int n_scalar_ = 0;
    int n_pressure_ = 0;
    std::uint64_t fingerprint_ = 0;
    std::vector<std::array<double, 2>> p2_coords_;
    std::vector<std::array<int, 6>> p2_conn_;
    std::vector<bool> dirichlet_scalar_;
};

}  // namespace vmspod
