#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "vmspod/quadrature.hpp"
#include "vmspod/space.hpp"

namespace vmspod {

using SparseMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

/// Analytic vector field (t, x, y) -> (f0, f1).
using VectorField = std::function<std::array<double, 2>(double, double, double)>;
/// Analytic scalar field (t, x, y) -> s.
using ScalarField = std::function<double(double, double, double)>;

/// Default assembly quadrature: exact through degree 5, which covers the
/// P2*P2*grad(P2) convection integrand.
inline constexpr int kAssemblyQuadDegree = 5;

namespace detail {

struct ElementGeometry {
    std::array<double, 2> grad_l0, grad_l1, grad_l2;  // physical barycentric gradients
    double area;
    std::array<double, 2> p0;
    std::array<double, 2> e1, e2;  // edge vectors p1-p0, p2-p0

    ElementGeometry(const Mesh& mesh, int t) {
        const auto& tri = mesh.triangles[t];
        p0 = mesh.nodes[tri[0]];
        const auto& p1 = mesh.nodes[tri[1]];
        const auto& p2 = mesh.nodes[tri[2]];
        e1 = {p1[0] - p0[0], p1[1] - p0[1]};
        e2 = {p2[0] - p0[0], p2[1] - p0[1]};
        const double det = e1[0] * e2[1] - e2[0] * e1[1];
        area = 0.5 * det;
        // rows of the inverse Jacobian transpose
        grad_l1 = {e2[1] / det, -e2[0] / det};
        grad_l2 = {-e1[1] / det, e1[0] / det};
        grad_l0 = {-grad_l1[0] - grad_l2[0], -grad_l1[1] - grad_l2[1]};
    }

    std::array<double, 2> map(double u, double v) const {
        return {p0[0] + e1[0] * u + e2[0] * v, p0[1] + e1[1] * u + e2[1] * v};
    }

    std::array<std::array<double, 2>, 6> p2_phys_grads(double l0, double l1, double l2) const {
        const auto gb = TaylorHoodSpace::p2_grad_bary(l0, l1, l2);
        std::array<std::array<double, 2>, 6> g;
        for (int i = 0; i < 6; ++i) {
            g[i][0] = gb[i][0] * grad_l0[0] + gb[i][1] * grad_l1[0] + gb[i][2] * grad_l2[0];
            g[i][1] = gb[i][0] * grad_l0[1] + gb[i][1] * grad_l1[1] + gb[i][2] * grad_l2[1];
        }
        return g;
    }
};

}  // namespace detail

/// Velocity mass operator: (M u, v) = integral of u . v for P2 vector fields.
inline SparseMat assemble_mass(const TaylorHoodSpace& space, int quad_degree = kAssemblyQuadDegree) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles.size() * 72);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& nodes = space.p2_nodes(static_cast<int>(t));
        Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto N = TaylorHoodSpace::p2_values(l0, l1, l2);
            const double wq = q.w * 2.0 * geom.area;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) local(i, j) += wq * N[i] * N[j];
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int c = 0; c < 2; ++c)
                    trips.emplace_back(TaylorHoodSpace::velocity_dof(nodes[i], c),
                                       TaylorHoodSpace::velocity_dof(nodes[j], c), local(i, j));
    }
    SparseMat M(space.n_velocity_dofs(), space.n_velocity_dofs());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

/// Velocity stiffness operator: (A u, v) = integral of grad(u) : grad(v).
inline SparseMat assemble_stiffness(const TaylorHoodSpace& space,
                                    int quad_degree = kAssemblyQuadDegree) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles.size() * 72);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& nodes = space.p2_nodes(static_cast<int>(t));
        Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto g = geom.p2_phys_grads(l0, l1, l2);
            const double wq = q.w * 2.0 * geom.area;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    local(i, j) += wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int c = 0; c < 2; ++c)
                    trips.emplace_back(TaylorHoodSpace::velocity_dof(nodes[i], c),
                                       TaylorHoodSpace::velocity_dof(nodes[j], c), local(i, j));
    }
    SparseMat A(space.n_velocity_dofs(), space.n_velocity_dofs());
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

/// Divergence operator: (B v)_q = integral of q * div(v), rows = pressure dofs.
inline SparseMat assemble_divergence(const TaylorHoodSpace& space,
                                     int quad_degree = kAssemblyQuadDegree) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& nodes = space.p2_nodes(static_cast<int>(t));
        const auto& verts = mesh.triangles[t];
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto g = geom.p2_phys_grads(l0, l1, l2);
            const auto P = TaylorHoodSpace::p1_values(l0, l1, l2);
            const double wq = q.w * 2.0 * geom.area;
            for (int l = 0; l < 3; ++l)
                for (int j = 0; j < 6; ++j)
                    for (int c = 0; c < 2; ++c)
                        trips.emplace_back(TaylorHoodSpace::pressure_dof(verts[l]),
                                           TaylorHoodSpace::velocity_dof(nodes[j], c),
                                           wq * P[l] * g[j][c]);
        }
    }
    SparseMat B(space.n_pressure_dofs(), space.n_velocity_dofs());
    B.setFromTriplets(trips.begin(), trips.end());
    return B;
}

/// Skew-symmetric convection operator N(w) with v^T N(w) u = b(w,u,v)
/// = 1/2 ((w.grad u, v) - (w.grad v, u)).
inline SparseMat assemble_convection(const TaylorHoodSpace& space, const Vec& w,
                                     int quad_degree = kAssemblyQuadDegree) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles.size() * 72);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& nodes = space.p2_nodes(static_cast<int>(t));
        Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto N = TaylorHoodSpace::p2_values(l0, l1, l2);
            const auto g = geom.p2_phys_grads(l0, l1, l2);
            double w0 = 0.0, w1 = 0.0;
            for (int k = 0; k < 6; ++k) {
                w0 += w[TaylorHoodSpace::velocity_dof(nodes[k], 0)] * N[k];
                w1 += w[TaylorHoodSpace::velocity_dof(nodes[k], 1)] * N[k];
            }
            const double wq = q.w * 2.0 * geom.area;
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double adv_j = w0 * g[j][0] + w1 * g[j][1];
                    const double adv_i = w0 * g[i][0] + w1 * g[i][1];
                    local(i, j) += 0.5 * wq * (adv_j * N[i] - adv_i * N[j]);
                }
            }
        }
        // (w.grad u).v is component-diagonal, so both components share the block
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int c = 0; c < 2; ++c)
                    trips.emplace_back(TaylorHoodSpace::velocity_dof(nodes[i], c),
                                       TaylorHoodSpace::velocity_dof(nodes[j], c), local(i, j));
    }
    SparseMat C(space.n_velocity_dofs(), space.n_velocity_dofs());
    C.setFromTriplets(trips.begin(), trips.end());
    return C;
}

/// Derivative of the convective residual in the advecting slot:
/// v^T J(w) d = b(d, w, v). Together with assemble_convection this gives the
/// exact Jacobian of u -> b(u,u,.).
inline SparseMat assemble_convection_dw(const TaylorHoodSpace& space, const Vec& w,
                                        int quad_degree = kAssemblyQuadDegree) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles.size() * 144);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& nodes = space.p2_nodes(static_cast<int>(t));
        Eigen::Matrix<double, 12, 12> local = Eigen::Matrix<double, 12, 12>::Zero();
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto N = TaylorHoodSpace::p2_values(l0, l1, l2);
            const auto g = geom.p2_phys_grads(l0, l1, l2);
            double wval[2] = {0.0, 0.0};
            double wgrad[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // wgrad[c][e] = d w_c / d x_e
            for (int k = 0; k < 6; ++k) {
                for (int c = 0; c < 2; ++c) {
                    const double wk = w[TaylorHoodSpace::velocity_dof(nodes[k], c)];
                    wval[c] += wk * N[k];
                    wgrad[c][0] += wk * g[k][0];
                    wgrad[c][1] += wk * g[k][1];
                }
            }
            const double wq = q.w * 2.0 * geom.area;
            // b(d, w, v) = 1/2 ((d.grad w, v) - (d.grad v, w))
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    for (int c = 0; c < 2; ++c) {
                        for (int e = 0; e < 2; ++e) {
                            local(2 * i + c, 2 * j + e) +=
                                0.5 * wq * (N[i] * N[j] * wgrad[c][e] - wval[c] * N[j] * g[i][e]);
                        }
                    }
                }
            }
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int c = 0; c < 2; ++c)
                    for (int e = 0; e < 2; ++e)
                        trips.emplace_back(TaylorHoodSpace::velocity_dof(nodes[i], c),
                                           TaylorHoodSpace::velocity_dof(nodes[j], e),
                                           local(2 * i + c, 2 * j + e));
    }
    SparseMat J(space.n_velocity_dofs(), space.n_velocity_dofs());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

/// Load vector (f(t), v) for all velocity test functions.
inline Vec assemble_load(const TaylorHoodSpace& space, const VectorField& f, double t,
                         int quad_degree = kAssemblyQuadDegree + 4) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    Vec F = Vec::Zero(space.n_velocity_dofs());
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        detail::ElementGeometry geom(mesh, e);
        const auto& nodes = space.p2_nodes(static_cast<int>(e));
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto N = TaylorHoodSpace::p2_values(l0, l1, l2);
            const auto x = geom.map(q.x, q.y);
            const auto fv = f(t, x[0], x[1]);
            const double wq = q.w * 2.0 * geom.area;
            for (int i = 0; i < 6; ++i)
                for (int c = 0; c < 2; ++c)
                    F[TaylorHoodSpace::velocity_dof(nodes[i], c)] += wq * N[i] * fv[c];
        }
    }
    return F;
}

/// Nodal/midpoint interpolant of an analytic vector field.
inline Vec interpolate(const VectorField& f, const TaylorHoodSpace& space, double t = 0.0) {
    Vec u(space.n_velocity_dofs());
    for (int n = 0; n < space.n_scalar_nodes(); ++n) {
        const auto& x = space.p2_coord(n);
        const auto v = f(t, x[0], x[1]);
        u[TaylorHoodSpace::velocity_dof(n, 0)] = v[0];
        u[TaylorHoodSpace::velocity_dof(n, 1)] = v[1];
    }
    return u;
}

/// Pressure-gauge vector m with m_q = integral of the P1 basis function q;
/// m^T p = integral of p over the domain.
inline Vec pressure_mean_vector(const TaylorHoodSpace& space) {
    const auto rule = triangle_rule(2);
    const auto& mesh = space.mesh();
    Vec m = Vec::Zero(space.n_pressure_dofs());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& verts = mesh.triangles[t];
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto P = TaylorHoodSpace::p1_values(l0, l1, l2);
            const double wq = q.w * 2.0 * geom.area;
            for (int l = 0; l < 3; ++l) m[verts[l]] += wq * P[l];
        }
    }
    return m;
}

/// P1 pressure mass matrix, used by the inf-sup diagnostic.
inline SparseMat assemble_pressure_mass(const TaylorHoodSpace& space, int quad_degree = 2) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    std::vector<Triplet> trips;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        detail::ElementGeometry geom(mesh, t);
        const auto& verts = mesh.triangles[t];
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto P = TaylorHoodSpace::p1_values(l0, l1, l2);
            const double wq = q.w * 2.0 * geom.area;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    trips.emplace_back(verts[i], verts[j], wq * P[i] * P[j]);
        }
    }
    SparseMat Mp(space.n_pressure_dofs(), space.n_pressure_dofs());
    Mp.setFromTriplets(trips.begin(), trips.end());
    return Mp;
}

/// L2 and H1-seminorm errors of a P2 field against an analytic reference,
/// by composite quadrature of configurable degree.
struct FieldError {
    double l2;
    double h1_semi;
};

inline FieldError field_error(const TaylorHoodSpace& space, const Vec& u, const VectorField& exact,
                              const std::function<std::array<double, 4>(double, double, double)>&
                                  exact_grad,  // (du0/dx, du0/dy, du1/dx, du1/dy) or nullptr
                              double t, int quad_degree = 10) {
    const auto rule = triangle_rule(quad_degree);
    const auto& mesh = space.mesh();
    double l2sq = 0.0, h1sq = 0.0;
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        detail::ElementGeometry geom(mesh, e);
        const auto& nodes = space.p2_nodes(static_cast<int>(e));
        for (const auto& q : rule) {
            const double l1 = q.x, l2 = q.y, l0 = 1.0 - q.x - q.y;
            const auto N = TaylorHoodSpace::p2_values(l0, l1, l2);
            const auto g = geom.p2_phys_grads(l0, l1, l2);
            const auto x = geom.map(q.x, q.y);
            double uh[2] = {0.0, 0.0};
            double gh[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
            for (int k = 0; k < 6; ++k) {
                for (int c = 0; c < 2; ++c) {
                    const double uk = u[TaylorHoodSpace::velocity_dof(nodes[k], c)];
                    uh[c] += uk * N[k];
                    gh[c][0] += uk * g[k][0];
                    gh[c][1] += uk * g[k][1];
                }
            }
            const auto ue = exact(t, x[0], x[1]);
            const double wq = q.w * 2.0 * geom.area;
            l2sq += wq * ((uh[0] - ue[0]) * (uh[0] - ue[0]) + (uh[1] - ue[1]) * (uh[1] - ue[1]));
            if (exact_grad) {
                const auto ge = exact_grad(t, x[0], x[1]);
                const double d00 = gh[0][0] - ge[0], d01 = gh[0][1] - ge[1];
                const double d10 = gh[1][0] - ge[2], d11 = gh[1][1] - ge[3];
                h1sq += wq * (d00 * d00 + d01 * d01 + d10 * d10 + d11 * d11);
            }
        }
    }
    return {std::sqrt(l2sq), std::sqrt(h1sq)};
}

}  // namespace vmspod
