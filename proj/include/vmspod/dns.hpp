#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vmspod/assembly.hpp"
#include "vmspod/errors.hpp"
#include "vmspod/snapshot_io.hpp"

namespace vmspod {

enum class TimeScheme { BackwardEuler, Bdf2 };

inline const char* scheme_name(TimeScheme s) {
    return s == TimeScheme::BackwardEuler ? "backward-euler" : "bdf2";
}

struct NSEProblem {
    double nu = 1.0;
    VectorField forcing;    // f(t,x,y); null means zero
    VectorField dirichlet;  // boundary data g(t,x,y); null means homogeneous
    VectorField initial;    // u0(x,y); null means zero
    VectorField exact_velocity;  // optional manufactured solution
    double T = 1.0;
    double dt = 0.1;

    void validate() const {
        if (nu <= 0.0) throw ValidationError("NSEProblem: nu must be positive");
        if (dt <= 0.0) throw ValidationError("NSEProblem: dt must be positive");
        if (T < dt) throw ValidationError("NSEProblem: T must cover at least one step");
    }
};

/// Assembled operators shared by all time steps on one space.
struct DnsOperators {
    const TaylorHoodSpace* space;
    SparseMat M, A, B;
    Vec pressure_mean;       // gauge row
    std::vector<int> free;   // unconstrained velocity dofs
    std::vector<int> dof_to_free;  // -1 for Dirichlet dofs

    int n_free() const { return static_cast<int>(free.size()); }
};

inline DnsOperators build_dns_operators(const TaylorHoodSpace& space) {
    DnsOperators ops;
    ops.space = &space;
    ops.M = assemble_mass(space);
    ops.A = assemble_stiffness(space);
    ops.B = assemble_divergence(space);
    ops.pressure_mean = pressure_mean_vector(space);
    ops.dof_to_free.assign(space.n_velocity_dofs(), -1);
    for (int d = 0; d < space.n_velocity_dofs(); ++d) {
        if (!space.is_dirichlet_dof(d)) {
            ops.dof_to_free[d] = static_cast<int>(ops.free.size());
            ops.free.push_back(d);
        }
    }
    return ops;
}

/// Writes g(t) into the Dirichlet dofs of u.
inline void apply_dirichlet(const TaylorHoodSpace& space, const VectorField& g, double t, Vec& u) {
    for (int n = 0; n < space.n_scalar_nodes(); ++n) {
        if (!space.is_dirichlet_node(n)) continue;
        const auto& x = space.p2_coord(n);
        const auto v = g ? g(t, x[0], x[1]) : std::array<double, 2>{0.0, 0.0};
        u[TaylorHoodSpace::velocity_dof(n, 0)] = v[0];
        u[TaylorHoodSpace::velocity_dof(n, 1)] = v[1];
    }
}

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_norms;
};

namespace dns_detail {

/// Solves one implicit step: (c0/dt) M u + nu A u + conv(u) + B^T p = rhs on
/// free rows, B u + m*mu = 0, m^T p = 0, with u fixed to g(t_new) on the
/// boundary. rhs_time carries the mass-weighted history term.
inline void implicit_step(const DnsOperators& ops, const NSEProblem& problem, double c0_over_dt,
                          const Vec& rhs_time, double t_new, bool convection, Vec& u, Vec& p,
                          double& mu, NewtonReport* report, int max_iters = 25,
                          double rel_tol = 1e-10, double abs_tol = 1e-12) {
    const TaylorHoodSpace& space = *ops.space;
    const int nf = ops.n_free();
    const int np = space.n_pressure_dofs();
    const int n_sys = nf + np + 1;

    apply_dirichlet(space, problem.dirichlet, t_new, u);
    const Vec F = problem.forcing ? assemble_load(space, problem.forcing, t_new)
                                  : Vec::Zero(space.n_velocity_dofs());

    auto momentum_residual = [&](const Vec& uu, const Vec& pp) {
        Vec r = c0_over_dt * (ops.M * uu) - rhs_time + problem.nu * (ops.A * uu) +
                ops.B.transpose() * pp - F;
        if (convection) r += assemble_convection(space, uu) * uu;
        return r;
    };

    double res0 = -1.0;
    if (report) {
        report->iterations = 0;
        report->residual_norms.clear();
    }
    for (int it = 0; it <= max_iters; ++it) {
        const Vec rm = momentum_residual(u, p);
        Vec rhs = Vec::Zero(n_sys);
        for (int i = 0; i < nf; ++i) rhs[i] = -rm[ops.free[i]];
        const Vec rc = ops.B * u + mu * ops.pressure_mean;
        rhs.segment(nf, np) = -rc;
        rhs[nf + np] = -ops.pressure_mean.dot(p);

        const double res = rhs.norm();
        if (report) report->residual_norms.push_back(res);
        if (res0 < 0.0) res0 = res;
        if (res <= abs_tol || res <= rel_tol * res0) {
            if (report) report->iterations = it;
            return;
        }
        if (it == max_iters)
            throw SolverError("Newton failed to converge at t=" + std::to_string(t_new) +
                              " (residual " + std::to_string(res) + ")");

        SparseMat K = c0_over_dt * ops.M + problem.nu * ops.A;
        if (convection) K = K + assemble_convection(space, u) + assemble_convection_dw(space, u);

        std::vector<Triplet> trips;
        trips.reserve(K.nonZeros() + 3 * ops.B.nonZeros() + 2 * np);
        for (int k = 0; k < K.outerSize(); ++k) {
            for (SparseMat::InnerIterator iter(K, k); iter; ++iter) {
                const int fi = ops.dof_to_free[iter.row()];
                const int fj = ops.dof_to_free[iter.col()];
                if (fi >= 0 && fj >= 0) trips.emplace_back(fi, fj, iter.value());
            }
        }
        for (int k = 0; k < ops.B.outerSize(); ++k) {
            for (SparseMat::InnerIterator iter(ops.B, k); iter; ++iter) {
                const int fj = ops.dof_to_free[iter.col()];
                if (fj < 0) continue;
                trips.emplace_back(nf + iter.row(), fj, iter.value());       // B block
                trips.emplace_back(fj, nf + iter.row(), iter.value());       // B^T block
            }
        }
        for (int q = 0; q < np; ++q) {
            trips.emplace_back(nf + q, nf + np, ops.pressure_mean[q]);
            trips.emplace_back(nf + np, nf + q, ops.pressure_mean[q]);
        }
        SparseMat J(n_sys, n_sys);
        J.setFromTriplets(trips.begin(), trips.end());

        Eigen::SparseLU<SparseMat> lu(J);
        if (lu.info() != Eigen::Success)
            throw SolverError("singular factorization at t=" + std::to_string(t_new));
        const Vec dx = lu.solve(rhs);

        for (int i = 0; i < nf; ++i) u[ops.free[i]] += dx[i];
        p += dx.segment(nf, np);
        mu += dx[nf + np];
    }
}

}  // namespace dns_detail

struct DnsResult {
    std::vector<Vec> trajectory;  // velocity at t_0 .. t_M
    std::vector<double> times;
    SnapshotSet snapshots;
    std::vector<int> newton_iterations;
};

/// Full-order implicit NSE solve. BDF2 starts with a single backward Euler
/// step. Snapshots are recorded from step 1 onwards, after warmup_skip steps,
/// every `stride` steps.
inline DnsResult solve_nse(const NSEProblem& problem, const TaylorHoodSpace& space,
                           TimeScheme scheme, int stride = 1, int warmup_skip = 0,
                           bool convection = true) {
    problem.validate();
    const DnsOperators ops = build_dns_operators(space);
    const int n_steps = static_cast<int>(std::llround(problem.T / problem.dt));

    DnsResult result;
    result.snapshots.fingerprint = space.fingerprint();
    result.snapshots.dt_snap = problem.dt * stride;

    Vec u = problem.initial ? interpolate(problem.initial, space)
                            : Vec::Zero(space.n_velocity_dofs());
    apply_dirichlet(space, problem.dirichlet, 0.0, u);
    Vec p = Vec::Zero(space.n_pressure_dofs());
    double mu = 0.0;

    result.trajectory.push_back(u);
    result.times.push_back(0.0);

    Vec u_prev = u;  // u^{n-1} for BDF2
    for (int n = 0; n < n_steps; ++n) {
        const double t_new = (n + 1) * problem.dt;
        NewtonReport report;
        if (scheme == TimeScheme::Bdf2 && n == 0) {
            // Second-order start-up: Richardson extrapolation of backward
            // Euler (one full step against two half steps).
            u_prev = u;
            Vec u_full = u, u_half = u;
            Vec p_full = p, p_half = p;
            double mu_full = mu, mu_half = mu;
            dns_detail::implicit_step(ops, problem, 1.0 / problem.dt,
                                      ops.M * u / problem.dt, t_new, convection, u_full, p_full,
                                      mu_full, &report);
            const double hdt = 0.5 * problem.dt;
            dns_detail::implicit_step(ops, problem, 1.0 / hdt, ops.M * u / hdt, 0.5 * t_new,
                                      convection, u_half, p_half, mu_half, nullptr);
            Vec u_half0 = u_half;
            dns_detail::implicit_step(ops, problem, 1.0 / hdt, ops.M * u_half0 / hdt, t_new,
                                      convection, u_half, p_half, mu_half, nullptr);
            u = 2.0 * u_half - u_full;
            p = 2.0 * p_half - p_full;
            mu = 2.0 * mu_half - mu_full;
            apply_dirichlet(space, problem.dirichlet, t_new, u);
        } else {
            Vec rhs_time;
            double c0_over_dt;
            if (scheme == TimeScheme::Bdf2) {
                c0_over_dt = 1.5 / problem.dt;
                rhs_time = ops.M * (2.0 * u - 0.5 * u_prev) / problem.dt;
            } else {
                c0_over_dt = 1.0 / problem.dt;
                rhs_time = ops.M * u / problem.dt;
            }
            u_prev = u;
            dns_detail::implicit_step(ops, problem, c0_over_dt, rhs_time, t_new, convection, u, p,
                                      mu, &report);
        }
        result.newton_iterations.push_back(report.iterations);
        result.trajectory.push_back(u);
        result.times.push_back(t_new);
        const int step_index = n + 1;
        if (step_index > warmup_skip && (step_index - warmup_skip - 1) % stride == 0)
            result.snapshots.snapshots.push_back(u);
    }
    return result;
}

/// Single nonlinear implicit step exposed for tests: backward Euler from the
/// given state.
inline Vec nonlinear_step_solve(const DnsOperators& ops, const NSEProblem& problem,
                                const Vec& u_old, double dt, double t_new,
                                bool convection = true, NewtonReport* report = nullptr) {
    if (dt <= 0.0) throw ValidationError("nonlinear_step_solve: dt must be positive");
    Vec u = u_old;
    Vec p = Vec::Zero(ops.space->n_pressure_dofs());
    double mu = 0.0;
    const Vec rhs_time = ops.M * u_old / dt;
    dns_detail::implicit_step(ops, problem, 1.0 / dt, rhs_time, t_new, convection, u, p, mu,
                              report);
    return u;
}

struct StokesSolution {
    Vec u;
    Vec p;
};

/// Steady Stokes solve, used by the spatial-order studies.
inline StokesSolution solve_steady_stokes(const TaylorHoodSpace& space, double nu,
                                          const VectorField& forcing,
                                          const VectorField& dirichlet) {
    const DnsOperators ops = build_dns_operators(space);
    const int nf = ops.n_free();
    const int np = space.n_pressure_dofs();
    const int n_sys = nf + np + 1;

    Vec u = Vec::Zero(space.n_velocity_dofs());
    apply_dirichlet(space, dirichlet, 0.0, u);
    const Vec F = forcing ? assemble_load(space, forcing, 0.0) : Vec::Zero(u.size());

    const Vec rm = nu * (ops.A * u) - F;  // boundary lift folded into the rhs
    Vec rhs = Vec::Zero(n_sys);
    for (int i = 0; i < nf; ++i) rhs[i] = -rm[ops.free[i]];
    rhs.segment(nf, np) = -(ops.B * u);

    std::vector<Triplet> trips;
    const SparseMat K = nu * ops.A;
    for (int k = 0; k < K.outerSize(); ++k) {
        for (SparseMat::InnerIterator iter(K, k); iter; ++iter) {
            const int fi = ops.dof_to_free[iter.row()];
            const int fj = ops.dof_to_free[iter.col()];
            if (fi >= 0 && fj >= 0) trips.emplace_back(fi, fj, iter.value());
        }
    }
    for (int k = 0; k < ops.B.outerSize(); ++k) {
        for (SparseMat::InnerIterator iter(ops.B, k); iter; ++iter) {
            const int fj = ops.dof_to_free[iter.col()];
            if (fj < 0) continue;
            trips.emplace_back(nf + iter.row(), fj, iter.value());
            trips.emplace_back(fj, nf + iter.row(), iter.value());
        }
    }
    for (int q = 0; q < np; ++q) {
        trips.emplace_back(nf + q, nf + np, ops.pressure_mean[q]);
        trips.emplace_back(nf + np, nf + q, ops.pressure_mean[q]);
    }
    SparseMat J(n_sys, n_sys);
    J.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SparseMat> lu(J);
    if (lu.info() != Eigen::Success) throw SolverError("steady Stokes factorization failed");
    const Vec x = lu.solve(rhs);

    StokesSolution sol;
    sol.u = u;
    for (int i = 0; i < nf; ++i) sol.u[ops.free[i]] += x[i];
    sol.p = x.segment(nf, np);
    return sol;
}

}  // namespace vmspod
