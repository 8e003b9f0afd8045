#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "vmspod/assembly.hpp"
#include "vmspod/dns.hpp"
#include "vmspod/errors.hpp"
#include "vmspod/pod.hpp"

namespace vmspod {

/// Reduced Galerkin operators: stiffness, convection tensor and forcing.
/// The reduced mass matrix is the identity by mass-orthonormality of the
/// modes. T[j](k,i) = b(psi_j, psi_k, psi_i), skew in the last two slots.
struct ReducedSystem {
    int r = 0;
    double nu = 0.0;
    Mat S;                              // r x r reduced stiffness
    std::vector<Mat> T;                 // r matrices of size r x r
    std::function<Vec(double)> f_r;     // reduced force evaluator; null means zero

    /// N(a, b)_i = sum_{jk} a_j b_k T[j](k, i).
    Vec convect(const Vec& a, const Vec& b) const {
        Vec out = Vec::Zero(r);
        for (int j = 0; j < r; ++j) out += a[j] * (b.transpose() * T[j]).transpose();
        return out;
    }

    /// Jacobian of N(w, w) with respect to w: dN_i/dw_m.
    Mat convect_jacobian(const Vec& w) const {
        Mat J = Mat::Zero(r, r);
        for (int m = 0; m < r; ++m) {
            J.col(m) += (w.transpose() * T[m]).transpose();  // first-slot derivative
            J += w[m] * T[m].transpose();                    // second-slot derivative
        }
        return J;
    }

    /// Reduced force f_r(t); zero when no evaluator is installed.
    Vec force(double t) const { return f_r ? f_r(t) : Vec::Zero(r); }
};

inline ReducedSystem build_reduced_system(const PodBasis& basis, const TaylorHoodSpace& space,
                                          const SparseMat& A_h, const NSEProblem& problem) {
    if (basis.fingerprint != space.fingerprint())
        throw CompatibilityError("basis fingerprint does not match the space");
    ReducedSystem sys;
    sys.r = basis.r();
    sys.nu = problem.nu;
    sys.S = pod_stiffness(basis, A_h);
    if (problem.forcing) {
        // f_r(t)_i = (f(t), psi_i), projected through the full-order load
        // vector; the space reference must outlive the reduced system
        Mat Psi(basis.n_u(), sys.r);
        for (int i = 0; i < sys.r; ++i) Psi.col(i) = basis.modes[i];
        const TaylorHoodSpace* sp = &space;
        sys.f_r = [Psi = std::move(Psi), sp, f = problem.forcing](double t) -> Vec {
            return Psi.transpose() * assemble_load(*sp, f, t);
        };
    }

    sys.T.assign(sys.r, Mat::Zero(sys.r, sys.r));
    for (int j = 0; j < sys.r; ++j) {
        const SparseMat Nj = assemble_convection(space, basis.modes[j]);
        for (int k = 0; k < sys.r; ++k) {
            const Vec y = Nj * basis.modes[k];
            for (int i = 0; i < sys.r; ++i) sys.T[j](k, i) = basis.modes[i].dot(y);
        }
    }
    return sys;
}

namespace rom_detail {

/// Newton solve of c0/dt (a - hist_scale...) ... in the generic form
///   (c0/dt) a + nu S a + N(a, a) - f_r(t_new) - rhs = 0.
inline Vec step1_solve(const Vec& rhs, double c0_over_dt, double t_new, const ReducedSystem& sys,
                       const Vec& guess, int max_iters = 25, double abs_tol = 1e-11) {
    Vec a = guess;
    const Vec f = sys.force(t_new);
    for (int it = 0; it <= max_iters; ++it) {
        const Vec g = c0_over_dt * a + sys.nu * (sys.S * a) + sys.convect(a, a) - f - rhs;
        if (!g.allFinite())
            throw SolverError("reduced Newton produced non-finite residual at t=" +
                              std::to_string(t_new));
        if (g.norm() <= abs_tol) return a;
        if (it == max_iters)
            throw SolverError("reduced Newton failed to converge at t=" + std::to_string(t_new) +
                              " (residual " + std::to_string(g.norm()) + ")");
        const Mat J = c0_over_dt * Mat::Identity(sys.r, sys.r) + sys.nu * sys.S +
                      sys.convect_jacobian(a);
        a -= J.partialPivLu().solve(g);
    }
    return a;  // unreachable
}

}  // namespace rom_detail

/// One backward-Euler Galerkin step: (a_w - a_u)/dt + nu S a_w + N(a_w,a_w)
/// = f_r(t_new).
inline Vec step1_backward_euler(const Vec& a_u, double dt, double t_new,
                                const ReducedSystem& sys) {
    if (dt <= 0.0) throw ValidationError("step1_backward_euler: dt must be positive");
    return rom_detail::step1_solve(a_u / dt, 1.0 / dt, t_new, sys, a_u);
}

/// One BDF2 Galerkin step: (3a_w - 4a_u + a_um1)/(2dt) + nu S a_w +
/// N(a_w,a_w) = f_r(t_new).
inline Vec step1_bdf2(const Vec& a_u, const Vec& a_um1, double dt, double t_new,
                      const ReducedSystem& sys) {
    if (dt <= 0.0) throw ValidationError("step1_bdf2: dt must be positive");
    return rom_detail::step1_solve((2.0 * a_u - 0.5 * a_um1) / dt, 1.5 / dt, t_new, sys,
                                   a_u);
}

/// Per-step energy accounting of the post-processing filter.
struct LedgerRow {
    double diss_step2 = 0.0;  // 2 nu_T dt q^T D q
    double lhs = 0.0;         // ||a_w||^2
    double rhs = 0.0;         // ||a_u||^2 + dissipation
    double rel_gap = 0.0;
    bool defect = false;      // identity violated beyond 1e-9 relative
};

struct ROMTrajectory {
    std::vector<double> times;
    std::vector<Vec> a_w;  // intermediate states (a_w[0] duplicates a_u[0])
    std::vector<Vec> a_u;  // post-processed states
    std::vector<LedgerRow> ledger;

    int steps() const { return static_cast<int>(times.size()) - 1; }
};

/// Galerkin POD evolution (no Step 2). BDF2 uses the supplied second level
/// when given, otherwise a single backward-Euler step synthesizes it.
inline ROMTrajectory run_pod_g(const Vec& a0, const ReducedSystem& sys, double dt, int steps,
                               TimeScheme scheme, std::optional<Vec> a1 = {},
                               double t0 = 0.0) {
    if (dt <= 0.0) throw ValidationError("run_pod_g: dt must be positive");
    ROMTrajectory traj;
    traj.times.push_back(t0);
    traj.a_w.push_back(a0);
    traj.a_u.push_back(a0);
    traj.ledger.push_back({});
    Vec a_prev = a0, a_cur = a0;
    for (int n = 0; n < steps; ++n) {
        const double t_new = t0 + (n + 1) * dt;
        Vec a_next;
        if (scheme == TimeScheme::Bdf2 && n == 0) {
            a_next = a1 ? *a1 : step1_backward_euler(a_cur, dt, t_new, sys);
        } else if (scheme == TimeScheme::Bdf2) {
            a_next = step1_bdf2(a_cur, a_prev, dt, t_new, sys);
        } else {
            a_next = step1_backward_euler(a_cur, dt, t_new, sys);
        }
        a_prev = a_cur;
        a_cur = a_next;
        traj.times.push_back(t_new);
        traj.a_w.push_back(a_cur);
        traj.a_u.push_back(a_cur);
        traj.ledger.push_back({});
    }
    return traj;
}

}  // namespace vmspod
