#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "vmspod/errors.hpp"
#include "vmspod/rom.hpp"

namespace vmspod {

/// D_{ij} = ((I - P_R) grad psi_j, (I - P_R) grad psi_i): the Gram matrix of
/// the unresolved gradient fluctuations. Symmetric PSD, first R rows and
/// columns identically zero.
struct FluctuationMatrix {
    Mat D;
    int R = 0;
    enum class Provenance { schur, bruteforce } provenance = Provenance::schur;
};

/// Builds D from the reduced stiffness alone. With the block partition
/// S_r = [[S_R, C], [C^T, S_2]] the fluctuation Gram matrix is the Schur
/// complement [[0, 0], [0, S_2 - C^T S_R^{-1} C]].
inline FluctuationMatrix build_fluctuation_matrix(const Mat& S_r, int R) {
    const int r = static_cast<int>(S_r.rows());
    if (S_r.cols() != r) throw ValidationError("build_fluctuation_matrix: S_r must be square");
    if (R < 0 || R > r)
        throw ValidationError("build_fluctuation_matrix: R must lie in [0, r]");

    FluctuationMatrix out;
    out.R = R;
    if (R == 0) {
        out.D = 0.5 * (S_r + S_r.transpose());
        return out;
    }
    out.D = Mat::Zero(r, r);
    if (R == r) return out;

    const Mat S_R = S_r.topLeftCorner(R, R);
    Eigen::SelfAdjointEigenSolver<Mat> eig(S_R);
    if (eig.info() != Eigen::Success)
        throw SolverError("build_fluctuation_matrix: eigendecomposition of S_R failed");
    const double s2 = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() <= 1e-12 * s2)
        throw ValidationError(
            "build_fluctuation_matrix: leading-block gradients are numerically linearly "
            "dependent (S_R singular); choose a smaller R");

    const Mat C = S_r.topRightCorner(R, r - R);
    const Mat S2 = S_r.bottomRightCorner(r - R, r - R);
    const Mat schur = S2 - C.transpose() * eig.eigenvectors() *
                               eig.eigenvalues().cwiseInverse().asDiagonal() *
                               eig.eigenvectors().transpose() * C;
    out.D.bottomRightCorner(r - R, r - R) = 0.5 * (schur + schur.transpose());
    return out;
}

/// Post-processing filter: (a_w - a_u)/dt = nu_T D (a_w + a_u)/2, i.e.
/// (I + cD) a_u = (I - cD) a_w with c = nu_T dt / 2 (SPD solve).
inline Vec step2_filter(const Vec& a_w, double dt, double nu_t, const FluctuationMatrix& fluct) {
    if (dt <= 0.0) throw ValidationError("step2_filter: dt must be positive");
    if (nu_t < 0.0) throw ValidationError("step2_filter: nu_T must be non-negative");
    const double c = 0.5 * nu_t * dt;
    if (c == 0.0) return a_w;
    const int r = static_cast<int>(a_w.size());
    const Mat lhs = Mat::Identity(r, r) + c * fluct.D;
    const Vec rhs = a_w - c * (fluct.D * a_w);
    Eigen::LLT<Mat> llt(lhs);
    if (llt.info() != Eigen::Success)
        throw SolverError("step2_filter: filter matrix not SPD");
    return llt.solve(rhs);
}

/// Energy bookkeeping of one filter application; checks the exact identity
/// ||a_w||^2 = ||a_u||^2 + 2 nu_T dt q^T D q with q = (a_w + a_u)/2.
inline LedgerRow dissipation_ledger(const Vec& a_w, const Vec& a_u, double dt, double nu_t,
                                    const FluctuationMatrix& fluct) {
    LedgerRow row;
    const Vec q = 0.5 * (a_w + a_u);
    row.diss_step2 = 2.0 * nu_t * dt * q.dot(fluct.D * q);
    row.lhs = a_w.squaredNorm();
    row.rhs = a_u.squaredNorm() + row.diss_step2;
    const double scale = std::max(row.lhs, 1e-300);
    row.rel_gap = std::abs(row.lhs - row.rhs) / scale;
    row.defect = row.rel_gap > 1e-9;
    return row;
}

/// Two-step VMS-POD evolution: Galerkin step then fluctuation filter, with
/// the dissipation ledger recorded every step. For BDF2 a warning callback
/// fires when nu_T >= 4 nu (sufficient-stability threshold).
inline ROMTrajectory run_vms_pod(const Vec& a0, const ReducedSystem& sys, double dt, int steps,
                                 TimeScheme scheme, double nu_t, const FluctuationMatrix& fluct,
                                 std::optional<Vec> a1 = {}, double t0 = 0.0,
                                 const std::function<void(const std::string&)>& warn = {}) {
    if (dt <= 0.0) throw ValidationError("run_vms_pod: dt must be positive");
    if (nu_t < 0.0) throw ValidationError("run_vms_pod: nu_T must be non-negative");
    if (scheme == TimeScheme::Bdf2 && nu_t >= 4.0 * sys.nu && warn)
        warn("BDF2 with nu_T >= 4 nu: outside the proven stability range "
             "(nu_T < 4 nu); continuing anyway");

    ROMTrajectory traj;
    traj.times.push_back(t0);
    traj.a_w.push_back(a0);
    traj.a_u.push_back(a0);
    traj.ledger.push_back({});
    Vec a_prev = a0, a_cur = a0;
    for (int n = 0; n < steps; ++n) {
        const double t_new = t0 + (n + 1) * dt;
        Vec w;
        if (scheme == TimeScheme::Bdf2 && n == 0) {
            if (a1) {
                // externally supplied second level bypasses both steps
                a_prev = a_cur;
                a_cur = *a1;
                traj.times.push_back(t_new);
                traj.a_w.push_back(a_cur);
                traj.a_u.push_back(a_cur);
                traj.ledger.push_back({});
                continue;
            }
            w = step1_backward_euler(a_cur, dt, t_new, sys);
        } else if (scheme == TimeScheme::Bdf2) {
            w = step1_bdf2(a_cur, a_prev, dt, t_new, sys);
        } else {
            w = step1_backward_euler(a_cur, dt, t_new, sys);
        }
        const Vec u = step2_filter(w, dt, nu_t, fluct);
        a_prev = a_cur;
        a_cur = u;
        traj.times.push_back(t_new);
        traj.a_w.push_back(w);
        traj.a_u.push_back(u);
        traj.ledger.push_back(dissipation_ledger(w, u, dt, nu_t, fluct));
    }
    return traj;
}

}  // namespace vmspod
