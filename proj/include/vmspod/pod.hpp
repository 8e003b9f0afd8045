#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vmspod/assembly.hpp"
#include "vmspod/errors.hpp"
#include "vmspod/snapshot_io.hpp"

namespace vmspod {

using Mat = Eigen::MatrixXd;

/// Eigenvalues below kRankTol * lambda_1 count as zero when deciding the
/// numerical rank of the correlation matrix (guards the 1/sqrt(lambda)
/// normalization of the modes).
inline constexpr double kRankTol = 1e-12;

/// POD basis from the method of snapshots. `modes` holds the first r
/// mass-orthonormal modes; eigenvalues and H1 norms are kept for the whole
/// numerically resolvable spectrum (d_retained entries of h1_norms,
/// eigenvalues possibly longer in memory) so tail sums stay available.
struct PodBasis {
    std::uint64_t fingerprint = 0;
    std::vector<Vec> modes;  // r dof vectors, mass-orthonormal
    Vec eigenvalues;         // descending, >= d_retained entries
    Vec h1_norms;            // ||psi_j||_1 for j = 1..d_retained
    int d_retained = 0;      // numerical rank of the correlation matrix

    int r() const { return static_cast<int>(modes.size()); }
    int n_u() const { return modes.empty() ? 0 : static_cast<int>(modes.front().size()); }
};

/// K_{kl} = (1/M) (u_k, u_l)_{M_h}. Symmetric PSD Gram matrix of the ensemble.
inline Mat build_correlation(const SnapshotSet& set, const SparseMat& M_h,
                             std::optional<std::uint64_t> expected_fingerprint = {}) {
    if (set.count() < 1) throw ValidationError("build_correlation: need at least one snapshot");
    if (expected_fingerprint && set.fingerprint != *expected_fingerprint)
        throw CompatibilityError("snapshot fingerprint does not match the configured space");
    const int m = set.count();
    Mat K(m, m);
    std::vector<Vec> Mu(m);
    for (int k = 0; k < m; ++k) Mu[k] = M_h * set.snapshots[k];
    for (int k = 0; k < m; ++k) {
        for (int l = k; l < m; ++l) {
            K(k, l) = set.snapshots[k].dot(Mu[l]) / m;
            K(l, k) = K(k, l);
        }
    }
    return K;
}

/// Optional centering: returns a copy of the ensemble with the sample mean
/// removed (off by default everywhere; kept out of the acceptance paths).
inline SnapshotSet center_snapshots(const SnapshotSet& set) {
    SnapshotSet out = set;
    if (set.count() == 0) return out;
    Vec mean = Vec::Zero(set.n_u());
    for (const Vec& u : set.snapshots) mean += u;
    mean /= set.count();
    for (Vec& u : out.snapshots) u -= mean;
    return out;
}

/// Method of snapshots: eigendecomposition of K, modes
/// psi_l = (1/sqrt(M lambda_l)) sum_i (v_l)_i u_i, with the largest-magnitude
/// entry of each mode made positive (ties to the lowest index). A_h enters
/// only through the stored H1 norms.
inline PodBasis compute_pod_basis(const Mat& K, const SnapshotSet& set, const SparseMat& M_h,
                                  const SparseMat& A_h, int r) {
    const int m = set.count();
    if (K.rows() != m || K.cols() != m)
        throw ValidationError("compute_pod_basis: correlation matrix does not match ensemble");
    if (r < 0) throw ValidationError("compute_pod_basis: r must be non-negative");

    Eigen::SelfAdjointEigenSolver<Mat> eig(K);
    if (eig.info() != Eigen::Success)
        throw SolverError("compute_pod_basis: eigendecomposition failed");

    PodBasis basis;
    basis.fingerprint = set.fingerprint;
    basis.eigenvalues = eig.eigenvalues().reverse();  // descending
    const Mat V = eig.eigenvectors().rowwise().reverse();

    const double lam1 = std::max(basis.eigenvalues[0], 0.0);
    int rank = 0;
    while (rank < m && basis.eigenvalues[rank] >= kRankTol * lam1 &&
           basis.eigenvalues[rank] > 0.0)
        ++rank;
    basis.d_retained = rank;
    if (r > rank)
        throw ValidationError("compute_pod_basis: requested r=" + std::to_string(r) +
                              " exceeds the numerical rank " + std::to_string(rank) +
                              " of the snapshot ensemble");

    std::vector<Vec> all_modes(rank);
    basis.h1_norms = Vec::Zero(rank);
    for (int l = 0; l < rank; ++l) {
        Vec psi = Vec::Zero(set.n_u());
        for (int i = 0; i < m; ++i) psi += V(i, l) * set.snapshots[i];
        psi /= std::sqrt(static_cast<double>(m) * basis.eigenvalues[l]);
        int imax = 0;
        psi.cwiseAbs().maxCoeff(&imax);
        if (psi[imax] < 0.0) psi = -psi;
        basis.h1_norms[l] = std::sqrt(psi.dot(M_h * psi) + psi.dot(A_h * psi));
        all_modes[l] = std::move(psi);
    }
    basis.modes.assign(all_modes.begin(), all_modes.begin() + r);
    return basis;
}

/// M_h-orthogonal projection coefficients a = Psi^T M_h field (the reduced
/// mass matrix is the identity).
inline Vec l2_project(const Vec& field, const PodBasis& basis, const SparseMat& M_h) {
    const Vec Mf = M_h * field;
    Vec a(basis.r());
    for (int i = 0; i < basis.r(); ++i) a[i] = basis.modes[i].dot(Mf);
    return a;
}

/// Full-order field from reduced coefficients: Psi a.
inline Vec reconstruct(const Vec& a, const PodBasis& basis) {
    if (a.size() != basis.r())
        throw ValidationError("reconstruct: coefficient size does not match basis rank");
    Vec u = Vec::Zero(basis.n_u());
    for (int i = 0; i < basis.r(); ++i) u += a[i] * basis.modes[i];
    return u;
}

struct ProjectionErrorReport {
    double direct = 0.0;      // (1/M) sum_k ||u_k - P_r u_k||^2 by brute force
    double eigen_tail = 0.0;  // sum_{i>r} lambda_i
};

/// Both sides of the snapshot-optimality identity, reported independently.
inline ProjectionErrorReport projection_error(const SnapshotSet& set, const PodBasis& basis,
                                              const SparseMat& M_h, int r) {
    if (r < 0 || r > basis.r())
        throw ValidationError("projection_error: r out of range for this basis");
    ProjectionErrorReport rep;
    const int m = set.count();
    for (const Vec& u : set.snapshots) {
        Vec res = u;
        const Vec Mu = M_h * u;
        for (int i = 0; i < r; ++i) res -= basis.modes[i].dot(Mu) * basis.modes[i];
        rep.direct += res.dot(M_h * res) / m;
    }
    for (int i = r; i < basis.eigenvalues.size(); ++i)
        rep.eigen_tail += std::max(basis.eigenvalues[i], 0.0);
    return rep;
}

/// S_r = Psi^T A_h Psi, the reduced stiffness (symmetric PSD).
inline Mat pod_stiffness(const PodBasis& basis, const SparseMat& A_h) {
    const int r = basis.r();
    Mat S(r, r);
    std::vector<Vec> Apsi(r);
    for (int j = 0; j < r; ++j) Apsi[j] = A_h * basis.modes[j];
    for (int i = 0; i < r; ++i) {
        for (int j = i; j < r; ++j) {
            S(i, j) = basis.modes[i].dot(Apsi[j]);
            S(j, i) = S(i, j);
        }
    }
    return 0.5 * (S + S.transpose());
}

/// epsilon(cutoff) = sqrt(sum_{j > cutoff} ||psi_j||_1^2 lambda_j) over the
/// retained spectrum.
inline double epsilon_tail(const PodBasis& basis, int cutoff) {
    if (cutoff < 0 || cutoff > basis.d_retained)
        throw ValidationError("epsilon_tail: cutoff out of range [0, d_retained]");
    double s = 0.0;
    for (int j = cutoff; j < basis.d_retained; ++j)
        s += basis.h1_norms[j] * basis.h1_norms[j] * basis.eigenvalues[j];
    return std::sqrt(s);
}

inline constexpr std::uint16_t kBasisFormatVersion = 1;

inline void write_basis(const PodBasis& basis, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os.write("VPB1", 4);
    io_detail::write_pod(os, kBasisFormatVersion);
    io_detail::write_pod(os, basis.fingerprint);
    io_detail::write_pod(os, static_cast<std::uint32_t>(basis.r()));
    io_detail::write_pod(os, static_cast<std::uint32_t>(basis.d_retained));
    io_detail::write_pod(os, static_cast<std::uint32_t>(basis.n_u()));
    for (int j = 0; j < basis.d_retained; ++j) io_detail::write_pod(os, basis.eigenvalues[j]);
    for (int j = 0; j < basis.d_retained; ++j) io_detail::write_pod(os, basis.h1_norms[j]);
    for (const Vec& psi : basis.modes)
        os.write(reinterpret_cast<const char*>(psi.data()),
                 static_cast<std::streamsize>(sizeof(double)) * psi.size());
    if (!os) throw FormatError("write failed: " + path);
}

inline PodBasis read_basis(const std::string& path,
                           std::optional<std::uint64_t> expected_fingerprint = {}) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VPB1", 4) != 0)
        throw FormatError("bad magic in basis file: " + path);
    const auto version = io_detail::read_pod<std::uint16_t>(is, "version");
    if (version != kBasisFormatVersion)
        throw FormatError("unsupported basis format version " + std::to_string(version));
    PodBasis basis;
    basis.fingerprint = io_detail::read_pod<std::uint64_t>(is, "fingerprint");
    if (expected_fingerprint && basis.fingerprint != *expected_fingerprint)
        throw CompatibilityError("basis fingerprint does not match the configured space");
    const auto r = io_detail::read_pod<std::uint32_t>(is, "mode count");
    basis.d_retained = static_cast<int>(io_detail::read_pod<std::uint32_t>(is, "retained rank"));
    const auto n = io_detail::read_pod<std::uint32_t>(is, "dof count");
    basis.eigenvalues.resize(basis.d_retained);
    for (int j = 0; j < basis.d_retained; ++j)
        basis.eigenvalues[j] = io_detail::read_pod<double>(is, "eigenvalue");
    basis.h1_norms.resize(basis.d_retained);
    for (int j = 0; j < basis.d_retained; ++j)
        basis.h1_norms[j] = io_detail::read_pod<double>(is, "H1 norm");
    basis.modes.resize(r);
    for (auto& psi : basis.modes) {
        psi.resize(n);
        is.read(reinterpret_cast<char*>(psi.data()),
                static_cast<std::streamsize>(sizeof(double)) * n);
        if (!is) throw FormatError("truncated basis payload: " + path);
    }
    return basis;
}

}  // namespace vmspod
