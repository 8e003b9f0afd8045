#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "vmspod/dns.hpp"
#include "vmspod/problems.hpp"
#include "vmspod/snapshot_io.hpp"

using namespace vmspod;

namespace {

// Finite-difference NSE residual of an analytic (u, p) pair with forcing f;
// independent of every closed-form derivative in the problem definitions.
std::array<double, 2> fd_nse_residual(const VectorField& u, const ScalarField& p,
                                      const VectorField& f, double nu, double t, double x,
                                      double y, double h = 1e-3) {
    auto ux = [&](double tt, double xx, double yy) { return u(tt, xx, yy); };
    const auto u0 = ux(t, x, y);
    std::array<double, 2> res{};
    for (int c = 0; c < 2; ++c) {
        const double ut = (ux(t + h, x, y)[c] - ux(t - h, x, y)[c]) / (2 * h);
        const double uxx =
            (ux(t, x + h, y)[c] - 2 * u0[c] + ux(t, x - h, y)[c]) / (h * h);
        const double uyy =
            (ux(t, x, y + h)[c] - 2 * u0[c] + ux(t, x, y - h)[c]) / (h * h);
        const double dx = (ux(t, x + h, y)[c] - ux(t, x - h, y)[c]) / (2 * h);
        const double dy = (ux(t, x, y + h)[c] - ux(t, x, y - h)[c]) / (2 * h);
        const double conv = u0[0] * dx + u0[1] * dy;
        double gradp = 0.0;
        if (p) {
            gradp = c == 0 ? (p(t, x + h, y) - p(t, x - h, y)) / (2 * h)
                           : (p(t, x, y + h) - p(t, x, y - h)) / (2 * h);
        }
        const auto fv = f ? f(t, x, y) : std::array<double, 2>{0.0, 0.0};
        res[c] = ut - nu * (uxx + uyy) + conv + gradp - fv[c];
    }
    return res;
}

double mass_norm(const SparseMat& M, const Vec& u) { return std::sqrt(u.dot(M * u)); }

}  // namespace

TEST_CASE("Taylor-Green satisfies the NSE (finite-difference residual oracle)") {
    const double nu = 0.05;
    const auto prob = problems::taylor_green(nu, 1.0, 0.1);
    const auto p = problems::taylor_green_pressure(nu);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> xi(0.1, 0.9);
    for (int rep = 0; rep < 20; ++rep) {
        const auto r =
            fd_nse_residual(prob.exact_velocity, p, prob.forcing, nu, 0.3, xi(rng), xi(rng));
        CHECK(std::abs(r[0]) <= 1e-3);
        CHECK(std::abs(r[1]) <= 1e-3);
    }
}

TEST_CASE("Forced vortex forcing satisfies the NSE (finite-difference residual oracle)") {
    const problems::ForcedVortex fv{0.01, 0.7, 1.3};
    const auto prob = fv.problem(1.0, 0.1);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> xi(0.1, 0.9);
    for (int rep = 0; rep < 20; ++rep) {
        const auto r =
            fd_nse_residual(prob.exact_velocity, nullptr, prob.forcing, fv.nu, 0.42, xi(rng),
                            xi(rng));
        CHECK(std::abs(r[0]) <= 1e-3);
        CHECK(std::abs(r[1]) <= 1e-3);
    }
    // and the exact velocity vanishes on the boundary
    for (double s : {0.0, 0.3, 1.0}) {
        for (const auto& x : {std::array<double, 2>{s, 0.0}, std::array<double, 2>{s, 1.0},
                              std::array<double, 2>{0.0, s}, std::array<double, 2>{1.0, s}}) {
            const auto v = fv.velocity(0.77, x[0], x[1]);
            CHECK(std::abs(v[0]) <= 1e-14);
            CHECK(std::abs(v[1]) <= 1e-14);
        }
    }
}

TEST_CASE("rest state stays at rest") {
    const Mesh mesh = build_rect_mesh(4, 4);
    const TaylorHoodSpace space(mesh);
    NSEProblem prob;
    prob.nu = 0.1;
    prob.T = 0.5;
    prob.dt = 0.1;
    const auto res = solve_nse(prob, space, TimeScheme::BackwardEuler);
    for (const Vec& u : res.trajectory) CHECK(u.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(res.snapshots.count() == 5);
}

TEST_CASE("unforced decay: kinetic energy non-increasing for backward Euler") {
    const Mesh mesh = build_rect_mesh(6, 6);
    const TaylorHoodSpace space(mesh);
    const problems::ForcedVortex fv{0.01, 1.0, 1.0};
    NSEProblem prob;
    prob.nu = 0.01;
    prob.T = 0.5;
    prob.dt = 0.05;
    prob.initial = [&fv](double, double x, double y) { return fv.velocity(0.0, x, y); };
    const auto res = solve_nse(prob, space, TimeScheme::BackwardEuler);
    const SparseMat M = assemble_mass(space);
    for (std::size_t n = 0; n + 1 < res.trajectory.size(); ++n) {
        const double e0 = mass_norm(M, res.trajectory[n]);
        const double e1 = mass_norm(M, res.trajectory[n + 1]);
        CHECK(e1 <= e0 * (1.0 + 1e-12));
    }
}

TEST_CASE("Taylor-Green: BDF2 order 2 and backward Euler order 1 in time") {
    const Mesh mesh = build_rect_mesh(16, 16);
    const TaylorHoodSpace space(mesh);
    const SparseMat M = assemble_mass(space);
    // keep lambda*dt = 2 pi^2 nu dt well below 1 so the coarsest run is in
    // the asymptotic regime
    const double nu = 0.1;
    const double T = 0.4;

    // temporal references on the same mesh (cancels the spatial error), fine
    // enough that their own time error is negligible against the coarsest run
    auto linf_errors = [&](TimeScheme scheme, double dt_ref,
                           const std::vector<double>& dts) {
        const auto res_ref = solve_nse(problems::taylor_green(nu, T, dt_ref), space, scheme);
        std::vector<double> errs;
        for (double dt : dts) {
            const auto prob = problems::taylor_green(nu, T, dt);
            const auto res = solve_nse(prob, space, scheme);
            const int skip = static_cast<int>(std::llround(dt / dt_ref));
            double linf = 0.0;
            for (std::size_t n = 0; n < res.trajectory.size(); ++n) {
                const Vec& uref = res_ref.trajectory[n * skip];
                linf = std::max(linf, mass_norm(M, res.trajectory[n] - uref));
            }
            errs.push_back(linf);

            // absolute accuracy against the manufactured solution (spatial
            // floor plus temporal error)
            const Vec ue = interpolate(prob.exact_velocity, space, T);
            CHECK(mass_norm(M, res.trajectory.back() - ue) < 1e-2);
        }
        return errs;
    };

    const auto e2 = linf_errors(TimeScheme::Bdf2, T / 512, {0.05, 0.025, 0.0125});
    for (std::size_t k = 0; k + 1 < e2.size(); ++k) {
        const double rate = std::log2(e2[k] / e2[k + 1]);
        CHECK(rate > 1.7);
        CHECK(rate < 2.3);
    }

    const auto e1 = linf_errors(TimeScheme::BackwardEuler, T / 256, {0.1, 0.05, 0.025});
    for (std::size_t k = 0; k + 1 < e1.size(); ++k) {
        const double rate = std::log2(e1[k] / e1[k + 1]);
        CHECK(rate > 0.8);
        CHECK(rate < 1.2);
    }
}

TEST_CASE("nonlinear_step_solve: Stokes limit converges in one iteration") {
    const Mesh mesh = build_rect_mesh(4, 4);
    const TaylorHoodSpace space(mesh);
    const auto ops = build_dns_operators(space);
    const auto prob = problems::taylor_green(0.1, 1.0, 0.1);
    const Vec u0 = interpolate(prob.initial, space);
    NewtonReport report;
    nonlinear_step_solve(ops, prob, u0, 0.1, 0.1, /*convection=*/false, &report);
    CHECK(report.iterations == 1);
}

TEST_CASE("nonlinear_step_solve: quadratic Newton convergence") {
    const Mesh mesh = build_rect_mesh(6, 6);
    const TaylorHoodSpace space(mesh);
    const auto ops = build_dns_operators(space);
    // strong convection regime so several Newton iterations are needed
    problems::ForcedVortex fv{0.005, 2.0, 1.0};
    const auto prob = fv.problem(1.0, 0.1);
    const Vec u0 = interpolate(prob.initial, space);
    NewtonReport report;
    nonlinear_step_solve(ops, prob, u0, 0.1, 0.1, true, &report);
    REQUIRE(report.residual_norms.size() >= 4);
    // ratio test: residuals should decay at least superlinearly mid-iteration
    const auto& r = report.residual_norms;
    for (std::size_t k = 1; k + 2 < r.size(); ++k) {
        const double q1 = r[k + 1] / r[k];
        const double q0 = r[k] / r[k - 1];
        CHECK(q1 < 0.5 * q0 + 1e-12);  // contraction factor improves each step
    }
}

TEST_CASE("nonlinear_step_solve rejects zero time step") {
    const Mesh mesh = build_rect_mesh(4, 4);
    const TaylorHoodSpace space(mesh);
    const auto ops = build_dns_operators(space);
    const auto prob = problems::taylor_green(0.1, 1.0, 0.1);
    const Vec u0 = Vec::Zero(space.n_velocity_dofs());
    CHECK_THROWS_AS(nonlinear_step_solve(ops, prob, u0, 0.0, 0.1), ValidationError);
}

TEST_CASE("snapshot count tracks floor(T/dt)") {
    const Mesh mesh = build_rect_mesh(4, 4);
    const TaylorHoodSpace space(mesh);
    NSEProblem prob;
    prob.nu = 1.0;
    prob.T = 1.0;
    prob.dt = 0.125;
    const auto res = solve_nse(prob, space, TimeScheme::BackwardEuler);
    CHECK(res.snapshots.count() == 8);
    const auto res2 = solve_nse(prob, space, TimeScheme::BackwardEuler, /*stride=*/2);
    CHECK(res2.snapshots.count() == 4);
    CHECK(res2.snapshots.dt_snap == doctest::Approx(0.25));
}

TEST_CASE("snapshot file round-trip is byte-identical") {
    SnapshotSet set;
    set.fingerprint = 0xDEADBEEFCAFEF00DULL;
    set.dt_snap = 0.03125;
    std::mt19937 rng(9);
    std::normal_distribution<double> dist;
    for (int k = 0; k < 4; ++k) {
        Vec u(10);
        for (int i = 0; i < 10; ++i) u[i] = dist(rng);
        set.snapshots.push_back(u);
    }
    const auto path = std::filesystem::temp_directory_path() / "vmspod_test_snap.vps";
    write_snapshots(set, path.string());
    write_snapshots(set, (path.string() + ".2"));
    std::ifstream a(path, std::ios::binary), b(path.string() + ".2", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    const auto back = read_snapshots(path.string());
    CHECK(back.fingerprint == set.fingerprint);
    CHECK(back.dt_snap == set.dt_snap);
    REQUIRE(back.count() == set.count());
    for (int k = 0; k < set.count(); ++k) CHECK((back.snapshots[k] - set.snapshots[k]).norm() == 0.0);

    CHECK_THROWS_AS(read_snapshots(path.string(), 0x1234ULL), CompatibilityError);

    // corrupt the magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(read_snapshots(path.string()), FormatError);

    // truncated payload
    const auto tpath = path.string() + ".trunc";
    write_snapshots(set, tpath);
    std::filesystem::resize_file(tpath, std::filesystem::file_size(tpath) - 17);
    CHECK_THROWS_AS(read_snapshots(tpath), FormatError);

    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".2");
    std::filesystem::remove(tpath);
}
