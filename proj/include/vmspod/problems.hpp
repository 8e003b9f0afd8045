#pragma once

#include <cmath>

#include "vmspod/dns.hpp"

namespace vmspod {
namespace problems {

/// Decaying Taylor-Green vortex on the unit square, an exact NSE solution
/// with zero forcing; boundary data taken from the exact velocity.
///   u = (-cos(pi x) sin(pi y), sin(pi x) cos(pi y)) exp(-2 pi^2 nu t)
///   p = -1/4 (cos(2 pi x) + cos(2 pi y)) exp(-4 pi^2 nu t)
inline NSEProblem taylor_green(double nu, double T, double dt) {
    NSEProblem prob;
    prob.nu = nu;
    prob.T = T;
    prob.dt = dt;
    auto amp = [nu](double t) { return std::exp(-2.0 * M_PI * M_PI * nu * t); };
    prob.exact_velocity = [amp](double t, double x, double y) -> std::array<double, 2> {
        const double g = amp(t);
        return {-std::cos(M_PI * x) * std::sin(M_PI * y) * g,
                std::sin(M_PI * x) * std::cos(M_PI * y) * g};
    };
    prob.dirichlet = prob.exact_velocity;
    prob.initial = [f = prob.exact_velocity](double, double x, double y) {
        return f(0.0, x, y);
    };
    prob.forcing = nullptr;
    return prob;
}

inline ScalarField taylor_green_pressure(double nu) {
    return [nu](double t, double x, double y) {
        const double g2 = std::exp(-4.0 * M_PI * M_PI * nu * t);
        return -0.25 * (std::cos(2.0 * M_PI * x) + std::cos(2.0 * M_PI * y)) * g2;
    };
}

/// Manufactured unsteady solution with homogeneous Dirichlet data:
///   u = amp * g(t) * curl(sin^2(pi x) sin^2(pi y)),  p = 0,
///   g(t) = 1 + 0.5 sin(2 pi freq t),
/// with the forcing chosen so (u, p) solves the NSE exactly.
struct ForcedVortex {
    double nu;
    double amp = 1.0;
    double freq = 1.0;

    double g(double t) const { return amp * (1.0 + 0.5 * std::sin(2.0 * M_PI * freq * t)); }
    double gprime(double t) const {
        return amp * M_PI * freq * std::cos(2.0 * M_PI * freq * t);
    }

    std::array<double, 2> velocity(double t, double x, double y) const {
        const double s = std::sin(M_PI * x), S = std::sin(M_PI * y);
        return {M_PI * g(t) * s * s * std::sin(2.0 * M_PI * y),
                -M_PI * g(t) * std::sin(2.0 * M_PI * x) * S * S};
    }

    std::array<double, 2> forcing(double t, double x, double y) const {
        const double pi = M_PI;
        const double s = std::sin(pi * x), S = std::sin(pi * y);
        const double s2x = std::sin(2 * pi * x), s2y = std::sin(2 * pi * y);
        const double c2x = std::cos(2 * pi * x), c2y = std::cos(2 * pi * y);
        const double gt = g(t), gp = gprime(t);
        // time derivative
        const double ut0 = pi * gp * s * s * s2y;
        const double ut1 = -pi * gp * s2x * S * S;
        // Laplacian
        const double lap0 = pi * pi * pi * gt * s2y * (4.0 * c2x - 2.0);
        const double lap1 = -pi * pi * pi * gt * s2x * (4.0 * c2y - 2.0);
        // convection (u . grad) u
        const double conv0 = pi * pi * pi * gt * gt * s * s * s2x * (s2y * s2y - 2.0 * S * S * c2y);
        const double conv1 = pi * pi * pi * gt * gt * S * S * s2y * (s2x * s2x - 2.0 * s * s * c2x);
        return {ut0 - nu * lap0 + conv0, ut1 - nu * lap1 + conv1};
    }

    NSEProblem problem(double T, double dt) const {
        NSEProblem prob;
        prob.nu = nu;
        prob.T = T;
        prob.dt = dt;
        prob.exact_velocity = [*this](double t, double x, double y) { return velocity(t, x, y); };
        prob.initial = [*this](double, double x, double y) { return velocity(0.0, x, y); };
        prob.forcing = [*this](double t, double x, double y) { return forcing(t, x, y); };
        prob.dirichlet = nullptr;  // exact velocity vanishes on the boundary
        return prob;
    }
};

/// Regularized lid-driven cavity on the unit square; no-slip walls, lid
/// profile 16 x^2 (1-x)^2 ramped in with time constant ramp_tau.
inline NSEProblem lid_cavity(double nu, double T, double dt, double lid_speed = 1.0,
                             double ramp_tau = 0.25) {
    NSEProblem prob;
    prob.nu = nu;
    prob.T = T;
    prob.dt = dt;
    prob.dirichlet = [lid_speed, ramp_tau](double t, double x, double y) -> std::array<double, 2> {
        if (y >= 1.0 - 1e-12) {
            const double shape = 16.0 * x * x * (1.0 - x) * (1.0 - x);
            return {lid_speed * shape * (1.0 - std::exp(-t / ramp_tau)), 0.0};
        }
        return {0.0, 0.0};
    };
    prob.initial = nullptr;
    prob.forcing = nullptr;
    return prob;
}

/// Two-pattern rotating body force with homogeneous Dirichlet walls; used for
/// the under-resolved ROM experiments. No exact solution.
inline NSEProblem swirl(double nu, double T, double dt, double amp = 10.0, double freq = 0.5) {
    NSEProblem prob;
    prob.nu = nu;
    prob.T = T;
    prob.dt = dt;
    prob.forcing = [amp, freq](double t, double x, double y) -> std::array<double, 2> {
        const double pi = M_PI;
        const double c = std::cos(2.0 * pi * freq * t), s = std::sin(2.0 * pi * freq * t);
        const double f10 = pi * std::pow(std::sin(pi * x), 2) * std::sin(2 * pi * y);
        const double f11 = -pi * std::sin(2 * pi * x) * std::pow(std::sin(pi * y), 2);
        const double f20 = 2 * pi * std::pow(std::sin(2 * pi * x), 2) * std::sin(4 * pi * y);
        const double f21 = -2 * pi * std::sin(4 * pi * x) * std::pow(std::sin(2 * pi * y), 2);
        return {amp * (c * f10 + s * f20), amp * (c * f11 + s * f21)};
    };
    prob.initial = nullptr;
    prob.dirichlet = nullptr;
    return prob;
}

}  // namespace problems
}  // namespace vmspod
