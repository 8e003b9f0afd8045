#pragma once

#include <cassert>
#include <cmath>
#include <vector>

namespace vmspod {

/// One quadrature point on the reference triangle {(x,y): x,y >= 0, x+y <= 1}.
struct QuadPoint {
    double x;
    double y;
    double w;  // weight, sums to reference area 1/2 over the rule
};

/// Gauss-Legendre nodes/weights on [0,1], exact for polynomials of degree 2n-1.
inline void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    assert(n >= 1);
    nodes.resize(n);
    weights.resize(n);
    // Newton iteration on Legendre polynomials over [-1,1], then map to [0,1].
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

/// Quadrature rule on the reference triangle exact for polynomials of total
/// degree <= degree. Built from a tensor Gauss-Legendre rule through the Duffy
/// map (x,y) = (u, v(1-u)) with Jacobian (1-u); n = degree+1 points per
/// direction make the collapsed integrand exact.
inline std::vector<QuadPoint> triangle_rule(int degree) {
    assert(degree >= 1);
    const int n = degree + 1;
    std::vector<double> gx, gw;
    gauss_legendre_01(n, gx, gw);
    std::vector<QuadPoint> rule;
    rule.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            QuadPoint q;
            q.x = gx[i];
            q.y = gx[j] * (1.0 - gx[i]);
            q.w = gw[i] * gw[j] * (1.0 - gx[i]);
            rule.push_back(q);
        }
    }
    return rule;
}

}  // namespace vmspod
