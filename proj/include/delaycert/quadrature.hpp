#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace delaycert {

struct QuadratureRule {
    std::vector<double> nodes, weights;
};

/// m-point Gauss-Legendre rule on [a,b]; exact for polynomials of degree <= 2m-1.
inline QuadratureRule gauss_legendre(int m, double a, double b) {
    if (m < 1) throw std::invalid_argument("quadrature order must be positive");
    QuadratureRule q;
    q.nodes.resize(static_cast<std::size_t>(m));
    q.weights.resize(static_cast<std::size_t>(m));
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (m + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= m; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1, p1 = x;
            dp = m * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2 / ((1 - x * x) * dp * dp);
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        q.nodes[static_cast<std::size_t>(i)] = mid - half * x;
        q.nodes[static_cast<std::size_t>(m - 1 - i)] = mid + half * x;
        q.weights[static_cast<std::size_t>(i)] = half * w;
        q.weights[static_cast<std::size_t>(m - 1 - i)] = half * w;
    }
    return q;
}

}  // namespace delaycert
