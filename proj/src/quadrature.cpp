#include "ouhmm/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace ouhmm {

namespace {

// Orthonormal Hermite value h_n(x) and the value one order down, for the
// weight formula w_k = 1 / (n * h_{n-1}(x_k)^2).
struct HermitePair {
    double hn;
    double hnm1;
};

HermitePair hermite_orthonormal(int n, double x) {
    double hm1 = 0.0;
    double h0 = 0.7511255444649425;  // pi^{-1/4}
    for (int j = 1; j <= n; ++j) {
        const double h1 = x * std::sqrt(2.0 / j) * h0 - std::sqrt(static_cast<double>(j - 1) / j) * hm1;
        hm1 = h0;
        h0 = h1;
    }
    return {h0, hm1};
}

}  // namespace

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    const int half = (n + 1) / 2;
    double x = 0.0;
    for (int i = 0; i < half; ++i) {
        // standard initial guesses, largest root first
        if (i == 0) {
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
        } else if (i == 2) {
            x = 1.86 * x - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            x = 1.91 * x - 0.91 * rule.nodes[1];
        } else {
            x = 2.0 * x - rule.nodes[i - 2];
        }

        for (int iter = 0; iter < 64; ++iter) {
            const HermitePair hp = hermite_orthonormal(n, x);
            const double deriv = std::sqrt(2.0 * n) * hp.hnm1;
            const double dx = hp.hn / deriv;
            x -= dx;
            if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        const HermitePair hp = hermite_orthonormal(n, x);
        rule.nodes[i] = x;
        rule.nodes[n - 1 - i] = -x;
        const double w = 1.0 / (n * hp.hnm1 * hp.hnm1);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[half - 1] = 0.0;
    return rule;
}

}  // namespace ouhmm
