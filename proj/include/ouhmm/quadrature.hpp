#ifndef OUHMM_QUADRATURE_HPP
#define OUHMM_QUADRATURE_HPP

#include <vector>

namespace ouhmm {

/// Nodes and weights for Gauss-Hermite quadrature:
///   integral f(t) exp(-t^2) dt  ~=  sum_k weights[k] * f(nodes[k])
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Computes the n-point rule by Newton iteration on the orthonormal Hermite
/// recurrence. n must be >= 1; values up to a few hundred are stable.
GaussHermiteRule gauss_hermite(int n);

}  // namespace ouhmm

#endif
