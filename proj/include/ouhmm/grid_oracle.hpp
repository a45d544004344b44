#ifndef OUHMM_GRID_ORACLE_HPP
#define OUHMM_GRID_ORACLE_HPP

#include <cstdint>
#include <stdexcept>

#include "ouhmm/filters.hpp"

namespace ouhmm {

struct OracleBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridOracleConfig {
    int x_cells = 240;
    int v_cells = 256;
    /// The x grid spans [min s - x_pad, max s + x_pad], widened to cover the
    /// support of the x0 law. 4.5 is about 6.4 stationary standard
    /// deviations, so truncated mass is negligible.
    double x_pad = 4.5;
    /// Guard M * x_cells * m * N <= budget; the oracle is a desk-scale
    /// reference, not a production filter.
    std::int64_t budget = 1000000;
};

/// Brute-force forward recursion for the discrete-time model the simulator
/// samples from: the joint law over (regime, x-cell) is propagated through
/// every substep exactly (up to grid resolution), with the block Riemann
/// functional of h carried as a quantized running-sum coordinate so the
/// observation likelihood is pointwise. Used as the correctness oracle for
/// the particle filters. Throws OracleBudgetExceeded above the budget.
Posterior grid_oracle_filter(const ModelParams& params, const ObservationSeries& obs,
                             const GridOracleConfig& cfg = {});

}  // namespace ouhmm

#endif
