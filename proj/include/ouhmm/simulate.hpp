#ifndef OUHMM_SIMULATE_HPP
#define OUHMM_SIMULATE_HPP

#include <vector>

#include "ouhmm/model.hpp"
#include "ouhmm/rng.hpp"

namespace ouhmm {

/// Test hooks that zero individual noise sources. zero_w suppresses the OU
/// driving noise, zero_z the observation noise, freeze_chain all regime
/// jumps. They exist so the degenerate-case contracts are executable.
struct NoiseHooks {
    bool zero_w = false;
    bool zero_z = false;
    bool freeze_chain = false;
};

/// One exact OU substep: a x + (1-a) theta + sqrt((1-a^2)/2) noise, with
/// a = exp(-dt_fine/epsilon). Matches the transition density of the
/// continuous model conditional on a frozen regime, so no discretization
/// bias is introduced beyond freezing the regime over the substep.
double ou_step(double x, double theta_value, double a, double noise);

/// Inverse-CDF draw of the next regime from row `current` of a
/// row-stochastic matrix.
int chain_step(int current, const Matrix& p, double u);

/// Fine-grid sample path: regimes (as indices into the state space) and OU
/// values at times l * fine_dt for l = 0..m*N.
struct HiddenPath {
    std::vector<int> theta;
    std::vector<double> x;
    double fine_dt = 0.0;
};

/// Observations at times k * obs_dt for k = 0..N, with y[0] = 0 by
/// convention (only increments carry information).
struct ObservationSeries {
    std::vector<double> y;
    double obs_dt = 0.0;
};

/// Streaming generator of (Theta, X): one observation block (m substeps) at
/// a time, so long horizons never materialize the full fine grid. The block
/// carries the Riemann functionals the filters and observation models need.
class PathSimulator {
public:
    struct Block {
        std::vector<int> theta;   // regimes at fine steps km+1 .. (k+1)m
        std::vector<double> x;    // OU values at the same steps
        double h_riemann = 0.0;   // fine_dt * sum_l h(x_l), right endpoints
        double sqrth_dw = 0.0;    // sum_l sqrt(h(x_l)) dW_l, left endpoints
    };

    PathSimulator(const ModelParams& params, RngStream rng, NoiseHooks hooks = {});

    int regime() const { return regime_; }
    double x() const { return x_; }

    /// Advances m substeps and fills `out` (buffers are reused).
    void next_block(Block& out);

private:
    ModelParams params_;
    NoiseHooks hooks_;
    RngStream rng_;
    double a_ = 0.0;
    double sigma_ = 0.0;
    double sqrt_fine_dt_ = 0.0;
    Matrix p_const_;  // substep transition when Q is constant
    bool accumulate_sqrth_ = false;
    int regime_ = 0;
    double x_ = 0.0;
};

/// Materialized Algorithm-1 path of length m*N + 1.
HiddenPath simulate_path(const ModelParams& params, RngStream rng, NoiseHooks hooks = {});

/// Riemann-sum observations over a stored path:
///   y_{k+1} = y_k + fine_dt * sum_{l=mk+1}^{m(k+1)} h(x_l) + N(0, delta_t).
ObservationSeries generate_observations(const HiddenPath& path, const ModelParams& params, RngStream rng,
                                        NoiseHooks hooks = {});

/// Stochastic volatility model parameters: drift r and leverage rho.
struct SvolParams {
    double r = 0.0;
    double rho = 0.0;

    /// rho must lie in (-1, 0] and epsilon * rho^2 < 1.
    void validate(double epsilon) const;
};

/// Log-return series of the stochastic volatility observation model:
///   y_{k+1} - y_k = r dt - I_k/2 + sqrt(eps) rho S_k + sqrt((1 - eps rho^2) I_k) Z_k
/// with I_k the Riemann integral of h over the block and S_k the Ito sum
/// of sqrt(h) against the same Brownian increments that drove the path
/// (recovered exactly by inverting ou_step). Requires h > 0 on the path.
ObservationSeries simulate_svol_returns(const HiddenPath& path, const ModelParams& params,
                                        const SvolParams& svol, RngStream rng, NoiseHooks hooks = {});

}  // namespace ouhmm

#endif
