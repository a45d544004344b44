#ifndef OUHMM_RAO_BLACKWELL_HPP
#define OUHMM_RAO_BLACKWELL_HPP

#include <vector>

#include "ouhmm/filters.hpp"

namespace ouhmm {

/// Block-form matrices of the conditionally linear-Gaussian OU recursion
///   xvec_{k+1} = A xvec_k + B thetavec_{k+1} + R wvec_{k+1},
/// where xvec stacks the m within-block OU values newest first (index 0 is
/// time (k+1)m, index m-1 is time km+1) and thetavec/wvec stack the regime
/// levels and standard normal draws the same way. H maps xvec onto the
/// observation increment via the Riemann sum: H = fine_dt * h * (1,..,1).
struct RbMatrices {
    Matrix a_mat;           // m x m, only the first column is nonzero
    Matrix b_mat;           // (1 - a) * unit upper triangular powers of a
    Matrix r_mat;           // sqrt((1 - a^2)/2) * the same triangular factor
    std::vector<double> h_vec;
    double a = 0.0;
    int m = 0;
};

/// Requires 0 < a <= 1. h_coeff is the slope of the linear observation
/// function; fine_dt scales the Riemann weights in H.
RbMatrices rb_build_matrices(double a, int m, double h_coeff, double fine_dt);

/// Convenience overload from model parameters; rejects nonlinear h.
RbMatrices rb_build_matrices(const ModelParams& params);

/// Data-independent covariance leg of one Kalman step.
struct RbCovarianceStep {
    Matrix sigma_pred;          // A Sigma A^T + R R^T
    double innovation_var = 0;  // H sigma_pred H^T + delta_t
    std::vector<double> gain;   // sigma_pred H^T / innovation_var
    Matrix sigma_post;          // (I - K H) sigma_pred, symmetrized
};

RbCovarianceStep rb_covariance_step(const Matrix& sigma, const RbMatrices& rb, double delta_t);

/// Particles carry a regime path plus the Kalman mean vector of the OU
/// block; the covariance is shared because it evolves independently of both
/// the data and the sampled regimes.
struct RbEnsemble {
    std::vector<int> regime;    // regime at the block end, per particle
    std::vector<double> xhat;   // R x m row-major mean vectors, newest first
    std::vector<double> logw;
    std::vector<double> w;
    std::vector<RngStream> streams;
    RngStream resample_stream;
    Matrix sigma;
    int m = 0;
    double eta = 0.5;
    Resampling resampling = Resampling::Multinomial;
    WeightSpace weight_space = WeightSpace::Log;
    double last_x_mean = 0.0;  // weighted conditional mean of X at the last step, pre-SIR

    int size() const { return static_cast<int>(regime.size()); }
    std::vector<double> regime_marginal(int num_states) const;
};

RbEnsemble rb_init(const ModelParams& params, const FilterOptions& opts, RngStream base);

/// SIR over (regime, xhat) pairs, applied iff ESS <= eta * R.
bool rb_resample_sir(RbEnsemble& ensemble);

/// Algorithm-3 step: shared covariance update, per-particle regime
/// propagation, Kalman predict/weight/update, then SIR. Returns the regime
/// marginal from the pre-SIR weights.
std::vector<double> rb_filter_step(RbEnsemble& ensemble, double y_prev, double y_next, const RbMatrices& rb,
                                   const ModelParams& params);

/// Whole-series driver; the posterior also carries the weighted mean of the
/// OU value at each observation time.
Posterior rb_filter(const ModelParams& params, const ObservationSeries& obs, const FilterOptions& opts,
                    RngStream base);

}  // namespace ouhmm

#endif
