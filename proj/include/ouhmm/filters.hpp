#ifndef OUHMM_FILTERS_HPP
#define OUHMM_FILTERS_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "ouhmm/model.hpp"
#include "ouhmm/rng.hpp"
#include "ouhmm/simulate.hpp"

namespace ouhmm {

/// Thrown when a filter loses all posterior mass (every particle weight
/// underflows, or the matrix recursion reaches zero total mass).
struct FilterDivergence : std::runtime_error {
    explicit FilterDivergence(const std::string& what, int step_index = -1)
        : std::runtime_error(what), step(step_index) {}
    int step;
};

enum class Resampling { Multinomial, Systematic };
enum class WeightSpace { Log, Linear };

struct FilterOptions {
    int particles = 1000;
    double eta = 0.5;  // SIR trigger: resample iff ESS <= eta * R
    Resampling resampling = Resampling::Multinomial;
    WeightSpace weight_space = WeightSpace::Log;
    bool record_ess = false;
};

/// Posterior over regimes per observation time (k = 0..N). The conditional
/// Gaussian block of the Rao-Blackwellized filter surfaces as x_mean; the
/// ESS trace is filled only when requested.
struct Posterior {
    double obs_dt = 0.0;
    std::vector<std::vector<double>> pi;
    std::vector<int> map;
    std::vector<double> x_mean;
    std::vector<double> ess;
};

double effective_sample_size(const std::vector<double>& weights);

/// Argmax regime index; ties break to the lowest index in the canonical
/// state ordering.
int map_estimate(const std::vector<double>& pi);

/// Total variation distance (1/2) sum |p_i - q_i|.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// Weighted ensemble of regime paths, optionally carrying the OU value for
/// the full filter. Each particle owns an independent RNG substream keyed
/// by its slot index; resampling has its own stream.
struct ParticleEnsemble {
    std::vector<int> regime;
    std::vector<double> x;     // empty in the averaged filter
    std::vector<double> logw;  // normalized log-weights
    std::vector<double> w;     // normalized weights
    std::vector<RngStream> streams;
    RngStream resample_stream;
    double eta = 0.5;
    Resampling resampling = Resampling::Multinomial;
    WeightSpace weight_space = WeightSpace::Log;

    int size() const { return static_cast<int>(regime.size()); }
    std::vector<double> regime_marginal(int num_states) const;

    /// Initial ensemble for the full filter: regimes from rho0, OU values
    /// from the x0 law, uniform weights.
    static ParticleEnsemble init_full(const ModelParams& params, const FilterOptions& opts, RngStream base);
    /// Initial ensemble carrying regimes only (averaged filter).
    static ParticleEnsemble init_regime_only(const ModelParams& params, const FilterOptions& opts, RngStream base);
};

/// Draw `count` ancestor indices from the weighted empirical distribution.
std::vector<int> resample_indices(const std::vector<double>& weights, int count, Resampling kind, RngStream& rng);

/// Absorb per-particle log kernels into (logw, w) and renormalize. In Log
/// mode this is max-subtraction normalization; in Linear mode the kernels
/// are exponentiated first (provided for the equivalence property test).
/// Throws FilterDivergence when the total weight vanishes.
void absorb_log_kernels(std::vector<double>& logw, std::vector<double>& w,
                        const std::vector<double>& log_kernel, WeightSpace mode);

/// Multinomial/systematic SIR, applied iff ESS <= eta * R. Returns whether
/// a resample happened. Weights are reset to 1/R afterwards.
bool resample_sir(ParticleEnsemble& ensemble);

/// Algorithm-2 step: propagate every particle m substeps through the full
/// (Theta, X) dynamics, reweight by the Riemann likelihood of the increment
/// y_next - y_prev, renormalize, SIR per trigger. Returns the regime
/// marginal computed from the pre-SIR weights.
std::vector<double> particle_filter_step(ParticleEnsemble& ensemble, double y_prev, double y_next,
                                         const ModelParams& params);

/// Averaged-filter step: regime paths propagate under Q-bar and the weight
/// uses the Riemann sum of h-bar over the sampled regimes, so no OU values
/// are needed.
std::vector<double> averaged_particle_filter_step(ParticleEnsemble& ensemble, double y_prev, double y_next,
                                                  const AveragedModel& avg, const ModelParams& params);

Posterior particle_filter(const ModelParams& params, const ObservationSeries& obs, const FilterOptions& opts,
                          RngStream base);
Posterior averaged_particle_filter(const ModelParams& params, const AveragedModel& avg,
                                   const ObservationSeries& obs, const FilterOptions& opts, RngStream base);

/// Monte Carlo estimate of the averaged likelihood psi_ij(y_next | y_prev)
/// together with the joint kernel-times-endpoint matrix the matrix
/// recursion consumes. psi conditional means are computed from exact
/// continuous-time chain paths (exponential holding times under Q-bar) with
/// the time integral of h-bar accumulated exactly; the joint matrix couples
/// them with the exact transition probabilities, so an empty endpoint bin
/// never produces a 0/0.
struct PsiEstimate {
    Matrix psi;                                   // psi(i, j): end i given start j; 0 where absent
    std::vector<std::vector<bool>> psi_valid;     // endpoint bin nonempty
    Matrix joint;                                 // joint(i, j) = psi(i, j) * P(j -> i)
    Matrix transition;                            // exact exp(Q-bar dt), row-stochastic
    std::vector<std::vector<int>> endpoint_counts;  // [start j][end i]
};

PsiEstimate estimate_psi(const AveragedModel& avg, double y_prev, double y_next, double dt, int path_samples,
                         RngStream& rng);

/// One exact continuous-time chain path of duration dt: returns the end
/// state and the integral of h over the path.
std::pair<int, double> sample_ctmc_integral(const Matrix& q, const std::vector<double>& h, int start, double dt,
                                            RngStream& rng);

/// Reduced recursion pi_{k+1}(i) proportional to sum_j joint(i, j) pi_k(j).
std::vector<double> averaged_matrix_filter_step(const std::vector<double>& pi, const Matrix& joint);

Posterior averaged_matrix_filter(const AveragedModel& avg, const std::vector<double>& rho0,
                                 const ObservationSeries& obs, int path_samples, RngStream rng);

}  // namespace ouhmm

#endif
