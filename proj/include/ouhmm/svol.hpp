#ifndef OUHMM_SVOL_HPP
#define OUHMM_SVOL_HPP

#include "ouhmm/filters.hpp"

namespace ouhmm {

/// Averaged likelihood matrix for the stochastic volatility observation
/// model: same continuous-time chain Monte Carlo as estimate_psi, but with
/// the variance-normalized kernel
///   exp(-(dy - r dt + I/2)^2 / (2 I)) / sqrt(I dt),  I = integral of h-bar.
/// Requires h-bar strictly positive (volatility bounded away from zero).
PsiEstimate svol_psi(const AveragedModel& avg, double y_prev, double y_next, double dt, double r,
                     int path_samples, RngStream& rng);

/// Reduced-dimension filter for log-price observations. The leverage
/// parameter rho never enters: the averaged filter is rho-independent by
/// construction, which the caller can rely on bit-for-bit.
Posterior svol_averaged_filter(const AveragedModel& avg, const std::vector<double>& rho0,
                               const ObservationSeries& obs, const SvolParams& svol, int path_samples,
                               RngStream rng);

}  // namespace ouhmm

#endif
