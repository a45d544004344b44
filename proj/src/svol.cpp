#include "ouhmm/svol.hpp"

#include <cmath>
#include <stdexcept>

namespace ouhmm {

PsiEstimate svol_psi(const AveragedModel& avg, double y_prev, double y_next, double dt, double r,
                     int path_samples, RngStream& rng) {
    if (path_samples < 1000) throw std::invalid_argument("svol_psi: need at least 1000 path samples");
    const int M = avg.q_bar.rows;
    for (double hb : avg.h_bar) {
        if (!(hb > 0.0)) throw std::invalid_argument("svol_psi: averaged volatility must be strictly positive");
    }
    const double dy = y_next - y_prev;
    const double drift = r * dt;

    PsiEstimate est;
    est.transition = chain_transition_matrix(avg.q_bar, dt);
    est.psi = Matrix(M, M);
    est.joint = Matrix(M, M);
    est.psi_valid.assign(static_cast<std::size_t>(M), std::vector<bool>(static_cast<std::size_t>(M), false));
    est.endpoint_counts.assign(static_cast<std::size_t>(M), std::vector<int>(static_cast<std::size_t>(M), 0));

    for (int j = 0; j < M; ++j) {
        std::vector<double> sums(static_cast<std::size_t>(M), 0.0);
        for (int s = 0; s < path_samples; ++s) {
            const auto [end, integral] = sample_ctmc_integral(avg.q_bar, avg.h_bar, j, dt, rng);
            if (!(integral > 0.0)) throw std::runtime_error("svol_psi: nonpositive integrated variance");
            const double nu = dy - drift + 0.5 * integral;
            sums[static_cast<std::size_t>(end)] +=
                std::exp(-nu * nu / (2.0 * integral)) / std::sqrt(integral * dt);
            ++est.endpoint_counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(end)];
        }
        for (int i = 0; i < M; ++i) {
            const int cnt = est.endpoint_counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            if (cnt > 0) {
                est.psi(i, j) = sums[static_cast<std::size_t>(i)] / cnt;
                est.psi_valid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
                est.joint(i, j) = est.psi(i, j) * est.transition(j, i);
            }
        }
    }
    return est;
}

Posterior svol_averaged_filter(const AveragedModel& avg, const std::vector<double>& rho0,
                               const ObservationSeries& obs, const SvolParams& svol, int path_samples,
                               RngStream rng) {
    svol.validate(0.0);  // the filter itself is independent of rho and epsilon
    const int n = static_cast<int>(obs.y.size()) - 1;
    if (n < 1) throw std::invalid_argument("svol filter: observation series is empty");
    Posterior post;
    post.obs_dt = obs.obs_dt;
    post.pi.push_back(rho0);
    post.map.push_back(map_estimate(rho0));
    for (int k = 0; k < n; ++k) {
        try {
            const PsiEstimate est = svol_psi(avg, obs.y[static_cast<std::size_t>(k)],
                                             obs.y[static_cast<std::size_t>(k) + 1], obs.obs_dt, svol.r,
                                             path_samples, rng);
            post.pi.push_back(averaged_matrix_filter_step(post.pi.back(), est.joint));
            post.map.push_back(map_estimate(post.pi.back()));
        } catch (FilterDivergence& d) {
            d.step = k + 1;
            throw;
        }
    }
    return post;
}

}  // namespace ouhmm
