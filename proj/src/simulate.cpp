#include "ouhmm/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace ouhmm {

double ou_step(double x, double theta_value, double a, double noise) {
    return a * x + (1.0 - a) * theta_value + std::sqrt((1.0 - a * a) * 0.5) * noise;
}

int chain_step(int current, const Matrix& p, double u) {
    const int n = p.cols;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += p(current, j);
        if (u < acc) return j;
    }
    return n - 1;  // guard against accumulated roundoff at u ~ 1
}

namespace {

int sample_index(const std::vector<double>& dist, double u) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        acc += dist[j];
        if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(dist.size()) - 1;
}

}  // namespace

PathSimulator::PathSimulator(const ModelParams& params, RngStream rng, NoiseHooks hooks)
    : params_(params), hooks_(hooks), rng_(rng) {
    params_.validate();
    const double fine_dt = params_.fine_dt();
    a_ = std::exp(-fine_dt / params_.epsilon);
    sigma_ = std::sqrt((1.0 - a_ * a_) * 0.5);
    sqrt_fine_dt_ = std::sqrt(fine_dt);
    if (!params_.q.x_dependent()) {
        p_const_ = chain_transition_matrix(params_.q.constant_matrix(), fine_dt);
    }
    accumulate_sqrth_ = params_.h.kind() == ObservationFn::Kind::PositiveBounded;

    regime_ = sample_index(params_.initial_law(), rng_.uniform());
    x_ = params_.x0.sample(params_.x0.kind == X0Law::Kind::Uniform ? rng_.uniform() : 0.0,
                           params_.x0.kind == X0Law::Kind::Gaussian ? rng_.gaussian() : 0.0);
}

void PathSimulator::next_block(Block& out) {
    const int m = params_.m;
    const double fine_dt = params_.fine_dt();
    out.theta.resize(static_cast<std::size_t>(m));
    out.x.resize(static_cast<std::size_t>(m));
    out.h_riemann = 0.0;
    out.sqrth_dw = 0.0;

    for (int l = 0; l < m; ++l) {
        int next_regime = regime_;
        if (!hooks_.freeze_chain && params_.num_states() > 1) {
            const double u = rng_.uniform();
            if (params_.q.x_dependent()) {
                // regime transition rates frozen at the pre-step x value
                const Matrix p = chain_transition_matrix(params_.q.at(x_), fine_dt);
                next_regime = chain_step(regime_, p, u);
            } else {
                next_regime = chain_step(regime_, p_const_, u);
            }
        }
        const double w = hooks_.zero_w ? 0.0 : rng_.gaussian();
        if (accumulate_sqrth_) {
            out.sqrth_dw += std::sqrt(params_.h(x_)) * sqrt_fine_dt_ * w;
        }
        regime_ = next_regime;
        x_ = ou_step(x_, params_.space.level(regime_), a_, w);
        out.theta[static_cast<std::size_t>(l)] = regime_;
        out.x[static_cast<std::size_t>(l)] = x_;
        out.h_riemann += fine_dt * params_.h(x_);
    }
}

HiddenPath simulate_path(const ModelParams& params, RngStream rng, NoiseHooks hooks) {
    PathSimulator sim(params, rng, hooks);
    const std::size_t total = static_cast<std::size_t>(params.m) * params.n_obs + 1;
    HiddenPath path;
    path.fine_dt = params.fine_dt();
    path.theta.reserve(total);
    path.x.reserve(total);
    path.theta.push_back(sim.regime());
    path.x.push_back(sim.x());
    PathSimulator::Block block;
    for (int k = 0; k < params.n_obs; ++k) {
        sim.next_block(block);
        path.theta.insert(path.theta.end(), block.theta.begin(), block.theta.end());
        path.x.insert(path.x.end(), block.x.begin(), block.x.end());
    }
    return path;
}

ObservationSeries generate_observations(const HiddenPath& path, const ModelParams& params, RngStream rng,
                                        NoiseHooks hooks) {
    const int m = params.m;
    const int n = params.n_obs;
    if (path.theta.size() != static_cast<std::size_t>(m) * n + 1 || path.x.size() != path.theta.size())
        throw std::invalid_argument("generate_observations: path length does not match params");

    const double fine_dt = params.fine_dt();
    const double sqrt_dt = std::sqrt(params.delta_t);
    ObservationSeries obs;
    obs.obs_dt = params.delta_t;
    obs.y.resize(static_cast<std::size_t>(n) + 1);
    obs.y[0] = 0.0;
    for (int k = 0; k < n; ++k) {
        double signal = 0.0;
        for (int l = m * k + 1; l <= m * (k + 1); ++l) {
            signal += params.h(path.x[static_cast<std::size_t>(l)]);
        }
        signal *= fine_dt;
        const double dz = hooks.zero_z ? 0.0 : sqrt_dt * rng.gaussian();
        obs.y[static_cast<std::size_t>(k) + 1] = obs.y[static_cast<std::size_t>(k)] + signal + dz;
    }
    return obs;
}

void SvolParams::validate(double epsilon) const {
    if (!std::isfinite(r)) throw std::invalid_argument("svol: drift r must be finite");
    if (!(rho > -1.0) || !(rho <= 0.0)) throw std::invalid_argument("svol: rho must lie in (-1, 0]");
    if (!(epsilon * rho * rho < 1.0)) throw std::invalid_argument("svol: need epsilon * rho^2 < 1");
}

ObservationSeries simulate_svol_returns(const HiddenPath& path, const ModelParams& params,
                                        const SvolParams& svol, RngStream rng, NoiseHooks hooks) {
    svol.validate(params.epsilon);
    const int m = params.m;
    const int n = params.n_obs;
    if (path.theta.size() != static_cast<std::size_t>(m) * n + 1 || path.x.size() != path.theta.size())
        throw std::invalid_argument("simulate_svol_returns: path length does not match params");

    const double fine_dt = params.fine_dt();
    const double a = std::exp(-fine_dt / params.epsilon);
    const double sigma = std::sqrt((1.0 - a * a) * 0.5);
    const double sqrt_fine_dt = std::sqrt(fine_dt);
    const double leverage = std::sqrt(params.epsilon) * svol.rho;
    const double z_scale = 1.0 - params.epsilon * svol.rho * svol.rho;

    ObservationSeries obs;
    obs.obs_dt = params.delta_t;
    obs.y.resize(static_cast<std::size_t>(n) + 1);
    obs.y[0] = 0.0;
    for (int k = 0; k < n; ++k) {
        double integral = 0.0;
        double sqrth_dw = 0.0;
        for (int l = m * k; l < m * (k + 1); ++l) {
            const double h_left = params.h(path.x[static_cast<std::size_t>(l)]);
            const double h_right = params.h(path.x[static_cast<std::size_t>(l) + 1]);
            if (!(h_left > 0.0) || !(h_right > 0.0))
                throw std::runtime_error("simulate_svol_returns: h must be strictly positive on the path");
            // recover the standardized OU noise of this substep
            double w = 0.0;
            if (sigma > 0.0) {
                const double theta_val = params.space.level(path.theta[static_cast<std::size_t>(l) + 1]);
                w = (path.x[static_cast<std::size_t>(l) + 1] - a * path.x[static_cast<std::size_t>(l)] -
                     (1.0 - a) * theta_val) /
                    sigma;
            }
            sqrth_dw += std::sqrt(h_left) * sqrt_fine_dt * w;
            integral += fine_dt * h_right;
        }
        const double zk = hooks.zero_z ? 0.0 : rng.gaussian();
        const double dy = svol.r * params.delta_t - 0.5 * integral + leverage * sqrth_dw +
                          std::sqrt(z_scale * integral) * zk;
        obs.y[static_cast<std::size_t>(k) + 1] = obs.y[static_cast<std::size_t>(k)] + dy;
    }
    return obs;
}

}  // namespace ouhmm
