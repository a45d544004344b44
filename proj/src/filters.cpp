#include "ouhmm/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ouhmm {

double effective_sample_size(const std::vector<double>& weights) {
    double sumsq = 0.0;
    for (double w : weights) sumsq += w * w;
    if (sumsq <= 0.0) throw FilterDivergence("effective_sample_size: all weights are zero");
    return 1.0 / sumsq;
}

int map_estimate(const std::vector<double>& pi) {
    if (pi.empty()) throw std::invalid_argument("map_estimate: empty probability vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(pi.size()); ++i) {
        if (pi[static_cast<std::size_t>(i)] > pi[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

std::vector<double> ParticleEnsemble::regime_marginal(int num_states) const {
    std::vector<double> pi(static_cast<std::size_t>(num_states), 0.0);
    for (int n = 0; n < size(); ++n) pi[static_cast<std::size_t>(regime[static_cast<std::size_t>(n)])] += w[static_cast<std::size_t>(n)];
    return pi;
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

ParticleEnsemble init_common(const ModelParams& params, const FilterOptions& opts, RngStream base, bool with_x) {
    if (opts.particles < 1) throw std::invalid_argument("particle filter: need at least one particle");
    if (opts.eta < 0.0 || opts.eta > 1.0) throw std::invalid_argument("particle filter: eta must lie in [0,1]");
    ParticleEnsemble e;
    const int R = opts.particles;
    e.eta = opts.eta;
    e.resampling = opts.resampling;
    e.weight_space = opts.weight_space;
    e.regime.resize(static_cast<std::size_t>(R));
    if (with_x) e.x.resize(static_cast<std::size_t>(R));
    e.logw.assign(static_cast<std::size_t>(R), -std::log(static_cast<double>(R)));
    e.w.assign(static_cast<std::size_t>(R), 1.0 / R);
    e.streams.reserve(static_cast<std::size_t>(R));
    const std::vector<double> rho = params.initial_law();
    for (int n = 0; n < R; ++n) {
        RngStream s = base.child(static_cast<std::uint64_t>(n));
        e.regime[static_cast<std::size_t>(n)] = sample_index(rho, s.uniform());
        if (with_x) {
            e.x[static_cast<std::size_t>(n)] =
                params.x0.sample(params.x0.kind == X0Law::Kind::Uniform ? s.uniform() : 0.0,
                                 params.x0.kind == X0Law::Kind::Gaussian ? s.gaussian() : 0.0);
        }
        e.streams.push_back(s);
    }
    e.resample_stream = base.child(0x5172ULL + static_cast<std::uint64_t>(R));
    return e;
}

// Shared tail of every particle-filter step: absorb the kernels, compute
// the regime marginal from the fresh weights, then SIR against the trigger.
std::vector<double> finish_step(ParticleEnsemble& e, std::vector<double>& log_kernel, int num_states) {
    absorb_log_kernels(e.logw, e.w, log_kernel, e.weight_space);
    std::vector<double> pi = e.regime_marginal(num_states);
    resample_sir(e);
    return pi;
}

}  // namespace

void absorb_log_kernels(std::vector<double>& logw, std::vector<double>& w,
                        const std::vector<double>& log_kernel, WeightSpace mode) {
    const std::size_t R = w.size();
    if (mode == WeightSpace::Log) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < R; ++n) {
            logw[n] += log_kernel[n];
            best = std::max(best, logw[n]);
        }
        if (!std::isfinite(best)) throw FilterDivergence("particle filter: total weight vanished");
        double total = 0.0;
        for (std::size_t n = 0; n < R; ++n) {
            w[n] = std::exp(logw[n] - best);
            total += w[n];
        }
        const double log_total = std::log(total);
        for (std::size_t n = 0; n < R; ++n) {
            w[n] /= total;
            logw[n] -= best + log_total;
        }
    } else {
        double total = 0.0;
        for (std::size_t n = 0; n < R; ++n) {
            w[n] *= std::exp(log_kernel[n]);
            total += w[n];
        }
        if (!(total > 0.0)) throw FilterDivergence("particle filter: total weight vanished");
        for (std::size_t n = 0; n < R; ++n) {
            w[n] /= total;
            logw[n] = std::log(w[n]);
        }
    }
}

ParticleEnsemble ParticleEnsemble::init_full(const ModelParams& params, const FilterOptions& opts,
                                             RngStream base) {
    return init_common(params, opts, base, true);
}

ParticleEnsemble ParticleEnsemble::init_regime_only(const ModelParams& params, const FilterOptions& opts,
                                                    RngStream base) {
    return init_common(params, opts, base, false);
}

std::vector<int> resample_indices(const std::vector<double>& weights, int count, Resampling kind,
                                  RngStream& rng) {
    const std::size_t n = weights.size();
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i];
        cdf[i] = acc;
    }
    if (!(acc > 0.0)) throw FilterDivergence("resample: all weights are zero");

    std::vector<int> out(static_cast<std::size_t>(count));
    if (kind == Resampling::Multinomial) {
        for (int k = 0; k < count; ++k) {
            const double u = rng.uniform() * acc;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            out[static_cast<std::size_t>(k)] =
                static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(n) - 1));
        }
    } else {
        const double step = acc / count;
        double u = rng.uniform() * step;
        std::size_t j = 0;
        for (int k = 0; k < count; ++k) {
            while (j + 1 < n && cdf[j] <= u) ++j;
            out[static_cast<std::size_t>(k)] = static_cast<int>(j);
            u += step;
        }
    }
    return out;
}

bool resample_sir(ParticleEnsemble& e) {
    const int R = e.size();
    const double ess = effective_sample_size(e.w);
    if (!(ess <= e.eta * R)) return false;

    const std::vector<int> idx = resample_indices(e.w, R, e.resampling, e.resample_stream);
    std::vector<int> regime(static_cast<std::size_t>(R));
    for (int n = 0; n < R; ++n) regime[static_cast<std::size_t>(n)] = e.regime[static_cast<std::size_t>(idx[static_cast<std::size_t>(n)])];
    e.regime = std::move(regime);
    if (!e.x.empty()) {
        std::vector<double> x(static_cast<std::size_t>(R));
        for (int n = 0; n < R; ++n) x[static_cast<std::size_t>(n)] = e.x[static_cast<std::size_t>(idx[static_cast<std::size_t>(n)])];
        e.x = std::move(x);
    }
    std::fill(e.w.begin(), e.w.end(), 1.0 / R);
    std::fill(e.logw.begin(), e.logw.end(), -std::log(static_cast<double>(R)));
    return true;
}

std::vector<double> particle_filter_step(ParticleEnsemble& e, double y_prev, double y_next,
                                         const ModelParams& params) {
    const int R = e.size();
    const int m = params.m;
    const double fine_dt = params.fine_dt();
    const double a = std::exp(-fine_dt / params.epsilon);
    const double dy = y_next - y_prev;
    const double inv_two_dt = 1.0 / (2.0 * params.delta_t);
    const bool xdep = params.q.x_dependent();
    Matrix p_sub;
    if (!xdep) p_sub = chain_transition_matrix(params.q.constant_matrix(), fine_dt);

    std::vector<double> log_kernel(static_cast<std::size_t>(R));
    for (int n = 0; n < R; ++n) {
        RngStream& rng = e.streams[static_cast<std::size_t>(n)];
        int th = e.regime[static_cast<std::size_t>(n)];
        double xx = e.x[static_cast<std::size_t>(n)];
        double sum_h = 0.0;
        for (int l = 0; l < m; ++l) {
            const double u = rng.uniform();
            if (params.num_states() > 1) {
                th = xdep ? chain_step(th, chain_transition_matrix(params.q.at(xx), fine_dt), u)
                          : chain_step(th, p_sub, u);
            }
            xx = ou_step(xx, params.space.level(th), a, rng.gaussian());
            sum_h += params.h(xx);
        }
        e.regime[static_cast<std::size_t>(n)] = th;
        e.x[static_cast<std::size_t>(n)] = xx;
        const double nu = dy - fine_dt * sum_h;
        log_kernel[static_cast<std::size_t>(n)] = -nu * nu * inv_two_dt;
    }
    return finish_step(e, log_kernel, params.num_states());
}

std::vector<double> averaged_particle_filter_step(ParticleEnsemble& e, double y_prev, double y_next,
                                                  const AveragedModel& avg, const ModelParams& params) {
    const int R = e.size();
    const int m = params.m;
    const double fine_dt = params.fine_dt();
    const double dy = y_next - y_prev;
    const double inv_two_dt = 1.0 / (2.0 * params.delta_t);
    const Matrix p_sub = chain_transition_matrix(avg.q_bar, fine_dt);
    const int M = params.num_states();

    std::vector<double> log_kernel(static_cast<std::size_t>(R));
    for (int n = 0; n < R; ++n) {
        RngStream& rng = e.streams[static_cast<std::size_t>(n)];
        int th = e.regime[static_cast<std::size_t>(n)];
        double sum_hbar = 0.0;
        for (int l = 0; l < m; ++l) {
            if (M > 1) th = chain_step(th, p_sub, rng.uniform());
            sum_hbar += avg.h_bar[static_cast<std::size_t>(th)];
        }
        e.regime[static_cast<std::size_t>(n)] = th;
        const double nu = dy - fine_dt * sum_hbar;
        log_kernel[static_cast<std::size_t>(n)] = -nu * nu * inv_two_dt;
    }
    return finish_step(e, log_kernel, M);
}

namespace {

Posterior run_particle_driver(const ModelParams& params, const AveragedModel* avg, const ObservationSeries& obs,
                              const FilterOptions& opts, RngStream base) {
    const int n = static_cast<int>(obs.y.size()) - 1;
    if (n < 1) throw std::invalid_argument("particle filter: observation series is empty");
    ParticleEnsemble e = avg ? ParticleEnsemble::init_regime_only(params, opts, base)
                             : ParticleEnsemble::init_full(params, opts, base);
    Posterior post;
    post.obs_dt = obs.obs_dt;
    post.pi.reserve(static_cast<std::size_t>(n) + 1);
    post.map.reserve(static_cast<std::size_t>(n) + 1);
    post.pi.push_back(e.regime_marginal(params.num_states()));
    post.map.push_back(map_estimate(post.pi.back()));
    if (opts.record_ess) post.ess.push_back(effective_sample_size(e.w));
    for (int k = 0; k < n; ++k) {
        try {
            std::vector<double> pi =
                avg ? averaged_particle_filter_step(e, obs.y[static_cast<std::size_t>(k)],
                                                    obs.y[static_cast<std::size_t>(k) + 1], *avg, params)
                    : particle_filter_step(e, obs.y[static_cast<std::size_t>(k)],
                                           obs.y[static_cast<std::size_t>(k) + 1], params);
            post.map.push_back(map_estimate(pi));
            post.pi.push_back(std::move(pi));
            if (opts.record_ess) post.ess.push_back(effective_sample_size(e.w));
        } catch (FilterDivergence& d) {
            d.step = k + 1;
            throw;
        }
    }
    return post;
}

}  // namespace

Posterior particle_filter(const ModelParams& params, const ObservationSeries& obs, const FilterOptions& opts,
                          RngStream base) {
    return run_particle_driver(params, nullptr, obs, opts, base);
}

Posterior averaged_particle_filter(const ModelParams& params, const AveragedModel& avg,
                                   const ObservationSeries& obs, const FilterOptions& opts, RngStream base) {
    return run_particle_driver(params, &avg, obs, opts, base);
}

std::pair<int, double> sample_ctmc_integral(const Matrix& q, const std::vector<double>& h, int start, double dt,
                                            RngStream& rng) {
    int state = start;
    double t = 0.0;
    double integral = 0.0;
    for (;;) {
        const double rate = -q(state, state);
        if (!(rate > 0.0)) {
            integral += h[static_cast<std::size_t>(state)] * (dt - t);
            return {state, integral};
        }
        const double tau = rng.exponential(rate);
        if (t + tau >= dt) {
            integral += h[static_cast<std::size_t>(state)] * (dt - t);
            return {state, integral};
        }
        integral += h[static_cast<std::size_t>(state)] * tau;
        t += tau;
        double u = rng.uniform() * rate;
        double acc = 0.0;
        int next = state;
        for (int j = 0; j < q.cols; ++j) {
            if (j == state) continue;
            acc += q(state, j);
            if (u < acc) {
                next = j;
                break;
            }
        }
        state = next;
    }
}

PsiEstimate estimate_psi(const AveragedModel& avg, double y_prev, double y_next, double dt, int path_samples,
                         RngStream& rng) {
    if (path_samples < 1000) throw std::invalid_argument("estimate_psi: need at least 1000 path samples");
    const int M = avg.q_bar.rows;
    const double dy = y_next - y_prev;
    const double inv_two_dt = 1.0 / (2.0 * dt);

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
            const double nu = dy - integral;
            sums[static_cast<std::size_t>(end)] += std::exp(-nu * nu * inv_two_dt);
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

std::vector<double> averaged_matrix_filter_step(const std::vector<double>& pi, const Matrix& joint) {
    const int M = joint.rows;
    if (static_cast<int>(pi.size()) != M) throw std::invalid_argument("averaged_matrix_filter_step: dimension mismatch");
    std::vector<double> next(static_cast<std::size_t>(M), 0.0);
    double total = 0.0;
    for (int i = 0; i < M; ++i) {
        double s = 0.0;
        for (int j = 0; j < M; ++j) s += joint(i, j) * pi[static_cast<std::size_t>(j)];
        next[static_cast<std::size_t>(i)] = s;
        total += s;
    }
    if (!(total > 0.0)) throw FilterDivergence("averaged matrix filter: zero posterior mass");
    for (double& v : next) v /= total;
    return next;
}

Posterior averaged_matrix_filter(const AveragedModel& avg, const std::vector<double>& rho0,
                                 const ObservationSeries& obs, int path_samples, RngStream rng) {
    const int n = static_cast<int>(obs.y.size()) - 1;
    if (n < 1) throw std::invalid_argument("averaged matrix filter: observation series is empty");
    Posterior post;
    post.obs_dt = obs.obs_dt;
    post.pi.push_back(rho0);
    post.map.push_back(map_estimate(rho0));
    for (int k = 0; k < n; ++k) {
        try {
            const PsiEstimate est = estimate_psi(avg, obs.y[static_cast<std::size_t>(k)],
                                                 obs.y[static_cast<std::size_t>(k) + 1], obs.obs_dt,
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
