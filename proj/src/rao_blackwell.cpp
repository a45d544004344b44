#include "ouhmm/rao_blackwell.hpp"

#include <cmath>
#include <stdexcept>

namespace ouhmm {

RbMatrices rb_build_matrices(double a, int m, double h_coeff, double fine_dt) {
    if (!(a > 0.0) || !(a <= 1.0)) throw std::invalid_argument("rb_build_matrices: a must lie in (0, 1]");
    if (m < 1) throw std::invalid_argument("rb_build_matrices: m must be >= 1");
    RbMatrices rb;
    rb.a = a;
    rb.m = m;
    rb.a_mat = Matrix(m, m);
    rb.b_mat = Matrix(m, m);
    rb.r_mat = Matrix(m, m);
    rb.h_vec.assign(static_cast<std::size_t>(m), fine_dt * h_coeff);

    const double noise = std::sqrt((1.0 - a * a) * 0.5);
    for (int r = 0; r < m; ++r) {
        rb.a_mat(r, 0) = std::pow(a, m - r);
        double p = 1.0;
        for (int c = r; c < m; ++c) {
            rb.b_mat(r, c) = (1.0 - a) * p;
            rb.r_mat(r, c) = noise * p;
            p *= a;
        }
    }
    return rb;
}

RbMatrices rb_build_matrices(const ModelParams& params) {
    if (!params.h.is_linear())
        throw std::invalid_argument("rb_build_matrices: the Rao-Blackwellized filter requires linear h");
    const double a = std::exp(-params.fine_dt() / params.epsilon);
    return rb_build_matrices(a, params.m, params.h.linear_coeff(), params.fine_dt());
}

RbCovarianceStep rb_covariance_step(const Matrix& sigma, const RbMatrices& rb, double delta_t) {
    const int m = rb.m;
    RbCovarianceStep step;

    // A has a single nonzero column, so A Sigma A^T = sigma(0,0) * col col^T.
    step.sigma_pred = Matrix(m, m);
    const double s00 = sigma(0, 0);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            step.sigma_pred(r, c) = s00 * rb.a_mat(r, 0) * rb.a_mat(c, 0);
    // + R R^T (covariance of the stacked substep noise)
    for (int r = 0; r < m; ++r) {
        for (int c = r; c < m; ++c) {
            double v = 0.0;
            for (int k = c; k < m; ++k) v += rb.r_mat(r, k) * rb.r_mat(c, k);
            step.sigma_pred(r, c) += v;
            if (c != r) step.sigma_pred(c, r) += v;
        }
    }

    std::vector<double> sh = matvec(step.sigma_pred, rb.h_vec);
    double hsh = 0.0;
    for (int r = 0; r < m; ++r) hsh += rb.h_vec[static_cast<std::size_t>(r)] * sh[static_cast<std::size_t>(r)];
    step.innovation_var = hsh + delta_t;
    if (!(step.innovation_var > 0.0))
        throw std::runtime_error("rb_covariance_step: nonpositive innovation variance");

    step.gain.resize(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) step.gain[static_cast<std::size_t>(r)] = sh[static_cast<std::size_t>(r)] / step.innovation_var;

    step.sigma_post = Matrix(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            step.sigma_post(r, c) =
                step.sigma_pred(r, c) - step.gain[static_cast<std::size_t>(r)] * sh[static_cast<std::size_t>(c)];
    // symmetrize against roundoff
    for (int r = 0; r < m; ++r) {
        for (int c = r + 1; c < m; ++c) {
            const double v = 0.5 * (step.sigma_post(r, c) + step.sigma_post(c, r));
            step.sigma_post(r, c) = v;
            step.sigma_post(c, r) = v;
        }
    }
    return step;
}

std::vector<double> RbEnsemble::regime_marginal(int num_states) const {
    std::vector<double> pi(static_cast<std::size_t>(num_states), 0.0);
    for (int n = 0; n < size(); ++n) pi[static_cast<std::size_t>(regime[static_cast<std::size_t>(n)])] += w[static_cast<std::size_t>(n)];
    return pi;
}

RbEnsemble rb_init(const ModelParams& params, const FilterOptions& opts, RngStream base) {
    if (!params.h.is_linear()) throw std::invalid_argument("rb filter: requires linear h");
    if (opts.particles < 1) throw std::invalid_argument("rb filter: need at least one particle");
    RbEnsemble e;
    const int R = opts.particles;
    const int m = params.m;
    e.m = m;
    e.eta = opts.eta;
    e.resampling = opts.resampling;
    e.weight_space = opts.weight_space;
    e.regime.resize(static_cast<std::size_t>(R));
    e.xhat.assign(static_cast<std::size_t>(R) * m, params.x0.mean());
    e.logw.assign(static_cast<std::size_t>(R), -std::log(static_cast<double>(R)));
    e.w.assign(static_cast<std::size_t>(R), 1.0 / R);
    // The initial mean/covariance are moment-matched to the x0 law; only the
    // (0,0) entry feeds the recursion through A's single nonzero column.
    e.sigma = Matrix(m, m);
    e.sigma(0, 0) = params.x0.variance();

    const std::vector<double> rho = params.initial_law();
    for (int n = 0; n < R; ++n) {
        RngStream s = base.child(static_cast<std::uint64_t>(n));
        const double u = s.uniform();
        double acc = 0.0;
        int idx = static_cast<int>(rho.size()) - 1;
        for (std::size_t j = 0; j < rho.size(); ++j) {
            acc += rho[j];
            if (u < acc) {
                idx = static_cast<int>(j);
                break;
            }
        }
        e.regime[static_cast<std::size_t>(n)] = idx;
        e.streams.push_back(s);
    }
    e.resample_stream = base.child(0x5172ULL + static_cast<std::uint64_t>(R));
    return e;
}

bool rb_resample_sir(RbEnsemble& e) {
    const int R = e.size();
    const double ess = effective_sample_size(e.w);
    if (!(ess <= e.eta * R)) return false;

    const std::vector<int> idx = resample_indices(e.w, R, e.resampling, e.resample_stream);
    std::vector<int> regime(static_cast<std::size_t>(R));
    std::vector<double> xhat(static_cast<std::size_t>(R) * e.m);
    for (int n = 0; n < R; ++n) {
        const int src = idx[static_cast<std::size_t>(n)];
        regime[static_cast<std::size_t>(n)] = e.regime[static_cast<std::size_t>(src)];
        for (int r = 0; r < e.m; ++r)
            xhat[static_cast<std::size_t>(n) * e.m + r] = e.xhat[static_cast<std::size_t>(src) * e.m + r];
    }
    e.regime = std::move(regime);
    e.xhat = std::move(xhat);
    std::fill(e.w.begin(), e.w.end(), 1.0 / R);
    std::fill(e.logw.begin(), e.logw.end(), -std::log(static_cast<double>(R)));
    return true;
}

std::vector<double> rb_filter_step(RbEnsemble& e, double y_prev, double y_next, const RbMatrices& rb,
                                   const ModelParams& params) {
    const int R = e.size();
    const int m = rb.m;
    const double dy = y_next - y_prev;
    const double fine_dt = params.fine_dt();
    const bool xdep = params.q.x_dependent();
    if (xdep) throw std::invalid_argument("rb filter: x-dependent intensities are not conditionally linear");
    Matrix p_sub;
    if (params.num_states() > 1) p_sub = chain_transition_matrix(params.q.constant_matrix(), fine_dt);

    const RbCovarianceStep cov = rb_covariance_step(e.sigma, rb, params.delta_t);
    const double inv_two_s = 1.0 / (2.0 * cov.innovation_var);

    std::vector<double> log_kernel(static_cast<std::size_t>(R));
    std::vector<double> theta_vec(static_cast<std::size_t>(m));  // levels, newest first
    std::vector<double> xpred(static_cast<std::size_t>(m));
    for (int n = 0; n < R; ++n) {
        RngStream& rng = e.streams[static_cast<std::size_t>(n)];
        int th = e.regime[static_cast<std::size_t>(n)];
        for (int l = 0; l < m; ++l) {
            if (params.num_states() > 1) th = chain_step(th, p_sub, rng.uniform());
            theta_vec[static_cast<std::size_t>(m - 1 - l)] = params.space.level(th);
        }
        e.regime[static_cast<std::size_t>(n)] = th;

        double* xh = &e.xhat[static_cast<std::size_t>(n) * m];
        const double x_prev0 = xh[0];
        double hx = 0.0;
        for (int r = 0; r < m; ++r) {
            double v = rb.a_mat(r, 0) * x_prev0;
            for (int c = r; c < m; ++c) v += rb.b_mat(r, c) * theta_vec[static_cast<std::size_t>(c)];
            xpred[static_cast<std::size_t>(r)] = v;
            hx += rb.h_vec[static_cast<std::size_t>(r)] * v;
        }
        const double nu = dy - hx;
        log_kernel[static_cast<std::size_t>(n)] = -nu * nu * inv_two_s;
        for (int r = 0; r < m; ++r) xh[r] = xpred[static_cast<std::size_t>(r)] + cov.gain[static_cast<std::size_t>(r)] * nu;
    }

    e.sigma = cov.sigma_post;
    absorb_log_kernels(e.logw, e.w, log_kernel, e.weight_space);
    std::vector<double> pi = e.regime_marginal(params.num_states());
    double xm = 0.0;
    for (int p = 0; p < R; ++p) xm += e.w[static_cast<std::size_t>(p)] * e.xhat[static_cast<std::size_t>(p) * m];
    e.last_x_mean = xm;
    rb_resample_sir(e);
    return pi;
}

Posterior rb_filter(const ModelParams& params, const ObservationSeries& obs, const FilterOptions& opts,
                    RngStream base) {
    const int n = static_cast<int>(obs.y.size()) - 1;
    if (n < 1) throw std::invalid_argument("rb filter: observation series is empty");
    const RbMatrices rb = rb_build_matrices(params);
    RbEnsemble e = rb_init(params, opts, base);

    Posterior post;
    post.obs_dt = obs.obs_dt;
    post.pi.push_back(e.regime_marginal(params.num_states()));
    post.map.push_back(map_estimate(post.pi.back()));
    post.x_mean.push_back(params.x0.mean());
    if (opts.record_ess) post.ess.push_back(effective_sample_size(e.w));
    for (int k = 0; k < n; ++k) {
        try {
            std::vector<double> pi =
                rb_filter_step(e, obs.y[static_cast<std::size_t>(k)], obs.y[static_cast<std::size_t>(k) + 1], rb, params);
            post.map.push_back(map_estimate(pi));
            post.pi.push_back(std::move(pi));
            post.x_mean.push_back(e.last_x_mean);
            if (opts.record_ess) post.ess.push_back(effective_sample_size(e.w));
        } catch (FilterDivergence& d) {
            d.step = k + 1;
            throw;
        }
    }
    return post;
}

}  // namespace ouhmm
