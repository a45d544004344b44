#include "ouhmm/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ouhmm {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Banded row of a discretized Gaussian transition: mass below/above the
// band is folded into its edge cells so every row sums to exactly one.
struct BandRow {
    int lo = 0;
    std::vector<double> w;
};

BandRow gaussian_cells(double mean, double sigma, double grid_lo, double dx, int cells) {
    BandRow row;
    if (!(sigma > 0.0)) {
        int c = static_cast<int>(std::floor((mean - grid_lo) / dx));
        c = std::clamp(c, 0, cells - 1);
        row.lo = c;
        row.w = {1.0};
        return row;
    }
    const double half_band = 8.0 * sigma;
    int lo = static_cast<int>(std::floor((mean - half_band - grid_lo) / dx));
    int hi = static_cast<int>(std::floor((mean + half_band - grid_lo) / dx));
    lo = std::clamp(lo, 0, cells - 1);
    hi = std::clamp(hi, lo, cells - 1);
    row.lo = lo;
    row.w.resize(static_cast<std::size_t>(hi - lo) + 1);
    double below = norm_cdf((grid_lo + lo * dx - mean) / sigma);  // mass below the band
    for (int c = lo; c <= hi; ++c) {
        const double up = (c == hi) ? 1.0 : norm_cdf((grid_lo + (c + 1) * dx - mean) / sigma);
        row.w[static_cast<std::size_t>(c - lo)] = up - below;
        below = up;
    }
    row.w.front() += norm_cdf((grid_lo + lo * dx - mean) / sigma);
    return row;
}

std::vector<double> x0_cell_masses(const X0Law& law, double grid_lo, double dx, int cells) {
    std::vector<double> mass(static_cast<std::size_t>(cells), 0.0);
    switch (law.kind) {
        case X0Law::Kind::Point: {
            int c = static_cast<int>(std::floor((law.a - grid_lo) / dx));
            mass[static_cast<std::size_t>(std::clamp(c, 0, cells - 1))] = 1.0;
            break;
        }
        case X0Law::Kind::Uniform: {
            if (law.b == law.a) {
                int c = static_cast<int>(std::floor((law.a - grid_lo) / dx));
                mass[static_cast<std::size_t>(std::clamp(c, 0, cells - 1))] = 1.0;
                break;
            }
            for (int c = 0; c < cells; ++c) {
                const double cell_lo = grid_lo + c * dx;
                const double overlap = std::max(0.0, std::min(cell_lo + dx, law.b) - std::max(cell_lo, law.a));
                mass[static_cast<std::size_t>(c)] = overlap / (law.b - law.a);
            }
            break;
        }
        case X0Law::Kind::Gaussian: {
            if (!(law.b > 0.0)) {
                int c = static_cast<int>(std::floor((law.a - grid_lo) / dx));
                mass[static_cast<std::size_t>(std::clamp(c, 0, cells - 1))] = 1.0;
                break;
            }
            const BandRow row = gaussian_cells(law.a, std::sqrt(law.b), grid_lo, dx, cells);
            for (std::size_t i = 0; i < row.w.size(); ++i) mass[static_cast<std::size_t>(row.lo) + i] = row.w[i];
            break;
        }
    }
    return mass;
}

}  // namespace

Posterior grid_oracle_filter(const ModelParams& params, const ObservationSeries& obs,
                             const GridOracleConfig& cfg) {
    params.validate();
    const int n = static_cast<int>(obs.y.size()) - 1;
    if (n < 1) throw std::invalid_argument("grid oracle: observation series is empty");
    const int M = params.num_states();
    const int C = cfg.x_cells;
    const int U = std::max(1, cfg.v_cells);
    const int m = params.m;
    if (C < 2) throw std::invalid_argument("grid oracle: need at least 2 x cells");

    const std::int64_t work = static_cast<std::int64_t>(M) * C * m * n;
    if (work > cfg.budget)
        throw OracleBudgetExceeded("grid oracle: instance size " + std::to_string(work) +
                                   " exceeds budget " + std::to_string(cfg.budget));

    // --- x grid ---
    double lo = params.space.values.front() - cfg.x_pad;
    double hi = params.space.values.back() + cfg.x_pad;
    switch (params.x0.kind) {
        case X0Law::Kind::Uniform:
            lo = std::min(lo, params.x0.a);
            hi = std::max(hi, params.x0.b);
            break;
        case X0Law::Kind::Point:
            lo = std::min(lo, params.x0.a);
            hi = std::max(hi, params.x0.a);
            break;
        case X0Law::Kind::Gaussian:
            lo = std::min(lo, params.x0.a - 6.0 * std::sqrt(params.x0.b));
            hi = std::max(hi, params.x0.a + 6.0 * std::sqrt(params.x0.b));
            break;
    }
    const double dx = (hi - lo) / C;
    std::vector<double> center(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) center[static_cast<std::size_t>(c)] = lo + (c + 0.5) * dx;

    // --- per-substep transition pieces ---
    const double fine_dt = params.fine_dt();
    const double a = std::exp(-fine_dt / params.epsilon);
    const double sigma = std::sqrt(std::max(0.0, (1.0 - a * a) * 0.5));
    const bool xdep = params.q.x_dependent();
    Matrix p_const;
    std::vector<Matrix> p_cell;
    if (!xdep) {
        p_const = chain_transition_matrix(params.q.constant_matrix(), fine_dt);
    } else {
        p_cell.reserve(static_cast<std::size_t>(C));
        for (int c = 0; c < C; ++c)
            p_cell.push_back(chain_transition_matrix(params.q.at(center[static_cast<std::size_t>(c)]), fine_dt));
    }
    // OU kernel rows per target regime (mean shift (1-a)s_i), banded
    std::vector<std::vector<BandRow>> ou_rows(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) {
        ou_rows[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(C));
        const double drift = (1.0 - a) * params.space.level(i);
        for (int c = 0; c < C; ++c) {
            ou_rows[static_cast<std::size_t>(i)].push_back(
                gaussian_cells(a * center[static_cast<std::size_t>(c)] + drift, sigma, lo, dx, C));
        }
    }

    // --- running-sum coordinate ---
    std::vector<double> delta(static_cast<std::size_t>(C));
    double dmin = 0.0, dmax = 0.0;
    for (int c = 0; c < C; ++c) {
        delta[static_cast<std::size_t>(c)] = fine_dt * params.h(center[static_cast<std::size_t>(c)]);
        dmin = std::min(dmin, delta[static_cast<std::size_t>(c)]);
        dmax = std::max(dmax, delta[static_cast<std::size_t>(c)]);
    }
    const double v_span = m * (dmax - dmin);
    const bool v_trivial = !(v_span > 0.0) || U == 1;
    const double v_lo = std::min(0.0, m * dmin);
    const double v_hi = std::max(0.0, m * dmax);
    const double dv = v_trivial ? 0.0 : (v_hi - v_lo) / (U - 1);
    const int eff_u = v_trivial ? 1 : U;
    const int u0 = v_trivial ? 0 : static_cast<int>(std::lround(-v_lo / dv));
    std::vector<int> shift_int(static_cast<std::size_t>(C), 0);
    std::vector<double> shift_frac(static_cast<std::size_t>(C), 0.0);
    if (!v_trivial) {
        for (int c = 0; c < C; ++c) {
            const double f = delta[static_cast<std::size_t>(c)] / dv;
            const double fl = std::floor(f);
            shift_int[static_cast<std::size_t>(c)] = static_cast<int>(fl);
            shift_frac[static_cast<std::size_t>(c)] = f - fl;
        }
    }

    // --- forward tables ---
    const std::size_t table_size = static_cast<std::size_t>(M) * C * eff_u;
    std::vector<double> table(table_size, 0.0), scratch(table_size, 0.0);
    auto slab = [&](std::vector<double>& t, int i, int c) -> double* {
        return t.data() + (static_cast<std::size_t>(i) * C + c) * eff_u;
    };

    std::vector<double> prior(static_cast<std::size_t>(M) * C);
    {
        const std::vector<double> rho = params.initial_law();
        const std::vector<double> x_mass = x0_cell_masses(params.x0, lo, dx, C);
        for (int i = 0; i < M; ++i)
            for (int c = 0; c < C; ++c)
                prior[static_cast<std::size_t>(i) * C + c] = rho[static_cast<std::size_t>(i)] * x_mass[static_cast<std::size_t>(c)];
    }

    Posterior post;
    post.obs_dt = obs.obs_dt;
    {
        std::vector<double> pi0(static_cast<std::size_t>(M), 0.0);
        for (int i = 0; i < M; ++i)
            for (int c = 0; c < C; ++c) pi0[static_cast<std::size_t>(i)] += prior[static_cast<std::size_t>(i) * C + c];
        post.pi.push_back(pi0);
        post.map.push_back(map_estimate(pi0));
    }

    const double inv_two_dt = 1.0 / (2.0 * params.delta_t);
    std::vector<double> kernel(static_cast<std::size_t>(eff_u));

    for (int k = 0; k < n; ++k) {
        // block start: all running-sum mass at v = 0
        std::fill(table.begin(), table.end(), 0.0);
        for (int i = 0; i < M; ++i)
            for (int c = 0; c < C; ++c) slab(table, i, c)[u0] = prior[static_cast<std::size_t>(i) * C + c];

        for (int l = 0; l < m; ++l) {
            // regime mixing at fixed (x, v)
            std::fill(scratch.begin(), scratch.end(), 0.0);
            for (int c = 0; c < C; ++c) {
                const Matrix& p = xdep ? p_cell[static_cast<std::size_t>(c)] : p_const;
                for (int i = 0; i < M; ++i) {
                    const double* src = slab(table, i, c);
                    for (int i2 = 0; i2 < M; ++i2) {
                        const double pij = p(i, i2);
                        if (pij == 0.0) continue;
                        double* dst = slab(scratch, i2, c);
                        for (int u = 0; u < eff_u; ++u) dst[u] += pij * src[u];
                    }
                }
            }
            // OU move conditional on the new regime, with the running sum
            // advanced by the arrival cell's contribution
            std::fill(table.begin(), table.end(), 0.0);
            for (int i = 0; i < M; ++i) {
                for (int c = 0; c < C; ++c) {
                    const double* src = slab(scratch, i, c);
                    const BandRow& row = ou_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
                    for (std::size_t b = 0; b < row.w.size(); ++b) {
                        const double wgt = row.w[b];
                        if (wgt < 1e-300) continue;
                        const int c2 = row.lo + static_cast<int>(b);
                        double* dst = slab(table, i, c2);
                        if (v_trivial) {
                            dst[0] += wgt * src[0];
                            continue;
                        }
                        const int s = shift_int[static_cast<std::size_t>(c2)];
                        const double fr = shift_frac[static_cast<std::size_t>(c2)];
                        const double w_lo = wgt * (1.0 - fr);
                        const double w_hi = wgt * fr;
                        for (int u = 0; u < eff_u; ++u) {
                            const double v = src[u];
                            if (v == 0.0) continue;
                            const int t0 = std::clamp(u + s, 0, eff_u - 1);
                            const int t1 = std::clamp(u + s + 1, 0, eff_u - 1);
                            dst[t0] += w_lo * v;
                            dst[t1] += w_hi * v;
                        }
                    }
                }
            }
        }

        // observation update via the accumulated functional
        const double dy = obs.y[static_cast<std::size_t>(k) + 1] - obs.y[static_cast<std::size_t>(k)];
        if (v_trivial) {
            kernel[0] = 1.0;  // constant kernel cancels in normalization
        } else {
            for (int u = 0; u < eff_u; ++u) {
                const double nu = dy - (u - u0) * dv;
                kernel[static_cast<std::size_t>(u)] = std::exp(-nu * nu * inv_two_dt);
            }
        }
        double total = 0.0;
        for (int i = 0; i < M; ++i) {
            for (int c = 0; c < C; ++c) {
                const double* src = slab(table, i, c);
                double acc = 0.0;
                for (int u = 0; u < eff_u; ++u) acc += src[u] * kernel[static_cast<std::size_t>(u)];
                prior[static_cast<std::size_t>(i) * C + c] = acc;
                total += acc;
            }
        }
        if (!(total > 0.0)) throw FilterDivergence("grid oracle: zero posterior mass", k + 1);
        std::vector<double> pi(static_cast<std::size_t>(M), 0.0);
        for (int i = 0; i < M; ++i) {
            for (int c = 0; c < C; ++c) {
                prior[static_cast<std::size_t>(i) * C + c] /= total;
                pi[static_cast<std::size_t>(i)] += prior[static_cast<std::size_t>(i) * C + c];
            }
        }
        post.pi.push_back(pi);
        post.map.push_back(map_estimate(pi));
    }
    return post;
}

}  // namespace ouhmm
