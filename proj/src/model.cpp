#include "ouhmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ouhmm/quadrature.hpp"

namespace ouhmm {

namespace {
constexpr double kInvSqrtPi = 0.5641895835477562869480794515608;
constexpr double kRowSumTol = 1e-12;
}  // namespace

void StateSpace::validate() const {
    if (values.empty()) throw std::invalid_argument("state space: at least one regime level required");
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        if (!(values[i] < values[i + 1]))
            throw std::invalid_argument("state space: regime levels must be strictly increasing");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("state space: regime levels must be finite");
    }
}

IntensityMatrix IntensityMatrix::constant(Matrix q) {
    if (!q.square()) throw std::invalid_argument("intensity matrix: must be square");
    IntensityMatrix out;
    out.m_ = q.rows;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = 0; i < q.rows; ++i) {
        lo = std::min(lo, -q(i, i));
        hi = std::max(hi, -q(i, i));
    }
    out.alpha_ = lo;
    out.beta_ = hi;
    out.q_ = std::move(q);
    return out;
}

IntensityMatrix IntensityMatrix::from_function(int m, std::function<double(int, int, double)> entry,
                                               double alpha, double beta) {
    if (m < 1) throw std::invalid_argument("intensity matrix: dimension must be >= 1");
    if (!entry) throw std::invalid_argument("intensity matrix: entry function required");
    if (!(alpha > 0.0) || !(alpha <= beta) || !std::isfinite(beta))
        throw std::invalid_argument("intensity matrix: need 0 < alpha <= beta < inf for x-dependent rates");
    IntensityMatrix out;
    out.m_ = m;
    out.entry_ = std::move(entry);
    out.alpha_ = alpha;
    out.beta_ = beta;
    return out;
}

Matrix IntensityMatrix::at(double x) const {
    if (!entry_) return q_;
    Matrix q(m_, m_);
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) q(i, j) = entry_(i, j, x);
    return q;
}

const Matrix& IntensityMatrix::constant_matrix() const {
    if (entry_) throw std::logic_error("intensity matrix: x-dependent, no constant matrix");
    return q_;
}

namespace {

void check_intensity_entries(const Matrix& q, double alpha, double beta, bool bounded_diag) {
    for (int i = 0; i < q.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < q.cols; ++j) {
            row += q(i, j);
            if (i != j && q(i, j) < 0.0)
                throw std::invalid_argument("intensity matrix: off-diagonal entries must be >= 0");
            if (!std::isfinite(q(i, j)))
                throw std::invalid_argument("intensity matrix: entries must be finite");
        }
        if (std::abs(row) > kRowSumTol * std::max(1.0, beta))
            throw std::invalid_argument("intensity matrix: rows must sum to zero");
        if (bounded_diag && q.rows > 1) {
            const double rate = -q(i, i);
            if (rate < alpha - 1e-9 || rate > beta + 1e-9)
                throw std::invalid_argument("intensity matrix: diagonal rate outside [alpha, beta]");
        }
    }
}

}  // namespace

void IntensityMatrix::validate(const std::vector<double>& probe_points) const {
    if (m_ < 1) throw std::invalid_argument("intensity matrix: empty");
    if (!entry_) {
        check_intensity_entries(q_, alpha_, beta_, false);
        if (m_ > 1 && !(alpha_ > 0.0))
            throw std::invalid_argument("intensity matrix: jump rates must be positive (no absorbing regimes)");
    } else {
        std::vector<double> pts = probe_points;
        if (pts.empty()) pts = {-3.0, -1.0, 0.0, 1.0, 3.0};
        for (double x : pts) check_intensity_entries(at(x), alpha_, beta_, true);
    }
}

ObservationFn ObservationFn::linear(double coeff) {
    ObservationFn h;
    h.kind_ = Kind::Linear;
    h.coeff_ = coeff;
    h.f_ = [coeff](double x) { return coeff * x; };
    h.deriv_ = [coeff](double) { return coeff; };
    h.sup_abs_ = std::numeric_limits<double>::infinity();
    return h;
}

ObservationFn ObservationFn::bounded(std::function<double(double)> f, double sup_abs,
                                     std::function<double(double)> deriv) {
    if (!f) throw std::invalid_argument("observation function: callable required");
    if (!(sup_abs >= 0.0)) throw std::invalid_argument("observation function: sup bound must be >= 0");
    ObservationFn h;
    h.kind_ = Kind::Bounded;
    h.f_ = std::move(f);
    h.deriv_ = std::move(deriv);
    h.sup_abs_ = sup_abs;
    return h;
}

ObservationFn ObservationFn::positive_bounded(std::function<double(double)> f, double delta, double H,
                                              std::function<double(double)> deriv) {
    if (!f) throw std::invalid_argument("observation function: callable required");
    if (!(delta > 0.0) || !(delta <= H) || !std::isfinite(H))
        throw std::invalid_argument("observation function: need 0 < delta <= H < inf");
    ObservationFn h;
    h.kind_ = Kind::PositiveBounded;
    h.f_ = std::move(f);
    h.deriv_ = std::move(deriv);
    h.delta_ = delta;
    h.upper_ = H;
    h.sup_abs_ = H;
    return h;
}

ObservationFn ObservationFn::constant(double c) {
    if (c > 0.0) {
        return positive_bounded([c](double) { return c; }, c, c, [](double) { return 0.0; });
    }
    return bounded([c](double) { return c; }, std::abs(c), [](double) { return 0.0; });
}

ObservationFn ObservationFn::logistic(double lo, double hi, double slope) {
    if (!(lo < hi)) throw std::invalid_argument("logistic observation function: need lo < hi");
    auto f = [lo, hi, slope](double x) { return lo + (hi - lo) / (1.0 + std::exp(-slope * x)); };
    auto df = [lo, hi, slope](double x) {
        const double e = std::exp(-slope * x);
        const double d = 1.0 + e;
        return (hi - lo) * slope * e / (d * d);
    };
    if (lo > 0.0) return positive_bounded(f, lo, hi, df);
    return bounded(f, std::max(std::abs(lo), std::abs(hi)), df);
}

double ObservationFn::linear_coeff() const {
    if (kind_ != Kind::Linear) throw std::logic_error("observation function: not linear");
    return coeff_;
}

double ObservationFn::derivative(double x) const {
    if (!deriv_) throw std::logic_error("observation function: derivative not available");
    return deriv_(x);
}

double X0Law::mean() const {
    switch (kind) {
        case Kind::Uniform: return 0.5 * (a + b);
        case Kind::Point: return a;
        case Kind::Gaussian: return a;
    }
    return 0.0;
}

double X0Law::variance() const {
    switch (kind) {
        case Kind::Uniform: return (b - a) * (b - a) / 12.0;
        case Kind::Point: return 0.0;
        case Kind::Gaussian: return b;
    }
    return 0.0;
}

double X0Law::sample(double u01, double n01) const {
    switch (kind) {
        case Kind::Uniform: return a + u01 * (b - a);
        case Kind::Point: return a;
        case Kind::Gaussian: return a + std::sqrt(b) * n01;
    }
    return 0.0;
}

void X0Law::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("x0 law: parameters must be finite");
    if (kind == Kind::Uniform && !(a <= b)) throw std::invalid_argument("x0 law: uniform needs a <= b");
    if (kind == Kind::Gaussian && !(b >= 0.0)) throw std::invalid_argument("x0 law: variance must be >= 0");
}

std::vector<double> ModelParams::initial_law() const {
    if (rho0.empty()) {
        return std::vector<double>(static_cast<std::size_t>(space.size()), 1.0 / space.size());
    }
    return rho0;
}

std::vector<std::string> ModelParams::validate() const {
    space.validate();
    q.validate(space.values);
    if (q.size() != space.size())
        throw std::invalid_argument("model: intensity matrix dimension must match the number of regimes");
    if (!(epsilon > 0.0)) throw std::invalid_argument("model: epsilon must be > 0");
    if (!(delta_t > 0.0)) throw std::invalid_argument("model: delta_t must be > 0");
    if (m < 1) throw std::invalid_argument("model: substep count m must be >= 1");
    if (n_obs < 1) throw std::invalid_argument("model: n_obs must be >= 1");
    if (!std::isfinite(v0)) throw std::invalid_argument("model: v0 must be finite");
    x0.validate();
    if (!rho0.empty()) {
        if (static_cast<int>(rho0.size()) != space.size())
            throw std::invalid_argument("model: rho0 length must match the number of regimes");
        double sum = 0.0;
        for (double p : rho0) {
            if (p < 0.0) throw std::invalid_argument("model: rho0 entries must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument("model: rho0 must sum to 1");
    }

    std::vector<std::string> warnings;
    // Time-scale ordering epsilon << delta_t << 1/beta, operationalized as
    // epsilon <= delta_t/2 and delta_t <= 1/(2 beta). Deliberately a warning:
    // the delta-t sweep violates it on purpose.
    if (space.size() > 1) {
        if (!(epsilon <= delta_t / 2.0))
            warnings.push_back("time-scale ordering: epsilon > delta_t/2; averaged filters may be inaccurate");
        if (!(delta_t <= 1.0 / (2.0 * q.beta())))
            warnings.push_back("time-scale ordering: delta_t > 1/(2 beta); regime changes may be missed");
    }
    return warnings;
}

double invariant_density(int i, double x, const StateSpace& space) {
    if (i < 0 || i >= space.size()) throw std::out_of_range("invariant_density: regime index out of range");
    const double d = x - space.level(i);
    return kInvSqrtPi * std::exp(-d * d);
}

namespace {

// integral f(x) mu_i(x) dx with mu_i = N(s_i, 1/2): substitute x = s_i + t.
double average_under_mu(const std::function<double(double)>& f, double s_i, const GaussHermiteRule& rule) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        acc += rule.weights[k] * f(s_i + rule.nodes[k]);
    }
    return acc * kInvSqrtPi;
}

}  // namespace

Matrix average_intensity(const IntensityMatrix& q, const StateSpace& space, int quad_order) {
    if (quad_order < 8) throw std::invalid_argument("average_intensity: quadrature order must be >= 8");
    const int M = space.size();
    if (q.size() != M) throw std::invalid_argument("average_intensity: dimension mismatch");
    if (!q.x_dependent()) return q.constant_matrix();

    const GaussHermiteRule rule = gauss_hermite(quad_order);
    Matrix out(M, M);
    for (int i = 0; i < M; ++i) {
        double off = 0.0;
        for (int j = 0; j < M; ++j) {
            if (j == i) continue;
            const double v = average_under_mu([&](double x) { return q.at(x)(i, j); }, space.level(i), rule);
            if (!std::isfinite(v))
                throw std::invalid_argument("average_intensity: quadrature produced a non-finite value");
            out(i, j) = v;
            off += v;
        }
        out(i, i) = -off;
    }
    return out;
}

std::vector<double> average_observation(const ObservationFn& h, const StateSpace& space, int quad_order) {
    if (quad_order < 8) throw std::invalid_argument("average_observation: quadrature order must be >= 8");
    const GaussHermiteRule rule = gauss_hermite(quad_order);
    std::vector<double> out(static_cast<std::size_t>(space.size()));
    for (int i = 0; i < space.size(); ++i) {
        const double v = average_under_mu([&](double x) { return h(x); }, space.level(i), rule);
        if (!std::isfinite(v)) throw std::invalid_argument("average_observation: non-finite quadrature value");
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

AveragedModel averaged_model(const ModelParams& params, int quad_order) {
    AveragedModel avg;
    avg.q_bar = average_intensity(params.q, params.space, quad_order);
    avg.h_bar = average_observation(params.h, params.space, quad_order);
    if (params.h.has_derivative() && params.h.kind() == ObservationFn::Kind::PositiveBounded) {
        const GaussHermiteRule rule = gauss_hermite(quad_order);
        avg.h_prime_sqrt_h_bar.resize(avg.h_bar.size());
        for (int i = 0; i < params.space.size(); ++i) {
            avg.h_prime_sqrt_h_bar[static_cast<std::size_t>(i)] = average_under_mu(
                [&](double x) { return params.h.derivative(x) * std::sqrt(params.h(x)); },
                params.space.level(i), rule);
        }
    }
    return avg;
}

Matrix chain_transition_matrix(const Matrix& q, double t) {
    if (!q.square()) throw std::invalid_argument("chain_transition_matrix: square matrix required");
    if (t < 0.0) throw std::invalid_argument("chain_transition_matrix: time must be >= 0");
    const int n = q.rows;
    Matrix p;
    if (n == 1) {
        p = Matrix::identity(1);
    } else if (n == 2) {
        // exp(Qt) = Pinf + exp(-(alpha+beta) t) (I - Pinf) for Q = [[-a,a],[b,-b]]
        const double a = q(0, 1);
        const double b = q(1, 0);
        const double lam = a + b;
        p = Matrix(2, 2);
        if (lam == 0.0) {
            p = Matrix::identity(2);
        } else {
            const double decay = std::exp(-lam * t);
            const double pinf0 = b / lam;
            const double pinf1 = a / lam;
            p(0, 0) = pinf0 + decay * (1.0 - pinf0);
            p(0, 1) = pinf1 - decay * pinf1;
            p(1, 0) = pinf0 - decay * pinf0;
            p(1, 1) = pinf1 + decay * (1.0 - pinf1);
        }
    } else {
        p = expm(t * q);
    }
    // clean up roundoff so rows are usable as sampling distributions
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (p(i, j) < 0.0) p(i, j) = 0.0;
            if (p(i, j) > 1.0) p(i, j) = 1.0;
        }
    }
    return p;
}

}  // namespace ouhmm
