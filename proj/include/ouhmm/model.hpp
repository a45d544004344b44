#ifndef OUHMM_MODEL_HPP
#define OUHMM_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ouhmm/matrix.hpp"

namespace ouhmm {

/// Ordered regime levels s_1 < s_2 < ... < s_M. The ordering is canonical:
/// every index-based rule in the project (tie-breaking, CSV columns,
/// transition rows) refers to it.
struct StateSpace {
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
    double level(int i) const { return values[static_cast<std::size_t>(i)]; }

    /// Throws std::invalid_argument unless nonempty and strictly increasing.
    void validate() const;
};

/// Transition intensity matrix of the regime chain, either constant or a
/// pointwise function of the OU value x. Rows sum to zero, off-diagonals
/// are nonnegative, and the diagonal is bounded: alpha <= -Q_ii <= beta.
class IntensityMatrix {
public:
    IntensityMatrix() = default;

    static IntensityMatrix constant(Matrix q);
    static IntensityMatrix from_function(int m, std::function<double(int, int, double)> entry,
                                         double alpha, double beta);

    bool x_dependent() const { return static_cast<bool>(entry_); }
    int size() const { return m_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    /// Evaluate the matrix at x (returns the stored matrix when constant).
    Matrix at(double x) const;
    const Matrix& constant_matrix() const;

    /// Checks the intensity invariants on the constant matrix, or on the
    /// evaluations at `probe_points` when x-dependent.
    void validate(const std::vector<double>& probe_points = {}) const;

private:
    int m_ = 0;
    Matrix q_;  // constant case
    std::function<double(int, int, double)> entry_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
};

/// Observation drift h. Linear observation functions get a dedicated kind
/// because the Rao-Blackwellized filter is only defined for them; bounded
/// functions carry their sup bound, and strictly positive ones additionally
/// the (delta, H) bracket required by the stochastic volatility model.
class ObservationFn {
public:
    enum class Kind { Linear, Bounded, PositiveBounded };

    ObservationFn() : ObservationFn(linear(1.0)) {}

    static ObservationFn linear(double coeff);
    static ObservationFn bounded(std::function<double(double)> f, double sup_abs,
                                 std::function<double(double)> deriv = nullptr);
    static ObservationFn positive_bounded(std::function<double(double)> f, double delta, double H,
                                          std::function<double(double)> deriv = nullptr);
    static ObservationFn constant(double c);
    /// Monotone bounded form lo + (hi - lo) / (1 + exp(-slope x)); strictly
    /// inside (lo, hi), so usable as a volatility function when lo > 0.
    static ObservationFn logistic(double lo, double hi, double slope);

    double operator()(double x) const { return f_(x); }
    Kind kind() const { return kind_; }
    bool is_linear() const { return kind_ == Kind::Linear; }
    double linear_coeff() const;
    double sup_abs() const { return sup_abs_; }
    double delta() const { return delta_; }
    double upper() const { return upper_; }
    bool has_derivative() const { return static_cast<bool>(deriv_); }
    double derivative(double x) const;

private:
    Kind kind_ = Kind::Linear;
    std::function<double(double)> f_;
    std::function<double(double)> deriv_;
    double coeff_ = 0.0;
    double sup_abs_ = 0.0;
    double delta_ = 0.0;  // positive lower bound (PositiveBounded only)
    double upper_ = 0.0;  // upper bound H (PositiveBounded only)
};

/// Law of X(0).
struct X0Law {
    enum class Kind { Uniform, Point, Gaussian };
    Kind kind = Kind::Uniform;
    double a = -1.0;  // uniform: lower; point: value; gaussian: mean
    double b = 1.0;   // uniform: upper; gaussian: variance

    double mean() const;
    double variance() const;
    double sample(double u01, double n01) const;
    void validate() const;
};

/// Full specification of the hidden Markov model (Theta, X, Y): regime
/// levels, intensities, mean-reversion time epsilon, observation function,
/// observation interval delta_t with m substeps, horizon n_obs, initial
/// laws, and the root seed all randomness is derived from.
struct ModelParams {
    StateSpace space;
    IntensityMatrix q;
    double epsilon = 0.01;
    ObservationFn h;
    double delta_t = 0.01;
    int m = 5;
    int n_obs = 100;
    std::vector<double> rho0;  // law of Theta(0); empty means uniform
    X0Law x0;
    double v0 = 0.0;  // initial value of the hidden integrator; cancels in increments
    std::uint64_t seed = 0;

    double fine_dt() const { return delta_t / m; }
    int num_states() const { return space.size(); }
    std::vector<double> initial_law() const;

    /// Throws std::invalid_argument on hard violations; returns human
    /// readable warnings for soft ones (time-scale ordering).
    std::vector<std::string> validate() const;
};

/// Per-regime invariant density of the fast OU state: a Gaussian with mean
/// s_i and variance 1/2, independent of epsilon.
double invariant_density(int i, double x, const StateSpace& space);

/// Averaged coefficients under the invariant measures: intensity Q-bar,
/// observation drift h-bar, and (when h has a derivative) the averaged
/// leverage term h'*sqrt(h)-bar used by the volatility model diagnostics.
struct AveragedModel {
    Matrix q_bar;
    std::vector<double> h_bar;
    std::vector<double> h_prime_sqrt_h_bar;
};

Matrix average_intensity(const IntensityMatrix& q, const StateSpace& space, int quad_order = 64);
std::vector<double> average_observation(const ObservationFn& h, const StateSpace& space, int quad_order = 64);
AveragedModel averaged_model(const ModelParams& params, int quad_order = 64);

/// Row-stochastic transition matrix exp(Q t). Uses the two-state closed form
/// when M == 2 and Pade scaling-and-squaring otherwise.
Matrix chain_transition_matrix(const Matrix& q, double t);

}  // namespace ouhmm

#endif
