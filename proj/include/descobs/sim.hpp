#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "descobs/linalg.hpp"
#include "descobs/observer.hpp"

namespace descobs {

/// One channel of the stacked input, closed under differentiation.
struct ChannelSpec {
    enum class Kind { Constant, Polynomial, Sin, Cos, Exp };
    Kind kind = Kind::Constant;
    double value = 0.0;           ///< constant
    std::vector<double> coeffs;   ///< polynomial, c0 + c1 t + c2 t^2 + ...
    double amp = 1.0, freq = 1.0, phase = 0.0;  ///< sin/cos: amp * sin(freq t + phase)
    double rate = 0.0;            ///< exp: amp * exp(rate t)
    /// Highest derivative the channel is declared smooth for.
    Index max_order = std::numeric_limits<int>::max();

    double eval(double t, Index order) const;
};

std::string to_string(ChannelSpec::Kind k);

class Signal {
public:
    Signal() = default;
    explicit Signal(std::vector<ChannelSpec> channels) : channels_(std::move(channels)) {}

    Index channels() const { return static_cast<Index>(channels_.size()); }
    Index max_order() const;
    /// order-th derivative of ubar at t.
    Vec eval(double t, Index order = 0) const;
    const std::vector<ChannelSpec>& specs() const { return channels_; }

    static Signal zero(Index channels);

private:
    std::vector<ChannelSpec> channels_;
};

class SmoothnessError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TimeGrid {
    double t0 = 0.0;
    double dt = 1e-3;
    Index steps = 0;

    Index samples() const { return steps + 1; }
    double time(Index i) const { return t0 + dt * static_cast<double>(i); }

    /// steps = round(horizon / dt).
    static TimeGrid make(double t0, double horizon, double dt);
};

/// Sampled series are stored column-per-sample.
struct Trajectory {
    TimeGrid grid;
    Mat x_sigma, x_f2, x_eta, w;
    Mat z, z_hat, e;
    Vec residual_alg;
    std::vector<std::string> warnings;

    double max_error() const;
    double final_error() const;
    double max_residual() const;
};

enum class EpsPolicy { Zero };

struct SimConfig {
    double t0 = 0.0;
    double horizon = 10.0;
    double dt = 1e-3;
    Vec x_f2_0, x_eta_0, w0;
    EpsPolicy x_eps_policy = EpsPolicy::Zero;

    void validate() const;
};

/// x_sig(t) = -sum_{i<h} J_sig^i B_sig ubar^(i)(t).
Vec sigma_solution(const Mat& J_sig, const Mat& B_sig, const Signal& sig, double t,
                   const Tolerances& tol = {});

/// Classical RK4 for x' = A x + Bm ubar(t) on the grid.
Mat integrate_lti(const Mat& A, const Mat& Bm, const Signal& sig, const Vec& x0, const TimeGrid& grid);

Trajectory simulate(const ReducedSystem& red, const ObserverRealization& obs, const Signal& sig,
                    const SimConfig& cfg);

/// max_t |e(t) - R exp(N (t - t0)) e1_0|.
double error_consistency(const Trajectory& traj, const Mat& N, const Mat& R, const Vec& e1_0);

/// Slope of log|e(t)| against t over samples with |e| above `floor`; NaN when too few.
double fitted_decay_rate(const Trajectory& traj, double floor = 1e-12);

/// Maximum over the grid of |exp(N (t - t0))| e^{-alpha (t - t0)}.
double envelope_constant(const Mat& N, double alpha, const TimeGrid& grid);

void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace descobs
