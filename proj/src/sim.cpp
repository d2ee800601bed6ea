#include "descobs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace descobs {

std::string to_string(ChannelSpec::Kind k) {
    switch (k) {
        case ChannelSpec::Kind::Constant: return "constant";
        case ChannelSpec::Kind::Polynomial: return "polynomial";
        case ChannelSpec::Kind::Sin: return "sin";
        case ChannelSpec::Kind::Cos: return "cos";
        case ChannelSpec::Kind::Exp: return "exp";
    }
    return "unknown";
}

double ChannelSpec::eval(double t, Index order) const {
    if (order < 0) throw std::invalid_argument("negative derivative order");
    if (order > max_order) {
        std::ostringstream msg;
        msg << "signal channel (" << to_string(kind) << ") is only smooth up to order " << max_order
            << ", derivative " << order << " requested";
        throw SmoothnessError(msg.str());
    }
    switch (kind) {
        case Kind::Constant: return order == 0 ? value : 0.0;
        case Kind::Polynomial: {
            // Horner on the order-th derivative coefficients.
            double acc = 0.0;
            for (Index j = static_cast<Index>(coeffs.size()) - 1; j >= order; --j) {
                double c = coeffs[j];
                for (Index q = 0; q < order; ++q) c *= static_cast<double>(j - q);
                acc = acc * t + c;
            }
            return acc;
        }
        case Kind::Sin:
        case Kind::Cos: {
            const double shift = static_cast<double>(order % 4) * std::numbers::pi / 2.0;
            const double arg = freq * t + phase + shift;
            const double f = std::pow(freq, static_cast<double>(order));
            return amp * f * (kind == Kind::Sin ? std::sin(arg) : std::cos(arg));
        }
        case Kind::Exp: return amp * std::pow(rate, static_cast<double>(order)) * std::exp(rate * t);
    }
    return 0.0;
}

Index Signal::max_order() const {
    Index m = std::numeric_limits<int>::max();
    for (const auto& c : channels_) m = std::min(m, c.max_order);
    return m;
}

Vec Signal::eval(double t, Index order) const {
    Vec v(channels());
    for (Index i = 0; i < channels(); ++i) v(i) = channels_[i].eval(t, order);
    return v;
}

Signal Signal::zero(Index channels) {
    return Signal(std::vector<ChannelSpec>(channels));
}

TimeGrid TimeGrid::make(double t0, double horizon, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    TimeGrid g;
    g.t0 = t0;
    g.dt = dt;
    g.steps = static_cast<Index>(std::llround(horizon / dt));
    if (g.steps < 1) g.steps = 1;
    return g;
}

namespace {

double max_col_norm(const Mat& M) {
    double m = 0.0;
    for (Index j = 0; j < M.cols(); ++j) m = std::max(m, M.col(j).norm());
    return m;
}

}  // namespace

double Trajectory::max_error() const { return max_col_norm(e); }

double Trajectory::final_error() const { return e.cols() == 0 ? 0.0 : e.col(e.cols() - 1).norm(); }

double Trajectory::max_residual() const {
    return residual_alg.size() == 0 ? 0.0 : residual_alg.maxCoeff();
}

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
}

Vec sigma_solution(const Mat& J_sig, const Mat& B_sig, const Signal& sig, double t, const Tolerances& tol) {
    const Index n = J_sig.rows();
    if (J_sig.cols() != n || B_sig.rows() != n || B_sig.cols() != sig.channels())
        throw DimensionError("sigma_solution: shape mismatch");
    const Index h = nilpotency_index(J_sig, tol);
    if (h > 0 && sig.max_order() < h - 1) {
        std::ostringstream msg;
        msg << "signal must be differentiable to order " << h - 1 << " (index h = " << h << "), max_order is "
            << sig.max_order();
        throw SmoothnessError(msg.str());
    }
    Vec x = Vec::Zero(n);
    Mat JB = B_sig;
    for (Index i = 0; i < h; ++i) {
        x -= JB * sig.eval(t, i);
        JB = J_sig * JB;
    }
    return x;
}

Mat integrate_lti(const Mat& A, const Mat& Bm, const Signal& sig, const Vec& x0, const TimeGrid& grid) {
    const Index n = A.rows();
    if (A.cols() != n || Bm.rows() != n || x0.size() != n) throw DimensionError("integrate_lti: shape mismatch");
    if (Bm.cols() != sig.channels() && Bm.cols() != 0) throw DimensionError("integrate_lti: input width mismatch");
    const bool forced = Bm.cols() > 0 && n > 0;
    auto rhs = [&](double t, const Vec& x) -> Vec {
        Vec dx = A * x;
        if (forced) dx += Bm * sig.eval(t, 0);
        return dx;
    };
    Mat out(n, grid.samples());
    Vec x = x0;
    out.col(0) = x;
    const double dt = grid.dt;
    for (Index i = 0; i < grid.steps; ++i) {
        const double t = grid.time(i);
        const Vec k1 = rhs(t, x);
        const Vec k2 = rhs(t + dt / 2, x + dt / 2 * k1);
        const Vec k3 = rhs(t + dt / 2, x + dt / 2 * k2);
        const Vec k4 = rhs(t + dt, x + dt * k3);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        out.col(i + 1) = x;
    }
    return out;
}

Trajectory simulate(const ReducedSystem& red, const ObserverRealization& obs, const Signal& sig,
                    const SimConfig& cfg) {
    cfg.validate();
    red.validate();
    const Index nf2 = red.n_f2, ne = red.sizes.n_eta, l = obs.l;
    if (sig.channels() != red.inputs) {
        std::ostringstream msg;
        msg << "signal has " << sig.channels() << " channels, system needs " << red.inputs << " (k + p)";
        throw DimensionError(msg.str());
    }
    if (cfg.x_f2_0.size() != nf2) throw DimensionError("initial x_f2 has wrong length");
    if (cfg.x_eta_0.size() != ne) throw DimensionError("initial x_eta has wrong length");
    if (cfg.w0.size() != l) throw DimensionError("initial w has wrong length");
    if (obs.N.rows() != l || obs.H.rows() != l || obs.H.cols() != red.inputs || obs.R.cols() != l ||
        obs.R.rows() != red.r())
        throw DimensionError("observer does not match the reduced system");
    if (red.h > 0 && sig.max_order() < red.h - 1) {
        std::ostringstream msg;
        msg << "signal must be differentiable to order " << red.h - 1 << " (index h = " << red.h
            << "), max_order is " << sig.max_order();
        throw SmoothnessError(msg.str());
    }

    Trajectory tr;
    tr.grid = TimeGrid::make(cfg.t0, cfg.horizon, cfg.dt);
    const Index S = tr.grid.samples();

    const Mat Ajoint = blkdiag({red.J_f2, red.A_eta1, obs.N});
    Mat Bjoint(nf2 + ne + l, red.inputs);
    Bjoint << red.B_f2, red.B_eta1, obs.H;
    Vec x0(nf2 + ne + l);
    x0 << cfg.x_f2_0, cfg.x_eta_0, cfg.w0;
    const Mat X = integrate_lti(Ajoint, Bjoint, sig, x0, tr.grid);
    tr.x_f2 = X.topRows(nf2);
    tr.x_eta = X.middleRows(nf2, ne);
    tr.w = X.bottomRows(l);

    const Index r = red.r();
    tr.x_sigma.resize(red.sizes.n_sig, S);
    tr.z.resize(r, S);
    tr.z_hat.resize(r, S);
    tr.residual_alg.resize(S);
    for (Index i = 0; i < S; ++i) {
        const double t = tr.grid.time(i);
        tr.x_sigma.col(i) = sigma_solution(red.J_sig, red.B_sig, sig, t);
        tr.z.col(i) = red.K_sig * tr.x_sigma.col(i) + red.K_f2 * tr.x_f2.col(i) + red.K_eta * tr.x_eta.col(i);
        Vec zh = obs.R * tr.w.col(i);
        for (std::size_t k = 0; k < obs.M.size(); ++k) zh += obs.M[k] * sig.eval(t, static_cast<Index>(k));
        tr.z_hat.col(i) = zh;
        tr.residual_alg(i) = (red.A_eta2 * tr.x_eta.col(i) + red.B_eta2 * sig.eval(t, 0)).norm();
    }
    tr.e = tr.z - tr.z_hat;

    if (tr.max_residual() > 1e-6) {
        std::ostringstream msg;
        msg << "algebraic constraint A_eta2 x_eta + B_eta2 ubar = 0 violated (max residual "
            << std::setprecision(3) << tr.max_residual()
            << "); initial state or input is not consistent with the behavior";
        tr.warnings.push_back(msg.str());
    }
    return tr;
}

double error_consistency(const Trajectory& traj, const Mat& N, const Mat& R, const Vec& e1_0) {
    if (N.rows() != e1_0.size() || R.cols() != N.rows() || R.rows() != traj.e.rows())
        throw DimensionError("error_consistency: shape mismatch");
    double dev = 0.0;
    for (Index i = 0; i < traj.grid.samples(); ++i) {
        const double s = traj.grid.time(i) - traj.grid.t0;
        const Mat expNt = (N * s).exp();
        dev = std::max(dev, (traj.e.col(i) - R * expNt * e1_0).norm());
    }
    return dev;
}

double fitted_decay_rate(const Trajectory& traj, double floor) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    Index count = 0;
    for (Index i = 0; i < traj.grid.samples(); ++i) {
        const double ne = traj.e.col(i).norm();
        if (!(ne > floor)) continue;
        const double t = traj.grid.time(i);
        const double y = std::log(ne);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    const double c = static_cast<double>(count);
    const double denom = c * stt - st * st;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (c * sty - st * sy) / denom;
}

double envelope_constant(const Mat& N, double alpha, const TimeGrid& grid) {
    double kappa = 0.0;
    for (Index i = 0; i < grid.samples(); ++i) {
        const double s = grid.time(i) - grid.t0;
        const double norm = N.size() == 0 ? 0.0 : spectral_norm<double>(Mat((N * s).exp()));
        kappa = std::max(kappa, norm * std::exp(-alpha * s));
    }
    return kappa;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
    std::ostringstream head;
    head << "t";
    auto names = [&](const char* prefix, Index count) {
        for (Index i = 0; i < count; ++i) head << "," << prefix << "_" << i;
    };
    names("x_f2", traj.x_f2.rows());
    names("x_eta", traj.x_eta.rows());
    names("w", traj.w.rows());
    names("z", traj.z.rows());
    names("zhat", traj.z_hat.rows());
    names("e", traj.e.rows());
    head << ",res_alg";
    out << head.str() << "\n";

    std::ostringstream line;
    line << std::setprecision(12);
    for (Index i = 0; i < traj.grid.samples(); ++i) {
        line.str("");
        line << traj.grid.time(i);
        for (const Mat* M : {&traj.x_f2, &traj.x_eta, &traj.w, &traj.z, &traj.z_hat, &traj.e})
            for (Index r = 0; r < M->rows(); ++r) line << "," << (*M)(r, i);
        line << "," << traj.residual_alg(i);
        out << line.str() << "\n";
    }
}

}  // namespace descobs
