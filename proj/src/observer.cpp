#include "descobs/observer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace descobs {

std::string to_string(GainStrategy s) {
    return s == GainStrategy::ZeroFirst ? "zero-first" : "place";
}

void ReducedSystem::validate() const {
    auto need = [](const Mat& M, Index r, Index c, const char* name) {
        if (M.rows() != r || M.cols() != c) {
            std::ostringstream msg;
            msg << "reduced system: " << name << " is " << M.rows() << "x" << M.cols() << ", expected " << r
                << "x" << c;
            throw DimensionError(msg.str());
        }
    };
    const Index ns = sizes.n_sig, ne = sizes.n_eta, alg = sizes.m_eta - sizes.n_eta;
    const Index rr = K_f2.rows();
    need(J_sig, ns, ns, "J_sig");
    need(B_sig, ns, inputs, "B_sig");
    need(J_f2, n_f2, n_f2, "J_f2");
    need(B_f2, n_f2, inputs, "B_f2");
    need(A_eta1, ne, ne, "A_eta1");
    need(B_eta1, ne, inputs, "B_eta1");
    need(A_eta2, alg, ne, "A_eta2");
    need(B_eta2, alg, inputs, "B_eta2");
    need(K_sig, rr, ns, "K_sig");
    need(K_f2, rr, n_f2, "K_f2");
    need(K_eta, rr, ne, "K_eta");
}

ReducedSystem reduce(const DescriptorSystem& sys, const Tolerances& tol) {
    const auto sp = StackedPencil::from(sys);
    const auto q = qkf(sp.pencil(), tol);
    const auto split = ordered_spectral_split(q.J_f, tol);
    const auto eta = eta_compress(q.E_eta, q.A_eta, tol);
    const QkfSizes& s = q.sizes;

    const Mat Pfull = blkdiag({Mat::Identity(s.m_eps, s.m_eps), split.U.inverse(),
                               Mat::Identity(s.n_sig, s.n_sig), eta.U2}) * q.P;
    const Mat Qfull = q.Q * blkdiag({Mat::Identity(s.n_eps, s.n_eps), split.U,
                                     Mat::Identity(s.n_sig, s.n_sig), Mat::Identity(s.n_eta, s.n_eta)});
    const Mat PB = Pfull * sys.stacked_input();
    const Mat KQ = sys.K * Qfull;

    ReducedSystem red;
    red.sizes = s;
    red.n_f1 = split.n1;
    red.n_f2 = split.n2;
    red.inputs = sys.k() + sys.p();
    red.h = q.h;
    red.P = Pfull;
    red.Q = Qfull;
    red.cond_P = condition_number(Pfull);
    red.cond_Q = condition_number(Qfull);
    red.cond_U1 = condition_number(split.U);
    red.cond_U2 = condition_number(eta.U2);

    Index row = 0;
    auto take_rows = [&](Index count) {
        Mat out = PB.middleRows(row, count);
        row += count;
        return out;
    };
    red.B_eps = take_rows(s.m_eps);
    red.B_f1 = take_rows(split.n1);
    red.B_f2 = take_rows(split.n2);
    red.B_sig = take_rows(s.n_sig);
    red.B_eta1 = take_rows(s.n_eta);
    red.B_eta2 = take_rows(s.m_eta - s.n_eta);

    Index col = 0;
    auto take_cols = [&](Index count) {
        Mat out = KQ.middleCols(col, count);
        col += count;
        return out;
    };
    red.K_eps = take_cols(s.n_eps);
    red.K_f1 = take_cols(split.n1);
    red.K_f2 = take_cols(split.n2);
    red.K_sig = take_cols(s.n_sig);
    red.K_eta = take_cols(s.n_eta);

    red.E_eps = q.E_eps;
    red.A_eps = q.A_eps;
    red.J_f1 = split.M1;
    red.J_f2 = split.M2;
    red.J_sig = q.J_sig;
    red.A_eta1 = eta.A_eta1;
    red.A_eta2 = eta.A_eta2;

    const double threshold = tol.zero_atol * std::max(1.0, spectral_norm<double>(sys.K));
    const double nKe = spectral_norm<double>(red.K_eps);
    const double nKf1 = spectral_norm<double>(red.K_f1);
    if (nKe > threshold || nKf1 > threshold) {
        std::ostringstream msg;
        msg << "system is not partially detectable: |K_eps| = " << nKe << ", |K_f1| = " << nKf1
            << " (threshold " << threshold << ")";
        throw NotPartiallyDetectable(msg.str());
    }
    red.validate();
    return red;
}

namespace {

Mat poly_of_matrix(const Mat& A, const std::vector<Complex>& roots) {
    const Index n = A.rows();
    CMat acc = CMat::Identity(n, n);
    for (Complex r : roots) acc = acc * (A.cast<Complex>() - r * CMat::Identity(n, n));
    return acc.real();
}

// Largest relative distance between matched eigenvalues; infinity when sizes differ.
double spectrum_mismatch(std::vector<Complex> got, std::vector<Complex> want) {
    if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    // Greedy matching is adequate for the small, separated pole sets used here.
    for (Complex w : want) {
        auto best = std::min_element(got.begin(), got.end(), [w](Complex a, Complex b) {
            return std::abs(a - w) < std::abs(b - w);
        });
        const double d = std::abs(*best - w) / std::max(1.0, std::abs(w));
        if (!(d == d)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, d);
        got.erase(best);
    }
    return worst;
}

void check_poles(const std::vector<Complex>& poles, Index n) {
    if (static_cast<Index>(poles.size()) != n) {
        std::ostringstream msg;
        msg << "expected " << n << " poles, got " << poles.size();
        throw std::invalid_argument(msg.str());
    }
    for (Complex p : poles) {
        if (!(p.real() < 0)) throw std::invalid_argument("poles must lie in the open left half-plane");
        if (p.imag() != 0.0) {
            const auto conj_count = std::count_if(poles.begin(), poles.end(), [p](Complex q) {
                return std::abs(q - std::conj(p)) <= 1e-12 * std::max(1.0, std::abs(p));
            });
            if (conj_count == 0) throw std::invalid_argument("complex poles must come in conjugate pairs");
        }
    }
}

}  // namespace

Mat stabilizing_gain(const Mat& A_eta1, const Mat& A_eta2, const std::vector<Complex>& poles,
                     const Tolerances& tol) {
    const Index n = A_eta1.rows();
    const Index q = A_eta2.rows();
    if (A_eta1.cols() != n || A_eta2.cols() != n) throw DimensionError("stabilizing_gain: shape mismatch");
    if (n == 0) return Mat(0, q);
    check_poles(poles, n);
    if (q == 0) throw PlacementError("stabilizing_gain: no algebraic rows to inject");

    std::mt19937 rng(0x5eedu);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&](Index r, Index c) {
        Mat M(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) M(i, j) = gauss(rng);
        return M;
    };

    // Reduce to a single output c = v^T A_eta2 and apply Ackermann's formula to the
    // dual pair. If A_eta1 is not cyclic a random preliminary gain L0 makes it so.
    // Attempts are judged by the spectrum they actually produce.
    const double accuracy = 1e-6;
    Mat bestL;
    double bestMismatch = std::numeric_limits<double>::infinity(), bestCond = 0.0;
    const double scale = std::max(1.0, spectral_norm<double>(A_eta1));
    for (int attempt = 0; attempt < 40 && !(bestMismatch <= accuracy); ++attempt) {
        const Mat L0 = attempt < q + 1 ? Mat::Zero(n, q) : Mat(random_matrix(n, q) * scale);
        Vec v = Vec::Zero(q);
        if (attempt < q) {
            v(attempt) = 1.0;
        } else {
            v = random_matrix(q, 1).col(0);
        }
        const Mat A0 = A_eta1 - L0 * A_eta2;
        const Mat c = v.transpose() * A_eta2;
        Mat O(n, n);
        Mat row = c;
        for (Index i = 0; i < n; ++i) {
            O.row(i) = row;
            row = row * A0;
        }
        const double cond = condition_number(O);
        if (!std::isfinite(cond) || cond > 1e14) continue;
        Vec en = Vec::Zero(n);
        en(n - 1) = 1.0;
        const Vec ell = poly_of_matrix(A0, poles) * O.fullPivLu().solve(en);
        const Mat L = L0 + ell * v.transpose();
        const double mismatch = spectrum_mismatch(eigenvalues(A_eta1 - L * A_eta2), poles);
        if (mismatch < bestMismatch) {
            bestL = L;
            bestMismatch = mismatch;
            bestCond = cond;
        }
    }
    if (bestL.size() == 0) throw PlacementError("pole placement failed: pair is not observable");
    if (!(bestMismatch <= accuracy)) {
        std::ostringstream msg;
        msg << "pole placement inaccurate: relative eigenvalue error " << bestMismatch
            << " (observability condition number " << bestCond << ")";
        throw PlacementError(msg.str());
    }
    const Mat closed = A_eta1 - bestL * A_eta2;
    for (Complex e : eigenvalues(closed)) {
        if (!(e.real() < -tol.stab_margin)) throw PlacementError("placed gain is not stabilising");
    }
    return bestL;
}

std::vector<Mat> derivative_gains(const Mat& K_sig, const Mat& J_sig, const Mat& B_sig, Index count) {
    std::vector<Mat> out;
    Mat JB = B_sig;
    for (Index i = 0; i < count; ++i) {
        out.push_back(-K_sig * JB);
        JB = J_sig * JB;
    }
    return out;
}

namespace {

double spectral_abscissa(const Mat& N) {
    double a = -std::numeric_limits<double>::infinity();
    for (Complex e : eigenvalues(N)) a = std::max(a, e.real());
    return a;
}

}  // namespace

ObserverRealization assemble(const ReducedSystem& red, const Mat& L) {
    red.validate();
    const Index ne = red.sizes.n_eta;
    if (L.rows() != ne || L.cols() != red.A_eta2.rows()) throw DimensionError("assemble: gain has wrong shape");
    ObserverRealization obs;
    obs.L = L;
    obs.N = blkdiag({red.J_f2, red.A_eta1 - L * red.A_eta2});
    obs.H.resize(red.n_f2 + ne, red.inputs);
    obs.H << red.B_f2, red.B_eta1 - L * red.B_eta2;
    obs.R.resize(red.r(), red.n_f2 + ne);
    obs.R << red.K_f2, red.K_eta;
    obs.M = derivative_gains(red.K_sig, red.J_sig, red.B_sig, red.h);
    obs.l = red.n_f2 + ne;
    obs.h = red.h;
    obs.spectral_abscissa = spectral_abscissa(obs.N);
    const Tolerances defaults;
    obs.stable = obs.spectral_abscissa < -defaults.stab_margin;
    obs.exact = check_condition8(obs.R, obs.N, defaults).holds;
    return obs;
}

Mat functional_observability_matrix(const Mat& R, const Mat& N) {
    const Index l = N.rows();
    if (N.cols() != l || R.cols() != l) throw DimensionError("functional_observability_matrix: shape mismatch");
    Mat O(R.rows() * l, l);
    Mat block = R;
    for (Index i = 0; i < l; ++i) {
        O.middleRows(i * R.rows(), R.rows()) = block;
        block = block * N;
    }
    return O;
}

Condition8 check_condition8(const Mat& R, const Mat& N, const Tolerances& tol) {
    const Mat O = functional_observability_matrix(R, N);
    Condition8 c;
    c.rank_R = numerical_rank<double>(R, tol);
    c.rank_O = numerical_rank<double>(O, tol);
    c.holds = c.rank_R == c.rank_O;
    return c;
}

std::pair<ObserverRealization, SynthesisReport> synthesize_reduced(const ReducedSystem& red,
                                                                   const SynthConfig& cfg,
                                                                   const Tolerances& tol) {
    red.validate();
    const Index ne = red.sizes.n_eta;
    const Index alg = red.A_eta2.rows();
    SynthesisReport rep;
    rep.partially_detectable = true;
    rep.sigma1 = true;
    rep.cond_P = red.cond_P;
    rep.cond_Q = red.cond_Q;
    rep.cond_U1 = red.cond_U1;
    rep.cond_U2 = red.cond_U2;

    bool etaStable = true;
    for (Complex e : eigenvalues(red.A_eta1))
        if (!(e.real() < -tol.stab_margin)) etaStable = false;

    Mat L = Mat::Zero(ne, alg);
    if (cfg.strategy == GainStrategy::ZeroFirst && etaStable) {
        rep.gain_strategy = "zero (A_eta1 already stable)";
    } else if (ne > 0) {
        std::vector<Complex> poles = cfg.poles;
        if (poles.empty())
            for (Index i = 1; i <= ne; ++i) poles.emplace_back(-static_cast<double>(i), 0.0);
        L = stabilizing_gain(red.A_eta1, red.A_eta2, poles, tol);
        rep.gain_strategy = "placed";
    } else {
        rep.gain_strategy = "empty (no eta states)";
    }

    for (Complex e : eigenvalues(Mat(red.A_eta1 - L * red.A_eta2))) {
        if (!(e.real() < -tol.stab_margin)) throw PlacementError("gain does not stabilise A_eta1 - L A_eta2");
    }

    ObserverRealization obs = assemble(red, L);
    rep.condition8 = check_condition8(obs.R, obs.N, tol);
    obs.stable = obs.spectral_abscissa < -tol.stab_margin;
    obs.exact = rep.condition8.holds;
    rep.sigma3 = obs.stable && obs.exact;
    rep.asymptotic_only = !rep.sigma3;
    return {obs, rep};
}

std::pair<ObserverRealization, SynthesisReport> synthesize(const DescriptorSystem& sys,
                                                           const SynthConfig& cfg, const Tolerances& tol) {
    const auto cert = is_partially_detectable_rank(sys, tol);
    if (!cert.verdict) throw NotPartiallyDetectable("system is not partially detectable");
    const ReducedSystem red = reduce(sys, tol);
    return synthesize_reduced(red, cfg, tol);
}

}  // namespace descobs
