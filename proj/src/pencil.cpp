#include "descobs/pencil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace descobs {

Pencil::Pencil(Mat E, Mat A) : E_(std::move(E)), A_(std::move(A)) {
    if (E_.rows() != A_.rows() || E_.cols() != A_.cols()) {
        std::ostringstream msg;
        msg << "pencil: E is " << E_.rows() << "x" << E_.cols() << " but A is " << A_.rows() << "x"
            << A_.cols();
        throw DimensionError(msg.str());
    }
}

CMat Pencil::at(Complex lambda) const {
    return lambda * E_.cast<Complex>() - A_.cast<Complex>();
}

StackedPencil StackedPencil::from(const DescriptorSystem& sys) {
    sys.validate();
    const Index m = sys.m(), n = sys.n(), p = sys.p();
    Mat Ecal = Mat::Zero(m + p, n);
    Mat Acal(m + p, n);
    Ecal.topRows(m) = sys.E;
    Acal << sys.A, sys.C;
    return StackedPencil(Pencil(std::move(Ecal), std::move(Acal)), p);
}

double pencil_scale(const Pencil& p, Complex lambda) {
    return std::max(1.0, spectral_norm<double>(p.E()) * std::abs(lambda) + spectral_norm<double>(p.A()));
}

WongSequence wong_sequence(const Pencil& p, Complex lambda, const Tolerances& tol) {
    const Index n = p.cols();
    const CMat shifted = p.A().cast<Complex>() - lambda * p.E().cast<Complex>();
    const CMat Ec = p.E().cast<Complex>();
    // Near an eigenvalue A - lambda E can be tiny as a whole; judge its rank against the pencil.
    const double scale = pencil_scale(p, lambda);

    WongSequence out;
    out.lambda = lambda;
    out.iterates.push_back(Subspace::zero(n));
    auto step = [&](const Subspace& w) {
        return preimage<Complex>(shifted, image<Complex>(Ec, w, tol), scale, tol);
    };

    out.iterates.push_back(step(out.iterates.back()));
    for (Index j = 1; j <= n + 1; ++j) {
        out.iterates.push_back(step(out.iterates.back()));
        const auto& prev = out.iterates[static_cast<std::size_t>(j)];
        if (out.iterates.back().dim() == prev.dim()) {
            out.termination_index = j;
            out.terminal = prev;
            return out;
        }
    }
    throw NumericalError("Wong sequence did not stabilise within n steps");
}

Index QkfDecomposition::row_offset(int block) const {
    const std::array<Index, 4> rows{sizes.m_eps, sizes.n_f, sizes.n_sig, sizes.m_eta};
    Index off = 0;
    for (int i = 0; i < block; ++i) off += rows[static_cast<std::size_t>(i)];
    return off;
}

Index QkfDecomposition::col_offset(int block) const {
    const std::array<Index, 4> cols{sizes.n_eps, sizes.n_f, sizes.n_sig, sizes.n_eta};
    Index off = 0;
    for (int i = 0; i < block; ++i) off += cols[static_cast<std::size_t>(i)];
    return off;
}

namespace {

Mat hcat(const std::vector<Mat>& parts, Index rows) {
    Index cols = 0;
    for (const auto& p : parts) cols += p.cols();
    Mat out(rows, cols);
    Index c = 0;
    for (const auto& p : parts) {
        out.middleCols(c, p.cols()) = p;
        c += p.cols();
    }
    return out;
}

RealSubspace limit_v(const Mat& E, const Mat& A, const Tolerances& tol) {
    RealSubspace V = RealSubspace::full(E.cols());
    for (Index i = 0; i <= E.cols() + 1; ++i) {
        RealSubspace next = preimage<double>(A, image<double>(E, V, tol), tol);
        const bool done = next.dim() == V.dim();
        V = std::move(next);
        if (done) return V;
    }
    throw QkfError("V-sequence did not stabilise");
}

RealSubspace limit_w(const Mat& E, const Mat& A, const Tolerances& tol) {
    RealSubspace W = RealSubspace::zero(E.cols());
    for (Index i = 0; i <= E.cols() + 1; ++i) {
        RealSubspace next = preimage<double>(E, image<double>(A, W, tol), tol);
        const bool done = next.dim() == W.dim();
        W = std::move(next);
        if (done) return W;
    }
    throw QkfError("W-sequence did not stabilise");
}

// Finds X, Y with  E11 X + Y E22 = -E12  and  A11 X + Y A22 = -A12  (minimum norm).
std::pair<Mat, Mat> solve_generalized_sylvester(const Mat& E11, const Mat& E12, const Mat& E22,
                                                const Mat& A11, const Mat& A12, const Mat& A22) {
    const Index ri = E11.rows(), ci = E11.cols();
    const Index rr = E22.rows(), cr = E22.cols();
    Mat X = Mat::Zero(ci, cr);
    Mat Y = Mat::Zero(ri, rr);
    if (ri == 0 || cr == 0) return {X, Y};

    const Index nx = ci * cr, ny = ri * rr, neq = ri * cr;
    Mat M = Mat::Zero(2 * neq, nx + ny);
    Vec rhs(2 * neq);
    // Column-major vec: vec(E11 X) = (I kron E11) vec X,  vec(Y E22) = (E22^T kron I) vec Y.
    for (Index col = 0; col < cr; ++col) {
        M.block(col * ri, col * ci, ri, ci) = E11;
        M.block(neq + col * ri, col * ci, ri, ci) = A11;
        for (Index j = 0; j < rr; ++j) {
            M.block(col * ri, nx + j * ri, ri, ri) += E22(j, col) * Mat::Identity(ri, ri);
            M.block(neq + col * ri, nx + j * ri, ri, ri) += A22(j, col) * Mat::Identity(ri, ri);
        }
        rhs.segment(col * ri, ri) = -E12.col(col);
        rhs.segment(neq + col * ri, ri) = -A12.col(col);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
    const Vec sol = cod.solve(rhs);
    const double scale = std::max({1.0, rhs.norm(), M.norm()});
    if ((M * sol - rhs).norm() > 1e-9 * scale) {
        throw QkfError("block decoupling (generalized Sylvester equation) has no solution");
    }
    X = Eigen::Map<const Mat>(sol.data(), ci, cr);
    Y = Eigen::Map<const Mat>(sol.data() + nx, ri, rr);
    return {X, Y};
}

}  // namespace

QkfDecomposition qkf(const Pencil& pencil, const Tolerances& tol) {
    tol.validate();
    const Mat& E = pencil.E();
    const Mat& A = pencil.A();
    const Index m = pencil.rows(), n = pencil.cols();

    // Wong limits: V* carries the eps and finite parts, W* the eps and infinite parts.
    const RealSubspace Vstar = limit_v(E, A, tol);
    const RealSubspace Wstar = limit_w(E, A, tol);
    const RealSubspace Veps = intersection<double>(Vstar, Wstar, tol);
    const RealSubspace Vf = complement_within<double>(Vstar, Veps, tol);
    const RealSubspace Vsig = complement_within<double>(Wstar, Veps, tol);
    const RealSubspace VW = subspace_sum<double>(Vstar, Wstar, tol);
    if (VW.dim() != Veps.dim() + Vf.dim() + Vsig.dim()) {
        throw QkfError("inconsistent Wong limit dimensions");
    }
    const RealSubspace Veta = orthogonal_complement<double>(VW, tol);

    const Mat Teps = Veps.basis();
    const Mat T = hcat({Teps, Vf.basis(), Vsig.basis(), Veta.basis()}, n);
    if (T.cols() != n) throw QkfError("column transformation is not square");

    const double scale = std::max({1.0, spectral_norm<double>(E), spectral_norm<double>(A)});
    const Mat Seps =
        RealSubspace::span(hcat({E * Teps, A * Teps}, m), scale, tol).basis();
    const Mat Sreg = hcat({Seps, E * Vf.basis(), A * Vsig.basis()}, m);
    if (Sreg.cols() > m || numerical_rank<double>(Sreg, tol) != Sreg.cols()) {
        throw QkfError("row spaces of the eps/finite/infinite parts are not independent");
    }
    const RealSubspace rowReg = RealSubspace::span(Sreg, tol);
    const Mat Seta = orthogonal_complement<double>(rowReg, tol).basis();
    const Mat S = hcat({Sreg, Seta}, m);
    if (S.cols() != m) throw QkfError("row transformation is not square");

    QkfDecomposition q;
    q.sizes.n_eps = Veps.dim();
    q.sizes.m_eps = Seps.cols();
    q.sizes.n_f = Vf.dim();
    q.sizes.n_sig = Vsig.dim();
    q.sizes.n_eta = Veta.dim();
    q.sizes.m_eta = Seta.cols();

    const double condS = condition_number(S);
    if (!(condS < 1.0 / tol.rank_rtol)) {
        std::ostringstream msg;
        msg << "row transformation is numerically singular (cond = " << condS << ")";
        throw QkfError(msg.str());
    }
    Mat P = S.inverse();
    Mat Q = T;
    if (m == 0) P = Mat(0, 0);

    const std::array<Index, 4> rs{q.sizes.m_eps, q.sizes.n_f, q.sizes.n_sig, q.sizes.m_eta};
    const std::array<Index, 4> cs{q.sizes.n_eps, q.sizes.n_f, q.sizes.n_sig, q.sizes.n_eta};

    // The Wong splitting leaves a block upper triangular pencil; decouple block i
    // from blocks i+1.. with [I Y; 0 I] on the left and [I X; 0 I] on the right.
    Index r0 = 0, c0 = 0;
    for (std::size_t i = 0; i + 1 < 4; ++i) {
        const Mat Et = P * E * Q;
        const Mat At = P * A * Q;
        const Index ri = rs[i], ci = cs[i];
        const Index rr = m - r0 - ri, cr = n - c0 - ci;
        auto [X, Y] = solve_generalized_sylvester(
            Et.block(r0, c0, ri, ci), Et.block(r0, c0 + ci, ri, cr), Et.block(r0 + ri, c0 + ci, rr, cr),
            At.block(r0, c0, ri, ci), At.block(r0, c0 + ci, ri, cr), At.block(r0 + ri, c0 + ci, rr, cr));
        Q.middleCols(c0 + ci, cr) += Q.middleCols(c0, ci) * X;
        P.middleRows(r0, ri) += Y * P.middleRows(r0 + ri, rr);
        r0 += ri;
        c0 += ci;
    }

    // Normalise the regular blocks to lambda I - J_f and lambda J_sig - I.
    {
        const Mat Et = P * E * Q;
        const Mat At = P * A * Q;
        const Index rf = q.sizes.m_eps, cf = q.sizes.n_eps, nf = q.sizes.n_f;
        const Index rsg = rf + nf, csg = cf + nf, ns = q.sizes.n_sig;
        const Mat Eff = Et.block(rf, cf, nf, nf);
        const Mat Ass = At.block(rsg, csg, ns, ns);
        if (nf > 0) P.middleRows(rf, nf) = Eff.inverse() * P.middleRows(rf, nf);
        if (ns > 0) P.middleRows(rsg, ns) = Ass.inverse() * P.middleRows(rsg, ns);
    }

    const Mat Et = P * E * Q;
    const Mat At = P * A * Q;
    q.P = P;
    q.Q = Q;
    q.cond_P = condition_number(P);
    q.cond_Q = condition_number(Q);

    double off = 0.0;
    Index ro = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        Index co = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            if (i != j && rs[i] > 0 && cs[j] > 0) {
                off = std::max(off, Et.block(ro, co, rs[i], cs[j]).norm());
                off = std::max(off, At.block(ro, co, rs[i], cs[j]).norm());
            }
            co += cs[j];
        }
        ro += rs[i];
    }
    q.offdiag_residual = off;

    q.E_eps = Et.block(0, 0, rs[0], cs[0]);
    q.A_eps = At.block(0, 0, rs[0], cs[0]);
    q.J_f = At.block(q.row_offset(1), q.col_offset(1), rs[1], cs[1]);
    q.J_sig = Et.block(q.row_offset(2), q.col_offset(2), rs[2], cs[2]);
    q.E_eta = Et.block(q.row_offset(3), q.col_offset(3), rs[3], cs[3]);
    q.A_eta = At.block(q.row_offset(3), q.col_offset(3), rs[3], cs[3]);

    auto fail = [&](const std::string& what) {
        std::ostringstream msg;
        msg << "quasi-Kronecker form check failed: " << what << " (cond P = " << q.cond_P
            << ", cond Q = " << q.cond_Q << ")";
        throw QkfError(msg.str());
    };
    if (q.sizes.n_eps > 0 && q.sizes.m_eps >= q.sizes.n_eps) fail("eps block is not wide");
    if (q.sizes.m_eta > 0 && q.sizes.m_eta <= q.sizes.n_eta) fail("eta block is not tall");
    if (numerical_rank<double>(q.E_eps, scale, tol) != q.sizes.m_eps) fail("E_eps rank deficient");
    if (numerical_rank<double>(q.E_eta, scale, tol) != q.sizes.n_eta) fail("E_eta rank deficient");
    if (!(q.cond_P < 1.0 / tol.rank_rtol) || !(q.cond_Q < 1.0 / tol.rank_rtol)) {
        fail("transformation numerically singular");
    }
    const double blockScale = std::max({1.0, Et.norm(), At.norm()});
    if (off > 1e-8 * blockScale) fail("off-diagonal blocks did not vanish");
    try {
        q.h = nilpotency_index(q.J_sig, tol);
    } catch (const NumericalError&) {
        fail("J_sig is not nilpotent");
    }
    return q;
}

std::vector<EigenCluster> finite_spectrum(const QkfDecomposition& q, const Tolerances& tol) {
    return spectrum_clusters(q.J_f, tol);
}

Index nilpotency_index(const Mat& J, const Tolerances& tol) {
    if (J.rows() != J.cols()) throw DimensionError("nilpotency_index: matrix not square");
    const Index n = J.rows();
    if (n == 0) return 0;
    const double base = std::max(1.0, spectral_norm<double>(J));
    Mat power = Mat::Identity(n, n);
    for (Index h = 1; h <= n; ++h) {
        power = power * J;
        if (power.norm() <= tol.zero_atol * std::pow(base, static_cast<double>(h))) return h;
    }
    throw NumericalError("matrix is not nilpotent");
}

EtaCompression eta_compress(const Mat& E_eta, const Mat& A_eta, const Tolerances& tol) {
    if (E_eta.rows() != A_eta.rows() || E_eta.cols() != A_eta.cols()) {
        throw DimensionError("eta_compress: E_eta and A_eta differ in shape");
    }
    const Index me = E_eta.rows(), ne = E_eta.cols();
    if (ne > 0 && me <= ne) throw DimensionError("eta_compress: eta block must have more rows than columns");
    EtaCompression out;
    if (ne == 0) {
        out.U2 = Mat::Identity(me, me);
        out.A_eta1 = Mat(0, 0);
        out.A_eta2 = Mat(me, 0);
        return out;
    }
    if (numerical_rank<double>(E_eta, tol) != ne) {
        throw NumericalError("eta_compress: E_eta is column-rank deficient");
    }
    Eigen::ColPivHouseholderQR<Mat> qr(E_eta);
    const Mat Qfull = qr.householderQ() * Mat::Identity(me, me);
    const Mat R = qr.matrixR().topLeftCorner(ne, ne).triangularView<Eigen::Upper>();
    // E = Q1 R Pi^T, so G = R Pi^T is the invertible factor with Q1^T E = G.
    const Mat G = R * qr.colsPermutation().transpose();
    Mat Q2 = Qfull.rightCols(me - ne);
    for (Index j = 0; j < Q2.cols(); ++j) {
        Index imax = 0;
        Q2.col(j).cwiseAbs().maxCoeff(&imax);
        if (Q2(imax, j) < 0) Q2.col(j) *= -1.0;
    }
    out.U2.resize(me, me);
    out.U2.topRows(ne) = G.inverse() * Qfull.leftCols(ne).transpose();
    out.U2.bottomRows(me - ne) = Q2.transpose();
    const Mat UA = out.U2 * A_eta;
    out.A_eta1 = UA.topRows(ne);
    out.A_eta2 = UA.bottomRows(me - ne);
    return out;
}

}  // namespace descobs
