#include "descobs/detect.hpp"

#include <algorithm>
#include <cmath>

namespace descobs {

std::string to_string(Method m) {
    switch (m) {
        case Method::Rank: return "rank";
        case Method::Wong: return "wong";
        case Method::Qkf: return "qkf";
    }
    return "unknown";
}

bool DetectabilityCertificate::marginal() const {
    for (const auto& p : rank_probes)
        if (p.marginal) return true;
    for (const auto& p : wong_probes)
        if (p.marginal) return true;
    return qkf_probe && qkf_probe->marginal;
}

namespace {

bool near_threshold(double value, double threshold, double decades = 3.0) {
    const double f = std::pow(10.0, decades);
    return value > threshold / f && value < threshold * f;
}

Mat normalized_rows(const Mat& K) {
    const double nk = spectral_norm<double>(K);
    return nk > 0.0 ? Mat(K / nk) : K;
}

void sort_probes(std::vector<Complex>& pts) {
    std::sort(pts.begin(), pts.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

// Probe set for E = I: eigenvalue clusters of A in the closed right half-plane.
std::vector<Complex> unstable_eigenvalues(const Mat& A, const Tolerances& tol) {
    std::vector<Complex> pts;
    for (const auto& c : spectrum_clusters(A, tol))
        if (in_closed_rhp(c.center, tol)) pts.push_back(c.center);
    sort_probes(pts);
    return pts;
}

}  // namespace

PartitionedOutputs partition_outputs(const Mat& K, const QkfDecomposition& q, const SpectralSplit& split) {
    if (K.cols() != q.Q.rows()) throw DimensionError("partition_outputs: K does not match Q");
    const Mat KQ = K * q.Q;
    PartitionedOutputs out;
    out.K_eps = KQ.middleCols(q.col_offset(0), q.sizes.n_eps);
    out.K_f = KQ.middleCols(q.col_offset(1), q.sizes.n_f);
    out.K_sig = KQ.middleCols(q.col_offset(2), q.sizes.n_sig);
    out.K_eta = KQ.middleCols(q.col_offset(3), q.sizes.n_eta);
    if (split.U.rows() != q.sizes.n_f) throw DimensionError("partition_outputs: split does not match J_f");
    out.K_f1 = out.K_f * split.U.leftCols(split.n1);
    out.K_f2 = out.K_f * split.U.rightCols(split.n2);
    return out;
}

CMat build_G(Index l, const StackedPencil& sp, Complex lambda, const std::optional<Mat>& K) {
    if (l < 1) throw std::invalid_argument("build_G: block length must be at least 1");
    const Index mr = sp.pencil().rows(), n = sp.pencil().cols();
    const Index r = K ? K->rows() : 0;
    if (K && K->cols() != n) throw DimensionError("build_G: K has wrong column count");
    const CMat diag = sp.pencil().at(lambda);
    const CMat sub = sp.E().cast<Complex>();
    CMat G = CMat::Zero(l * mr + r, l * n);
    for (Index i = 0; i < l; ++i) {
        G.block(i * mr, i * n, mr, n) = diag;
        if (i > 0) G.block(i * mr, (i - 1) * n, mr, n) = sub;
    }
    if (K) G.block(l * mr, (l - 1) * n, r, n) = K->cast<Complex>();
    return G;
}

std::vector<Complex> probe_points(const QkfDecomposition& q, const Tolerances& tol) {
    std::vector<Complex> pts;
    double radius = 0.0;
    for (const auto& c : finite_spectrum(q, tol)) {
        radius = std::max(radius, std::abs(c.center));
        if (in_closed_rhp(c.center, tol)) pts.push_back(c.center);
    }
    // The eps part of W* is present at every lambda; a point off the spectrum
    // exposes it even when no finite eigenvalue lies in the right half-plane.
    pts.emplace_back(1.0 + radius, 0.0);
    sort_probes(pts);
    return pts;
}

DetectabilityCertificate is_partially_detectable_rank(const DescriptorSystem& sys, const Tolerances& tol) {
    DetectabilityCertificate cert;
    cert.method = Method::Rank;
    const auto sp = StackedPencil::from(sys);
    const Index n = sys.n();
    if (n == 0 || sys.r() == 0) return cert;
    const auto q = qkf(sp.pencil(), tol);
    const Mat Khat = normalized_rows(sys.K);
    for (Complex lambda : probe_points(q, tol)) {
        const auto wong = wong_sequence(sp.pencil(), lambda, tol);
        const Index l = std::clamp<Index>(wong.termination_index, 1, n);
        const CMat G = build_G(l, sp, lambda);
        const CMat GK = build_G(l, sp, lambda, Khat);
        const double scale = std::max(pencil_scale(sp.pencil(), lambda), spectral_norm<Complex>(G));
        const auto without = rank_profile<Complex>(G, scale, tol);
        const auto with = rank_profile<Complex>(GK, scale, tol);
        RankProbe probe{lambda, l, without.rank, with.rank, without.marginal() || with.marginal()};
        cert.rank_probes.push_back(probe);
        cert.block_length_used = std::max(cert.block_length_used, l);
        if (probe.rank_with_K != probe.rank_without_K) cert.verdict = false;
    }
    return cert;
}

DetectabilityCertificate is_partially_detectable_wong(const DescriptorSystem& sys, const Tolerances& tol) {
    DetectabilityCertificate cert;
    cert.method = Method::Wong;
    const auto sp = StackedPencil::from(sys);
    if (sys.n() == 0 || sys.r() == 0) return cert;
    const auto q = qkf(sp.pencil(), tol);
    const CMat Kc = sys.K.cast<Complex>();
    const double threshold = tol.zero_atol * std::max(1.0, spectral_norm<double>(sys.K));
    for (Complex lambda : probe_points(q, tol)) {
        const auto wong = wong_sequence(sp.pencil(), lambda, tol);
        WongProbe probe;
        probe.lambda = lambda;
        probe.dim_terminal = wong.terminal.dim();
        probe.k_residual = spectral_norm<Complex>(CMat(Kc * wong.terminal.basis()));
        probe.threshold = threshold;
        probe.contained_in_kernel = probe.k_residual <= threshold;
        probe.marginal = near_threshold(probe.k_residual, threshold);
        cert.block_length_used = std::max(cert.block_length_used, wong.termination_index);
        cert.wong_probes.push_back(probe);
        if (!probe.contained_in_kernel) cert.verdict = false;
    }
    return cert;
}

DetectabilityCertificate is_partially_detectable_qkf(const DescriptorSystem& sys, const Tolerances& tol) {
    DetectabilityCertificate cert;
    cert.method = Method::Qkf;
    const auto sp = StackedPencil::from(sys);
    const auto q = qkf(sp.pencil(), tol);
    const auto split = ordered_spectral_split(q.J_f, tol);
    const auto parts = partition_outputs(sys.K, q, split);
    QkfProbe probe;
    probe.sizes = q.sizes;
    probe.n_f1 = split.n1;
    probe.norm_K_eps = spectral_norm<double>(parts.K_eps);
    probe.norm_K_f1 = spectral_norm<double>(parts.K_f1);
    probe.threshold = tol.zero_atol * std::max(1.0, spectral_norm<double>(sys.K));
    probe.marginal = near_threshold(probe.norm_K_eps, probe.threshold) ||
                     near_threshold(probe.norm_K_f1, probe.threshold);
    cert.verdict = probe.norm_K_eps <= probe.threshold && probe.norm_K_f1 <= probe.threshold;
    cert.block_length_used = sys.n();
    cert.qkf_probe = probe;
    return cert;
}

DetectabilityCertificate is_partially_detectable(const DescriptorSystem& sys, Method method,
                                                 const Tolerances& tol) {
    switch (method) {
        case Method::Rank: return is_partially_detectable_rank(sys, tol);
        case Method::Wong: return is_partially_detectable_wong(sys, tol);
        case Method::Qkf: return is_partially_detectable_qkf(sys, tol);
    }
    throw std::invalid_argument("unknown detectability method");
}

bool is_behaviorally_detectable(const DescriptorSystem& sys, const Tolerances& tol) {
    const auto sp = StackedPencil::from(sys);
    const Index n = sys.n();
    if (n == 0) return true;
    const auto q = qkf(sp.pencil(), tol);
    for (Complex lambda : probe_points(q, tol)) {
        if (numerical_rank<Complex>(sp.pencil().at(lambda), pencil_scale(sp.pencil(), lambda), tol) != n) return false;
    }
    return true;
}

std::vector<TowerRanks> ss_tower_ranks(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol) {
    const Index n = A.rows();
    if (A.cols() != n) throw DimensionError("ss_partial_detectability: A must be square");
    if (C.cols() != n || K.cols() != n) throw DimensionError("ss_partial_detectability: C or K has wrong width");
    std::vector<TowerRanks> out;
    const CMat Chat = normalized_rows(C).cast<Complex>();
    const CMat Khat = normalized_rows(K).cast<Complex>();
    for (Complex lambda : unstable_eigenvalues(A, tol)) {
        // ker of the tower lives in the generalized eigenspace ker (lambda I - A)^n, on
        // which lambda I - A acts nilpotently; evaluating the tower there avoids forming
        // high matrix powers (row scalings of a block do not change the kernel).
        const CMat shifted = lambda * CMat::Identity(n, n) - A.cast<Complex>();
        const double scale = std::max(1.0, std::abs(lambda) + spectral_norm<double>(A));
        Subspace gen = Subspace::zero(n);
        for (Index i = 0; i < n; ++i) {
            Subspace next = preimage<Complex>(shifted, gen, scale, tol);
            const bool done = next.dim() == gen.dim();
            gen = std::move(next);
            if (done) break;
        }
        const CMat V = gen.basis();
        const Index g = V.cols();
        CMat N = V.adjoint() * shifted * V;
        N /= std::max(1.0, spectral_norm<Complex>(N));
        CMat tower(n * Chat.rows(), g);
        CMat power = CMat::Identity(g, g);
        for (Index j = 0; j < n; ++j) {
            tower.middleRows(j * Chat.rows(), Chat.rows()) = Chat * V * power;
            power = power * N;
        }
        CMat withK(tower.rows() + Khat.rows(), g);
        withK << tower, Khat * V;
        const auto ker = kernel_basis<Complex>(tower, 1.0, tol);
        const auto kerK = kernel_basis<Complex>(withK, 1.0, tol);
        out.push_back({lambda, n - ker.dim(), n - kerK.dim()});
    }
    return out;
}

bool ss_partial_detectability(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol) {
    for (const auto& t : ss_tower_ranks(A, C, K, tol))
        if (t.rank_with_K != t.rank_without_K) return false;
    return true;
}

bool legacy_functional_detectability(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol) {
    const Index n = A.rows();
    if (A.cols() != n) throw DimensionError("legacy_functional_detectability: A must be square");
    if (C.cols() != n || K.cols() != n) throw DimensionError("legacy_functional_detectability: C or K has wrong width");
    const CMat Khat = normalized_rows(K).cast<Complex>();
    for (Complex lambda : unstable_eigenvalues(A, tol)) {
        CMat X(n + C.rows(), n);
        X << lambda * CMat::Identity(n, n) - A.cast<Complex>(), C.cast<Complex>();
        if (!kernel_included<Complex>(X, Khat, tol)) return false;
    }
    return true;
}

}  // namespace descobs
