#pragma once

// Random generators shared by the property tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "descobs/linalg.hpp"
#include "descobs/pencil.hpp"
#include "descobs/system.hpp"

namespace testsupport {

using namespace descobs;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::mt19937_64 gen_;
};

/// Entries in {lo..hi}; a share of entries is forced to zero so that rank
/// deficiencies and structural zeros actually occur.
inline Mat int_matrix(Rng& rng, Index r, Index c, int lo = -2, int hi = 2, double zero_share = 0.35) {
    Mat M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = rng.chance(zero_share) ? 0.0 : rng.integer(lo, hi);
    return M;
}

inline Mat gauss_matrix(Rng& rng, Index r, Index c) {
    Mat M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = rng.normal();
    return M;
}

/// Product of unit lower and unit upper triangular integer factors: determinant 1,
/// small entries, modest condition number.
inline Mat unimodular(Rng& rng, Index n) {
    Mat L = Mat::Identity(n, n), U = Mat::Identity(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < i; ++j) {
            L(i, j) = rng.integer(-1, 1);
            U(j, i) = rng.integer(-1, 1);
        }
    Mat M = L * U;
    // Random signed permutation keeps it unimodular up to sign.
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.integer(0, static_cast<int>(i)))]);
    Mat out(n, n);
    for (Index i = 0; i < n; ++i) out.row(i) = M.row(perm[static_cast<std::size_t>(i)]) * (rng.chance(0.5) ? 1.0 : -1.0);
    return out;
}

struct SystemShape {
    int max_m = 6, max_n = 6, max_k = 3, max_p = 3, min_r = 1, max_r = 3;
};

inline DescriptorSystem random_system(Rng& rng, const SystemShape& s = {}) {
    const Index m = rng.integer(1, s.max_m);
    const Index n = rng.integer(1, s.max_n);
    const Index k = rng.integer(0, s.max_k);
    const Index p = rng.integer(0, s.max_p);
    const Index r = rng.integer(s.min_r, s.max_r);
    // E gets extra zeros so that singular and rectangular structure is common.
    DescriptorSystem sys(int_matrix(rng, m, n, -2, 2, 0.5), int_matrix(rng, m, n), int_matrix(rng, m, k),
                         int_matrix(rng, p, n), int_matrix(rng, p, k), int_matrix(rng, r, n));
    return sys;
}

/// State-space system with E = I.
inline DescriptorSystem random_ss_system(Rng& rng, int max_n = 5) {
    const Index n = rng.integer(1, max_n);
    const Index p = rng.integer(0, 2);
    const Index r = rng.integer(1, 2);
    return DescriptorSystem(Mat::Identity(n, n), int_matrix(rng, n, n), Mat(n, 0), int_matrix(rng, p, n),
                            Mat(p, 0), int_matrix(rng, r, n));
}

struct PlantedPencil {
    Pencil pencil{Mat(0, 0), Mat(0, 0)};
    QkfSizes sizes;
    Mat J;  ///< planted finite block
};

/// Pencil with known quasi-Kronecker structure: L_k blocks, a finite block, a
/// nilpotent block and L_k^T blocks, hidden by unimodular P0, Q0.
inline PlantedPencil planted_pencil(Rng& rng, int max_dim = 6) {
    for (;;) {
        std::vector<int> epsK, etaK;
        const int nEps = rng.integer(0, 2), nEta = rng.integer(0, 2);
        for (int i = 0; i < nEps; ++i) epsK.push_back(rng.integer(0, 2));
        for (int i = 0; i < nEta; ++i) etaK.push_back(rng.integer(0, 2));
        const int nf = rng.integer(0, 3), ns = rng.integer(0, 3);

        QkfSizes sz;
        for (int k : epsK) {
            sz.m_eps += k;
            sz.n_eps += k + 1;
        }
        for (int k : etaK) {
            sz.m_eta += k + 1;
            sz.n_eta += k;
        }
        sz.n_f = nf;
        sz.n_sig = ns;
        const Index m = sz.m_eps + nf + ns + sz.m_eta;
        const Index n = sz.n_eps + nf + ns + sz.n_eta;
        if (m == 0 || n == 0 || m > max_dim || n > max_dim) continue;

        std::vector<Mat> Eb, Ab;
        for (int k : epsK) {
            Mat E = Mat::Zero(k, k + 1), A = Mat::Zero(k, k + 1);
            E.leftCols(k) = Mat::Identity(k, k);
            A.rightCols(k) = Mat::Identity(k, k);
            Eb.push_back(E);
            Ab.push_back(A);
        }
        Mat J = gauss_matrix(rng, nf, nf);
        Eb.push_back(Mat::Identity(nf, nf));
        Ab.push_back(J);
        Mat N = Mat::Zero(ns, ns);
        for (Index i = 0; i + 1 < ns; ++i) N(i, i + 1) = rng.chance(0.7) ? 1.0 : 0.0;
        Eb.push_back(N);
        Ab.push_back(Mat::Identity(ns, ns));
        for (int k : etaK) {
            Mat E = Mat::Zero(k + 1, k), A = Mat::Zero(k + 1, k);
            E.topRows(k) = Mat::Identity(k, k);
            A.bottomRows(k) = Mat::Identity(k, k);
            Eb.push_back(E);
            Ab.push_back(A);
        }
        // blkdiag of possibly rectangular blocks.
        Mat E = Mat::Zero(m, n), A = Mat::Zero(m, n);
        Index r0 = 0, c0 = 0;
        for (std::size_t i = 0; i < Eb.size(); ++i) {
            E.block(r0, c0, Eb[i].rows(), Eb[i].cols()) = Eb[i];
            A.block(r0, c0, Ab[i].rows(), Ab[i].cols()) = Ab[i];
            r0 += Eb[i].rows();
            c0 += Eb[i].cols();
        }
        const Mat P0 = unimodular(rng, m), Q0 = unimodular(rng, n);
        PlantedPencil out;
        out.pencil = Pencil(P0 * E * Q0, P0 * A * Q0);
        out.sizes = sz;
        out.J = J;
        return out;
    }
}

/// Compare two spectra as multisets, each entry matched to a distinct partner.
inline bool same_spectrum(std::vector<EigenCluster> a, std::vector<EigenCluster> b, double tol) {
    auto expand = [](const std::vector<EigenCluster>& cs) {
        std::vector<Complex> out;
        for (const auto& c : cs)
            for (Index i = 0; i < c.multiplicity; ++i) out.push_back(c.center);
        return out;
    };
    std::vector<Complex> x = expand(a), y = expand(b);
    if (x.size() != y.size()) return false;
    for (Complex v : x) {
        auto it = std::min_element(y.begin(), y.end(),
                                   [v](Complex p, Complex q) { return std::abs(p - v) < std::abs(q - v); });
        if (it == y.end() || std::abs(*it - v) > tol * std::max(1.0, std::abs(v))) return false;
        y.erase(it);
    }
    return true;
}

inline std::string fixture(const std::string& name) { return std::string(DESCOBS_FIXTURE_DIR) + "/" + name; }

}  // namespace testsupport
