#include "descobs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace descobs {

void Tolerances::validate() const {
    if (!(rank_rtol > 0 && stab_margin > 0 && zero_atol > 0 && cluster_rtol > 0)) {
        throw std::invalid_argument("tolerances must be strictly positive");
    }
}

namespace {

template <typename Scalar>
double cutoff_for(Index rows, Index cols, double scale, const Tolerances& tol) {
    return tol.rank_rtol * static_cast<double>(std::max<Index>({rows, cols, 1})) * scale;
}

template <typename Scalar>
Vec singular_values(const MatrixX<Scalar>& M) {
    if (M.size() == 0) return Vec(0);
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(M);
    return svd.singularValues();
}

template <typename Scalar>
Index count_above(const Vec& sv, double cutoff) {
    Index r = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++r;
    }
    return r;
}

}  // namespace

template <typename Scalar>
BasicSubspace<Scalar> BasicSubspace<Scalar>::zero(Index ambient) {
    return BasicSubspace(ambient, Matrix(ambient, 0));
}

template <typename Scalar>
BasicSubspace<Scalar> BasicSubspace<Scalar>::full(Index ambient) {
    return BasicSubspace(ambient, Matrix::Identity(ambient, ambient));
}

template <typename Scalar>
BasicSubspace<Scalar> BasicSubspace<Scalar>::span(const Matrix& spanning, double scale,
                                                  const Tolerances& tol) {
    const Index n = spanning.rows();
    if (spanning.cols() == 0 || n == 0) return zero(n);
    Eigen::JacobiSVD<Matrix> svd(spanning, Eigen::ComputeThinU);
    const double cut = cutoff_for<Scalar>(spanning.rows(), spanning.cols(), scale, tol);
    const Index r = count_above<Scalar>(svd.singularValues(), cut);
    return BasicSubspace(n, svd.matrixU().leftCols(r));
}

template <typename Scalar>
BasicSubspace<Scalar> BasicSubspace<Scalar>::span(const Matrix& spanning, const Tolerances& tol) {
    return span(spanning, spectral_norm<Scalar>(spanning), tol);
}

template <typename Scalar>
typename BasicSubspace<Scalar>::Matrix BasicSubspace<Scalar>::projector() const {
    return basis_ * basis_.adjoint();
}

template <typename Scalar>
double spectral_norm(const MatrixX<Scalar>& M) {
    const Vec sv = singular_values<Scalar>(M);
    return sv.size() == 0 ? 0.0 : sv(0);
}

double condition_number(const Mat& M) {
    if (M.size() == 0) return 1.0;
    const Vec sv = singular_values<double>(M);
    const double smin = sv(sv.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

template <typename Scalar>
Index numerical_rank(const MatrixX<Scalar>& M, double scale, const Tolerances& tol) {
    return rank_profile<Scalar>(M, scale, tol).rank;
}

template <typename Scalar>
Index numerical_rank(const MatrixX<Scalar>& M, const Tolerances& tol) {
    const Vec sv = singular_values<Scalar>(M);
    if (sv.size() == 0) return 0;
    return count_above<Scalar>(sv, cutoff_for<Scalar>(M.rows(), M.cols(), sv(0), tol));
}

bool RankProfile::marginal(double decades) const {
    if (cutoff <= 0.0) return false;
    const double lo = cutoff * std::pow(10.0, -decades);
    const double hi = cutoff * std::pow(10.0, decades);
    for (Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > lo && singular_values(i) < hi) return true;
    }
    return false;
}

template <typename Scalar>
RankProfile rank_profile(const MatrixX<Scalar>& M, double scale, const Tolerances& tol) {
    RankProfile p;
    p.singular_values = singular_values<Scalar>(M);
    p.cutoff = cutoff_for<Scalar>(M.rows(), M.cols(), scale, tol);
    p.rank = count_above<Scalar>(p.singular_values, p.cutoff);
    return p;
}

template <typename Scalar>
BasicSubspace<Scalar> kernel_basis(const MatrixX<Scalar>& M, double scale, const Tolerances& tol) {
    const Index n = M.cols();
    if (M.rows() == 0 || n == 0) return BasicSubspace<Scalar>::full(n);
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(M, Eigen::ComputeFullV);
    const Index r =
        count_above<Scalar>(svd.singularValues(), cutoff_for<Scalar>(M.rows(), n, scale, tol));
    // JacobiSVD returns orthonormal V; the trailing columns span the kernel.
    return BasicSubspace<Scalar>::span(svd.matrixV().rightCols(n - r), 1.0, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> kernel_basis(const MatrixX<Scalar>& M, const Tolerances& tol) {
    return kernel_basis<Scalar>(M, spectral_norm<Scalar>(M), tol);
}

template <typename Scalar>
BasicSubspace<Scalar> preimage(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S, double scale,
                               const Tolerances& tol) {
    if (S.ambient() != M.rows()) {
        std::ostringstream msg;
        msg << "preimage: matrix has " << M.rows() << " rows, subspace ambient is " << S.ambient();
        throw DimensionError(msg.str());
    }
    const MatrixX<Scalar> residual = M - S.basis() * (S.basis().adjoint() * M);
    return kernel_basis<Scalar>(residual, scale, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> preimage(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S,
                               const Tolerances& tol) {
    // The cutoff is relative to M, not to the (possibly tiny) projected residual.
    return preimage<Scalar>(M, S, spectral_norm<Scalar>(M), tol);
}

template <typename Scalar>
BasicSubspace<Scalar> image(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S,
                            const Tolerances& tol) {
    if (S.ambient() != M.cols()) {
        std::ostringstream msg;
        msg << "image: matrix has " << M.cols() << " columns, subspace ambient is " << S.ambient();
        throw DimensionError(msg.str());
    }
    return BasicSubspace<Scalar>::span(M * S.basis(), spectral_norm<Scalar>(M), tol);
}

template <typename Scalar>
bool kernel_included(const MatrixX<Scalar>& X, const MatrixX<Scalar>& Y, const Tolerances& tol) {
    if (X.cols() != Y.cols()) throw DimensionError("kernel_included: column counts differ");
    MatrixX<Scalar> stacked(X.rows() + Y.rows(), X.cols());
    stacked << X, Y;
    const double scale = spectral_norm<Scalar>(stacked);
    return numerical_rank<Scalar>(stacked, scale, tol) == numerical_rank<Scalar>(X, scale, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> subspace_sum(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                                   const Tolerances& tol) {
    if (a.ambient() != b.ambient()) throw DimensionError("subspace_sum: ambient mismatch");
    MatrixX<Scalar> both(a.ambient(), a.dim() + b.dim());
    both << a.basis(), b.basis();
    return BasicSubspace<Scalar>::span(both, 1.0, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> intersection(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                                   const Tolerances& tol) {
    if (a.ambient() != b.ambient()) throw DimensionError("intersection: ambient mismatch");
    if (a.dim() == 0 || b.dim() == 0) return BasicSubspace<Scalar>::zero(a.ambient());
    MatrixX<Scalar> pair(a.ambient(), a.dim() + b.dim());
    pair << a.basis(), -b.basis();
    const auto coeffs = kernel_basis<Scalar>(pair, 1.0, tol);
    return BasicSubspace<Scalar>::span(a.basis() * coeffs.basis().topRows(a.dim()), 1.0, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> orthogonal_complement(const BasicSubspace<Scalar>& s, const Tolerances& tol) {
    if (s.dim() == 0) return BasicSubspace<Scalar>::full(s.ambient());
    return kernel_basis<Scalar>(MatrixX<Scalar>(s.basis().adjoint()), 1.0, tol);
}

template <typename Scalar>
BasicSubspace<Scalar> complement_within(const BasicSubspace<Scalar>& outer,
                                        const BasicSubspace<Scalar>& inner, const Tolerances& tol) {
    if (outer.ambient() != inner.ambient()) throw DimensionError("complement_within: ambient mismatch");
    const MatrixX<Scalar> residual = outer.basis() - inner.projector() * outer.basis();
    return BasicSubspace<Scalar>::span(residual, 1.0, tol);
}

template <typename Scalar>
bool contained_in(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                  const Tolerances& tol) {
    return subspace_sum<Scalar>(a, b, tol).dim() == b.dim();
}

std::vector<EigenCluster> cluster_eigenvalues(const std::vector<Complex>& ev, double radius) {
    const std::size_t n = ev.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(ev[i] - ev[j]) <= radius) parent[find(i)] = find(j);
        }
    }
    std::vector<EigenCluster> out;
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            out.push_back({ev[i], 1});
        } else {
            auto& c = out[static_cast<std::size_t>(it - roots.begin())];
            c.center += ev[i];
            ++c.multiplicity;
        }
    }
    for (auto& c : out) {
        c.center /= static_cast<double>(c.multiplicity);
        // Clusters straddling the real axis are real.
        if (std::abs(c.center.imag()) <= radius) c.center = Complex(c.center.real(), 0.0);
    }
    std::sort(out.begin(), out.end(), [](const EigenCluster& a, const EigenCluster& b) {
        if (a.center.real() != b.center.real()) return a.center.real() < b.center.real();
        return a.center.imag() < b.center.imag();
    });
    return out;
}

std::vector<Complex> eigenvalues(const Mat& M) {
    if (M.rows() != M.cols()) throw DimensionError("eigenvalues: matrix not square");
    if (M.size() == 0) return {};
    Eigen::EigenSolver<Mat> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
    const CVec v = es.eigenvalues();
    return {v.data(), v.data() + v.size()};
}

std::vector<EigenCluster> spectrum_clusters(const Mat& M, const Tolerances& tol) {
    const double radius = tol.cluster_rtol * std::max(1.0, spectral_norm<double>(M));
    return cluster_eigenvalues(eigenvalues(M), radius);
}

bool in_closed_rhp(Complex lambda, const Tolerances& tol) {
    return lambda.real() > -tol.stab_margin;
}

SpectralSplit ordered_spectral_split(const Mat& M, const Tolerances& tol) {
    if (M.rows() != M.cols()) throw DimensionError("ordered_spectral_split: matrix not square");
    const lapack_int n = static_cast<lapack_int>(M.rows());
    SpectralSplit out;
    if (n == 0) {
        out.U = Mat(0, 0);
        out.M1 = Mat(0, 0);
        out.M2 = Mat(0, 0);
        return out;
    }

    // Column-major copies for LAPACK.
    Mat T = M;
    Mat Z(n, n);
    Vec wr(n), wi(n);
    lapack_int sdim = 0;
    lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, T.data(), n, &sdim,
                                    wr.data(), wi.data(), Z.data(), n);
    if (info != 0) throw NumericalError("real Schur decomposition failed (dgees info != 0)");

    std::vector<Complex> ev(static_cast<std::size_t>(n));
    for (lapack_int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = Complex(wr(i), wi(i));
    const double radius = tol.cluster_rtol * std::max(1.0, spectral_norm<double>(M));

    // Classify every eigenvalue by the center of the cluster it belongs to, so a
    // split Jordan block is never torn across the imaginary axis.
    const auto clusters = cluster_eigenvalues(ev, radius);
    std::vector<lapack_int> select(static_cast<std::size_t>(n), 0);
    for (lapack_int i = 0; i < n; ++i) {
        Complex center(0.0, 0.0);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : clusters) {
            const double d = std::abs(c.center - ev[static_cast<std::size_t>(i)]);
            if (d < best) {
                best = d;
                center = c.center;
            }
        }
        select[static_cast<std::size_t>(i)] = in_closed_rhp(center, tol) ? 1 : 0;
    }

    lapack_int m = 0;
    double s = 0.0, sep = 0.0;
    // The high-level LAPACKE wrapper passes a null iwork for job = 'N', which some
    // LAPACK builds still write to; supply the workspaces explicitly.
    std::vector<double> work(static_cast<std::size_t>(std::max<lapack_int>(1, n)));
    std::vector<lapack_int> iwork(1);
    info = LAPACKE_dtrsen_work(LAPACK_COL_MAJOR, 'N', 'V', select.data(), n, T.data(), n, Z.data(), n,
                               wr.data(), wi.data(), &m, &s, &sep, work.data(),
                               static_cast<lapack_int>(work.size()), iwork.data(), 1);
    if (info != 0) throw NumericalError("Schur reordering failed (dtrsen info != 0)");

    const Index n1 = m;
    const Index n2 = n - m;
    Mat X = Mat::Zero(n1, n2);
    if (n1 > 0 && n2 > 0) {
        // T11 X - X T22 = -T12 makes [I X; 0 I] decouple the triangular form.
        Mat T11 = T.topLeftCorner(n1, n1);
        Mat T22 = T.bottomRightCorner(n2, n2);
        X = -T.topRightCorner(n1, n2);
        double scale = 1.0;
        info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, static_cast<lapack_int>(n1),
                              static_cast<lapack_int>(n2), T11.data(), static_cast<lapack_int>(n1),
                              T22.data(), static_cast<lapack_int>(n2), X.data(),
                              static_cast<lapack_int>(n1), &scale);
        if (info < 0) throw NumericalError("Sylvester solve failed (dtrsyl)");
        X /= scale;
    }
    Mat W = Mat::Identity(n, n);
    W.topRightCorner(n1, n2) = X;
    out.U = Z * W;
    out.M1 = T.topLeftCorner(n1, n1);
    out.M2 = T.bottomRightCorner(n2, n2);
    out.n1 = n1;
    out.n2 = n2;

    const Mat back = out.U * blkdiag({out.M1, out.M2}) * out.U.inverse();
    const double mnorm = std::max(1.0, spectral_norm<double>(M));
    if ((back - M).norm() > 1e-8 * mnorm * std::max(1.0, condition_number(out.U))) {
        throw NumericalError("spectral split residual too large; eigenvalues too close to separate");
    }
    return out;
}

Mat blkdiag(const std::vector<Mat>& blocks) {
    Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out = Mat::Zero(rows, cols);
    Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

#define DESCOBS_INSTANTIATE(S)                                                                     \
    template class BasicSubspace<S>;                                                               \
    template double spectral_norm<S>(const MatrixX<S>&);                                           \
    template Index numerical_rank<S>(const MatrixX<S>&, const Tolerances&);                        \
    template Index numerical_rank<S>(const MatrixX<S>&, double, const Tolerances&);                \
    template RankProfile rank_profile<S>(const MatrixX<S>&, double, const Tolerances&);            \
    template BasicSubspace<S> kernel_basis<S>(const MatrixX<S>&, const Tolerances&);               \
    template BasicSubspace<S> kernel_basis<S>(const MatrixX<S>&, double, const Tolerances&);       \
    template BasicSubspace<S> preimage<S>(const MatrixX<S>&, const BasicSubspace<S>&,              \
                                          const Tolerances&);                                      \
    template BasicSubspace<S> preimage<S>(const MatrixX<S>&, const BasicSubspace<S>&, double,      \
                                          const Tolerances&);                                      \
    template BasicSubspace<S> image<S>(const MatrixX<S>&, const BasicSubspace<S>&,                 \
                                       const Tolerances&);                                         \
    template bool kernel_included<S>(const MatrixX<S>&, const MatrixX<S>&, const Tolerances&);     \
    template BasicSubspace<S> subspace_sum<S>(const BasicSubspace<S>&, const BasicSubspace<S>&,    \
                                              const Tolerances&);                                  \
    template BasicSubspace<S> intersection<S>(const BasicSubspace<S>&, const BasicSubspace<S>&,    \
                                              const Tolerances&);                                  \
    template BasicSubspace<S> orthogonal_complement<S>(const BasicSubspace<S>&, const Tolerances&);\
    template BasicSubspace<S> complement_within<S>(const BasicSubspace<S>&,                        \
                                                   const BasicSubspace<S>&, const Tolerances&);    \
    template bool contained_in<S>(const BasicSubspace<S>&, const BasicSubspace<S>&,                \
                                  const Tolerances&);

DESCOBS_INSTANTIATE(double)
DESCOBS_INSTANTIATE(Complex)

#undef DESCOBS_INSTANTIATE

}  // namespace descobs
