#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace descobs {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Thresholds shared by every rank, zero and stability decision.
struct Tolerances {
    /// Singular values below rank_rtol * max(rows, cols) * sigma_max count as zero.
    double rank_rtol = 1e-10;
    /// Eigenvalues with Re > -stab_margin are treated as closed right half-plane.
    double stab_margin = 1e-9;
    /// Relative threshold for "this block is zero".
    double zero_atol = 1e-8;
    /// Eigenvalues closer than cluster_rtol * max(1, |M|) are treated as one
    /// (perturbed) multiple eigenvalue.
    double cluster_rtol = 1e-5;

    void validate() const;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Subspace of Scalar^ambient stored through an orthonormal basis.
template <typename Scalar>
class BasicSubspace {
public:
    using Matrix = MatrixX<Scalar>;

    BasicSubspace() = default;

    static BasicSubspace zero(Index ambient);
    static BasicSubspace full(Index ambient);

    /// Orthonormal basis of the column span of `spanning`. Directions whose
    /// singular value falls under the rank cutoff relative to `scale` are dropped.
    static BasicSubspace span(const Matrix& spanning, double scale, const Tolerances& tol);
    static BasicSubspace span(const Matrix& spanning, const Tolerances& tol);

    Index ambient() const { return ambient_; }
    Index dim() const { return basis_.cols(); }
    const Matrix& basis() const { return basis_; }

    /// Orthogonal projector onto the subspace.
    Matrix projector() const;

private:
    BasicSubspace(Index ambient, Matrix basis) : ambient_(ambient), basis_(std::move(basis)) {}

    Index ambient_ = 0;
    Matrix basis_;
};

using Subspace = BasicSubspace<Complex>;
using RealSubspace = BasicSubspace<double>;

template <typename Scalar>
double spectral_norm(const MatrixX<Scalar>& M);

/// 2-norm condition number; +inf for singular, 1 for the empty matrix.
double condition_number(const Mat& M);

template <typename Scalar>
Index numerical_rank(const MatrixX<Scalar>& M, const Tolerances& tol);

/// Rank with the cutoff taken relative to an external scale instead of sigma_max(M).
template <typename Scalar>
Index numerical_rank(const MatrixX<Scalar>& M, double scale, const Tolerances& tol);

/// Singular values (descending) and the cutoff applied to them.
struct RankProfile {
    Vec singular_values;
    double cutoff = 0.0;
    Index rank = 0;

    /// True when some singular value lies within `decades` orders of magnitude
    /// of the cutoff, i.e. the rank decision could flip under a different tolerance.
    bool marginal(double decades = 3.0) const;
};

template <typename Scalar>
RankProfile rank_profile(const MatrixX<Scalar>& M, double scale, const Tolerances& tol);

template <typename Scalar>
BasicSubspace<Scalar> kernel_basis(const MatrixX<Scalar>& M, const Tolerances& tol);

template <typename Scalar>
BasicSubspace<Scalar> kernel_basis(const MatrixX<Scalar>& M, double scale, const Tolerances& tol);

/// {x : Mx in S}.
template <typename Scalar>
BasicSubspace<Scalar> preimage(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S,
                               const Tolerances& tol);

/// Same, with rank decisions relative to `scale` instead of |M|.
template <typename Scalar>
BasicSubspace<Scalar> preimage(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S, double scale,
                               const Tolerances& tol);

/// M * S.
template <typename Scalar>
BasicSubspace<Scalar> image(const MatrixX<Scalar>& M, const BasicSubspace<Scalar>& S,
                            const Tolerances& tol = {});

/// ker X subset of ker Y, decided as rank [X; Y] == rank X on a common scale.
template <typename Scalar>
bool kernel_included(const MatrixX<Scalar>& X, const MatrixX<Scalar>& Y, const Tolerances& tol);

template <typename Scalar>
BasicSubspace<Scalar> subspace_sum(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                                   const Tolerances& tol);

template <typename Scalar>
BasicSubspace<Scalar> intersection(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                                   const Tolerances& tol);

template <typename Scalar>
BasicSubspace<Scalar> orthogonal_complement(const BasicSubspace<Scalar>& s, const Tolerances& tol);

/// Orthogonal complement of `inner` inside `outer` (inner is assumed contained in outer).
template <typename Scalar>
BasicSubspace<Scalar> complement_within(const BasicSubspace<Scalar>& outer,
                                        const BasicSubspace<Scalar>& inner, const Tolerances& tol);

/// a subset of b, up to the rank tolerance.
template <typename Scalar>
bool contained_in(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b,
                  const Tolerances& tol);

/// A group of numerically coincident eigenvalues.
struct EigenCluster {
    Complex center;
    Index multiplicity = 0;
};

/// Single-linkage grouping of eigenvalues closer than `radius`; the center is the
/// cluster mean, which stays accurate for perturbed Jordan blocks.
std::vector<EigenCluster> cluster_eigenvalues(const std::vector<Complex>& eigenvalues, double radius);

std::vector<Complex> eigenvalues(const Mat& M);

/// Clustered spectrum of a square matrix, sorted by real then imaginary part.
std::vector<EigenCluster> spectrum_clusters(const Mat& M, const Tolerances& tol);

/// Closed right half-plane membership with the boundary margin.
bool in_closed_rhp(Complex lambda, const Tolerances& tol);

struct SpectralSplit {
    Mat U;   ///< nonsingular, U^-1 M U = blkdiag(M1, M2)
    Mat M1;  ///< spectrum in the closed right half-plane
    Mat M2;  ///< spectrum in the open left half-plane
    Index n1 = 0;
    Index n2 = 0;
};

/// Ordered real Schur form followed by a Sylvester decoupling of the two diagonal blocks.
SpectralSplit ordered_spectral_split(const Mat& M, const Tolerances& tol);

Mat blkdiag(const std::vector<Mat>& blocks);

}  // namespace descobs
