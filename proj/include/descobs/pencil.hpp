#pragma once

#include <vector>

#include "descobs/linalg.hpp"
#include "descobs/system.hpp"

namespace descobs {

/// lambda E - A with E, A in R^{m x n}.
class Pencil {
public:
    Pencil(Mat E, Mat A);

    const Mat& E() const { return E_; }
    const Mat& A() const { return A_; }
    Index rows() const { return E_.rows(); }
    Index cols() const { return E_.cols(); }

    CMat at(Complex lambda) const;

private:
    Mat E_, A_;
};

/// lambda [E; 0] - [A; C] of a descriptor system.
class StackedPencil {
public:
    static StackedPencil from(const DescriptorSystem& sys);

    const Pencil& pencil() const { return pencil_; }
    const Mat& E() const { return pencil_.E(); }
    const Mat& A() const { return pencil_.A(); }
    Index outputs() const { return outputs_; }

private:
    StackedPencil(Pencil p, Index outputs) : pencil_(std::move(p)), outputs_(outputs) {}

    Pencil pencil_;
    Index outputs_;
};

/// W^0 = {0}, W^{i+1} = (A - lambda E)^{-1} (E W^i).
struct WongSequence {
    Complex lambda;
    std::vector<Subspace> iterates;  ///< W^0 .. W^{s+1}
    Subspace terminal;
    /// Smallest s >= 1 with W^s = W^{s+1}.
    Index termination_index = 0;
};

WongSequence wong_sequence(const Pencil& p, Complex lambda, const Tolerances& tol);

/// max(1, |E| |lambda| + |A|): reference magnitude for rank decisions on lambda E - A.
double pencil_scale(const Pencil& p, Complex lambda);

struct QkfSizes {
    Index m_eps = 0, n_eps = 0;
    Index n_f = 0;
    Index n_sig = 0;
    Index m_eta = 0, n_eta = 0;

    bool operator==(const QkfSizes&) const = default;
};

/// P (lambda E - A) Q = blkdiag(lambda E_eps - A_eps, lambda I - J_f, lambda J_sig - I, lambda E_eta - A_eta).
struct QkfDecomposition {
    Mat P, Q;
    QkfSizes sizes;
    Mat E_eps, A_eps;
    Mat J_f;
    Mat J_sig;
    Mat E_eta, A_eta;
    /// Nilpotency index of J_sig (0 when the block is empty).
    Index h = 0;
    double cond_P = 1.0;
    double cond_Q = 1.0;
    /// Largest off-block-diagonal entry norm of P E Q and P A Q.
    double offdiag_residual = 0.0;

    Index row_offset(int block) const;
    Index col_offset(int block) const;
};

class QkfError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

QkfDecomposition qkf(const Pencil& p, const Tolerances& tol);

/// Clustered spectrum of J_f, i.e. the finite eigenvalues of the pencil.
std::vector<EigenCluster> finite_spectrum(const QkfDecomposition& q, const Tolerances& tol = {});

/// Smallest h with |J^h| <= zero_atol * max(1, |J|)^h; 0 for the empty matrix.
Index nilpotency_index(const Mat& J, const Tolerances& tol);

/// U2 (lambda E_eta - A_eta) = [lambda I - A_eta1; -A_eta2].
struct EtaCompression {
    Mat U2;
    Mat A_eta1;
    Mat A_eta2;
};

EtaCompression eta_compress(const Mat& E_eta, const Mat& A_eta, const Tolerances& tol);

}  // namespace descobs
