#pragma once

#include <optional>
#include <string>
#include <vector>

#include "descobs/linalg.hpp"
#include "descobs/pencil.hpp"
#include "descobs/system.hpp"

namespace descobs {

enum class Method { Rank, Wong, Qkf };

std::string to_string(Method m);

struct RankProbe {
    Complex lambda;
    Index block_length = 0;
    Index rank_without_K = 0;
    Index rank_with_K = 0;
    bool marginal = false;
};

struct WongProbe {
    Complex lambda;
    Index dim_terminal = 0;
    double k_residual = 0.0;  ///< |K * basis(W*)|
    double threshold = 0.0;
    bool contained_in_kernel = false;
    bool marginal = false;
};

struct QkfProbe {
    double norm_K_eps = 0.0;
    double norm_K_f1 = 0.0;
    double threshold = 0.0;
    QkfSizes sizes;
    Index n_f1 = 0;
    bool marginal = false;
};

/// Outcome of one detectability test together with the data that decided it.
struct DetectabilityCertificate {
    bool verdict = true;
    Method method = Method::Rank;
    std::vector<RankProbe> rank_probes;
    std::vector<WongProbe> wong_probes;
    std::optional<QkfProbe> qkf_probe;
    Index block_length_used = 0;

    /// Some decision sat within a few decades of its threshold.
    bool marginal() const;
};

/// K Q partitioned along the quasi-Kronecker blocks, and K_f along the spectral split.
struct PartitionedOutputs {
    Mat K_eps, K_f, K_sig, K_eta;
    Mat K_f1, K_f2;
};

PartitionedOutputs partition_outputs(const Mat& K, const QkfDecomposition& q, const SpectralSplit& split);

/// Block lower-bidiagonal G_l with lambda Ecal - Acal on the diagonal and Ecal below it;
/// an extra bottom row [0 ... 0 K] when K is supplied.
CMat build_G(Index l, const StackedPencil& sp, Complex lambda, const std::optional<Mat>& K = std::nullopt);

/// Finite eigenvalues of the stacked pencil in the closed right half-plane plus one
/// point that is not an eigenvalue, sorted by real then imaginary part.
std::vector<Complex> probe_points(const QkfDecomposition& q, const Tolerances& tol);

DetectabilityCertificate is_partially_detectable_rank(const DescriptorSystem& sys, const Tolerances& tol);
DetectabilityCertificate is_partially_detectable_wong(const DescriptorSystem& sys, const Tolerances& tol);
DetectabilityCertificate is_partially_detectable_qkf(const DescriptorSystem& sys, const Tolerances& tol);

DetectabilityCertificate is_partially_detectable(const DescriptorSystem& sys, Method method,
                                                 const Tolerances& tol);

/// rank [lambda E - A; C] = n on the probe set.
bool is_behaviorally_detectable(const DescriptorSystem& sys, const Tolerances& tol);

/// State-space criterion with the tower [(lambda I - A)^n; C (lambda I - A)^{n-1}; ...; C] (+ K).
bool ss_partial_detectability(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol);

/// The older single-step test rank [lambda I - A; C; K] = rank [lambda I - A; C].
/// Only valid when the closed right half-plane eigenvalues of A are semisimple;
/// kept for comparison.
bool legacy_functional_detectability(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol);

struct TowerRanks {
    Complex lambda;
    Index rank_without_K = 0;
    Index rank_with_K = 0;
};

/// Per-eigenvalue ranks of the state-space tower test.
std::vector<TowerRanks> ss_tower_ranks(const Mat& A, const Mat& C, const Mat& K, const Tolerances& tol);

}  // namespace descobs
