#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "descobs/detect.hpp"
#include "descobs/linalg.hpp"
#include "descobs/pencil.hpp"
#include "descobs/system.hpp"

namespace descobs {

class NotPartiallyDetectable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PlacementError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The system in observer coordinates, with ubar = (u; y):
///   J_sig x_sig' = x_sig + B_sig ubar
///   x_f2'  = J_f2 x_f2 + B_f2 ubar
///   x_eta' = A_eta1 x_eta + B_eta1 ubar
///   0      = A_eta2 x_eta + B_eta2 ubar
///   z      = K_sig x_sig + K_f2 x_f2 + K_eta x_eta
struct ReducedSystem {
    QkfSizes sizes;
    Index n_f1 = 0, n_f2 = 0;
    Index inputs = 0;  ///< k + p

    Mat J_sig, B_sig;
    Mat J_f2, B_f2;
    Mat A_eta1, B_eta1;
    Mat A_eta2, B_eta2;
    Mat K_sig, K_f2, K_eta;
    Index h = 0;

    // Blocks that do not enter the observer, kept for diagnostics.
    Mat E_eps, A_eps, B_eps, K_eps;
    Mat J_f1, B_f1, K_f1;

    Mat P, Q;
    double cond_P = 1.0, cond_Q = 1.0, cond_U1 = 1.0, cond_U2 = 1.0;

    Index r() const { return K_f2.rows(); }
    Index l() const { return n_f2 + sizes.n_eta; }

    /// Shape check of all blocks; throws DimensionError.
    void validate() const;
};

/// w' = N w + H ubar,  zhat = R w + sum_i M_i ubar^(i).
struct ObserverRealization {
    Mat N, H, R;
    std::vector<Mat> M;
    Mat L;
    Index l = 0;
    Index h = 0;
    bool stable = false;
    bool exact = false;
    double spectral_abscissa = 0.0;  ///< max Re sigma(N); -inf when l = 0
};

enum class GainStrategy { ZeroFirst, Place };

std::string to_string(GainStrategy s);

struct SynthConfig {
    GainStrategy strategy = GainStrategy::ZeroFirst;
    /// Closed under conjugation, in the open left half-plane; default -1, -2, ..., -n_eta.
    std::vector<Complex> poles;
};

struct Condition8 {
    bool holds = false;
    Index rank_R = 0;
    Index rank_O = 0;
};

struct SynthesisReport {
    bool partially_detectable = false;
    bool sigma1 = false;
    bool sigma3 = false;
    Condition8 condition8;
    std::string gain_strategy;
    double cond_P = 1.0, cond_Q = 1.0, cond_U1 = 1.0, cond_U2 = 1.0;
    /// Set when the observer only guarantees asymptotic convergence.
    bool asymptotic_only = false;
};

ReducedSystem reduce(const DescriptorSystem& sys, const Tolerances& tol);

/// L with sigma(A_eta1 - L A_eta2) = poles, via pole placement on the dual pair.
Mat stabilizing_gain(const Mat& A_eta1, const Mat& A_eta2, const std::vector<Complex>& poles,
                     const Tolerances& tol);

ObserverRealization assemble(const ReducedSystem& red, const Mat& L);

/// [R; R N; ...; R N^{l-1}].
Mat functional_observability_matrix(const Mat& R, const Mat& N);

Condition8 check_condition8(const Mat& R, const Mat& N, const Tolerances& tol);

std::pair<ObserverRealization, SynthesisReport> synthesize(const DescriptorSystem& sys,
                                                           const SynthConfig& cfg, const Tolerances& tol);

/// Gain selection, assembly and condition check on an already reduced system.
std::pair<ObserverRealization, SynthesisReport> synthesize_reduced(const ReducedSystem& red,
                                                                   const SynthConfig& cfg,
                                                                   const Tolerances& tol);

/// M_i = -K_sig J_sig^i B_sig for i < count.
std::vector<Mat> derivative_gains(const Mat& K_sig, const Mat& J_sig, const Mat& B_sig, Index count);

}  // namespace descobs
