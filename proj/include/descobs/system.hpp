#pragma once

#include <string>

#include "descobs/linalg.hpp"

namespace descobs {

/// E x' = A x + B u,  y = C x + D u,  z = K x.
/// E and A are m x n and need not be square or regular.
struct DescriptorSystem {
    Mat E, A, B, C, D, K;
    std::string description;

    DescriptorSystem() = default;
    DescriptorSystem(Mat E, Mat A, Mat B, Mat C, Mat D, Mat K);

    Index m() const { return E.rows(); }
    Index n() const { return E.cols(); }
    Index k() const { return B.cols(); }
    Index p() const { return C.rows(); }
    Index r() const { return K.rows(); }

    /// Throws DimensionError naming the first inconsistent matrix.
    void validate() const;

    /// [B 0; D -I_p]: input map of the stacked pencil for ubar = (u; y).
    Mat stacked_input() const;

    /// (P0 E Q0, P0 A Q0, P0 B, C Q0, D, K Q0); leaves the behavior of (u, y, z) unchanged.
    DescriptorSystem transformed(const Mat& P0, const Mat& Q0) const;
};

}  // namespace descobs
