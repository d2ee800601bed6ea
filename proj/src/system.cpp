#include "descobs/system.hpp"

#include <sstream>

namespace descobs {

DescriptorSystem::DescriptorSystem(Mat E_, Mat A_, Mat B_, Mat C_, Mat D_, Mat K_)
    : E(std::move(E_)), A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)),
      K(std::move(K_)) {
    validate();
}

void DescriptorSystem::validate() const {
    auto fail = [](const std::string& what, Index r, Index c, Index er, Index ec) {
        std::ostringstream msg;
        msg << what << " is " << r << "x" << c << ", expected " << er << "x" << ec;
        throw DimensionError(msg.str());
    };
    const Index m_ = m(), n_ = n();
    if (A.rows() != m_ || A.cols() != n_) fail("A", A.rows(), A.cols(), m_, n_);
    if (B.rows() != m_) fail("B", B.rows(), B.cols(), m_, B.cols());
    if (C.cols() != n_) fail("C", C.rows(), C.cols(), C.rows(), n_);
    if (D.rows() != C.rows() || D.cols() != B.cols()) fail("D", D.rows(), D.cols(), C.rows(), B.cols());
    if (K.cols() != n_) fail("K", K.rows(), K.cols(), K.rows(), n_);
}

Mat DescriptorSystem::stacked_input() const {
    const Index m_ = m(), k_ = k(), p_ = p();
    Mat out = Mat::Zero(m_ + p_, k_ + p_);
    out.topLeftCorner(m_, k_) = B;
    out.bottomLeftCorner(p_, k_) = D;
    out.bottomRightCorner(p_, p_) = -Mat::Identity(p_, p_);
    return out;
}

DescriptorSystem DescriptorSystem::transformed(const Mat& P0, const Mat& Q0) const {
    DescriptorSystem out(P0 * E * Q0, P0 * A * Q0, P0 * B, C * Q0, D, K * Q0);
    out.description = description;
    return out;
}

}  // namespace descobs
