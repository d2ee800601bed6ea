#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "descobs/linalg.hpp"
#include "support.hpp"

using namespace descobs;
using testsupport::Rng;

namespace {

const Tolerances tol;

Mat rows(std::initializer_list<std::initializer_list<double>> init) {
    const Index r = static_cast<Index>(init.size());
    const Index c = r ? static_cast<Index>(init.begin()->size()) : 0;
    Mat M(r, c);
    Index i = 0;
    for (const auto& row : init) {
        Index j = 0;
        for (double v : row) M(i, j++) = v;
        ++i;
    }
    return M;
}

bool orthonormal(const RealSubspace& s) {
    const Mat G = s.basis().transpose() * s.basis();
    return (G - Mat::Identity(s.dim(), s.dim())).norm() < 1e-10;
}

}  // namespace

TEST_CASE("numerical rank of simple matrices") {
    CHECK(numerical_rank<double>(Mat::Zero(3, 4), tol) == 0);
    CHECK(numerical_rank<double>(Mat::Identity(5, 5), tol) == 5);
    CHECK(numerical_rank<double>(rows({{1, 1}, {1, 1}}), tol) == 1);
    CHECK(numerical_rank<double>(Mat(0, 3), tol) == 0);
    CHECK(numerical_rank<double>(rows({{1, 0}, {0, 1e-14}}), tol) == 1);
}

TEST_CASE("kernel bases") {
    CHECK(kernel_basis<double>(Mat::Identity(3, 3), tol).dim() == 0);
    CHECK(kernel_basis<double>(Mat::Identity(3, 3), tol).ambient() == 3);
    CHECK(kernel_basis<double>(Mat::Zero(2, 2), tol).dim() == 2);

    const auto k = kernel_basis<double>(rows({{0, 1}, {0, 0}, {0, 0}}), tol);
    REQUIRE(k.dim() == 1);
    CHECK(std::abs(std::abs(k.basis()(0, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(k.basis()(1, 0)) < 1e-12);
}

TEST_CASE("preimage and image examples") {
    Rng rng(11);
    const RealSubspace S = RealSubspace::span(testsupport::gauss_matrix(rng, 4, 2), tol);
    const auto pre = preimage<double>(Mat::Identity(4, 4), S, tol);
    CHECK(pre.dim() == 2);
    CHECK(contained_in(pre, S, tol));
    CHECK(contained_in(S, pre, tol));

    CHECK(preimage<double>(testsupport::gauss_matrix(rng, 3, 5), RealSubspace::full(3), tol).dim() == 5);

    const Mat M = rows({{0, 1}, {0, 0}, {0, 0}});
    const auto e1 = RealSubspace::span(rows({{1}, {0}, {0}}), tol);
    CHECK(preimage<double>(M, e1, tol).dim() == 2);

    CHECK(image<double>(Mat::Identity(4, 4), S).dim() == 2);
    CHECK(image<double>(testsupport::gauss_matrix(rng, 3, 4), RealSubspace::zero(4)).dim() == 0);
    const auto im = image<double>(rows({{1, 0}, {1, 0}}), RealSubspace::full(2));
    REQUIRE(im.dim() == 1);
    CHECK(std::abs(std::abs(im.basis()(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(im.basis()(0, 0) - im.basis()(1, 0)) < 1e-12);
}

TEST_CASE("preimage rejects mismatched ambient space") {
    CHECK_THROWS_AS(preimage<double>(Mat::Identity(3, 3), RealSubspace::full(2), tol), DimensionError);
    CHECK_THROWS_AS(image<double>(Mat::Identity(3, 3), RealSubspace::full(2)), DimensionError);
}

TEST_CASE("kernel inclusion") {
    Rng rng(3);
    CHECK(kernel_included<double>(Mat::Identity(3, 3), testsupport::gauss_matrix(rng, 2, 3), tol));
    CHECK_FALSE(kernel_included<double>(Mat::Zero(2, 2), Mat::Identity(2, 2), tol));
    CHECK(kernel_included<double>(rows({{0, 1}, {0, 0}, {0, 0}}), rows({{0, 1}}), tol));
    CHECK_THROWS_AS(kernel_included<double>(Mat::Identity(2, 2), Mat::Identity(3, 3), tol), DimensionError);
}

TEST_CASE("ordered spectral split examples") {
    const auto s1 = ordered_spectral_split(rows({{1, 0}, {0, -1}}), tol);
    CHECK(s1.n1 == 1);
    CHECK(s1.n2 == 1);
    CHECK(std::abs(s1.M1(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(s1.M2(0, 0) + 1.0) < 1e-12);

    const Mat stable = rows({{-1, 3}, {0, -2}});
    const auto s2 = ordered_spectral_split(stable, tol);
    CHECK(s2.n1 == 0);
    CHECK(s2.n2 == 2);
    CHECK((s2.U * s2.M2 * s2.U.inverse() - stable).norm() < 1e-12);

    const auto s3 = ordered_spectral_split(rows({{1, 1}, {0, 1}}), tol);
    CHECK(s3.n1 == 2);
    CHECK(s3.n2 == 0);

    // Eigenvalue on the imaginary axis goes to the closed right half-plane.
    const auto s4 = ordered_spectral_split(rows({{0, 1}, {-1, 0}}), tol);
    CHECK(s4.n1 == 2);

    const auto empty = ordered_spectral_split(Mat(0, 0), tol);
    CHECK(empty.n1 + empty.n2 == 0);
    CHECK_THROWS_AS(ordered_spectral_split(Mat::Zero(2, 3), tol), DimensionError);
}

TEST_CASE("split keeps perturbed Jordan blocks together") {
    // A 3x3 Jordan block at 0 with a rounding-level perturbation: its eigenvalues
    // fan out around the axis at radius ~(1e-17)^(1/3).
    Mat J = rows({{0, 1, 0}, {0, 0, 1}, {1e-17, 0, 0}});
    const auto s = ordered_spectral_split(J, tol);
    CHECK(s.n1 == 3);
}

TEST_CASE("property: rank identities for stacked and block-triangular matrices") {
    Rng rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        const Index r = rng.integer(1, 6), c = rng.integer(1, 6);
        const Mat M = testsupport::int_matrix(rng, r, c);
        const Index rk = numerical_rank<double>(M, tol);
        Mat MM(2 * r, c);
        MM << M, M;
        CHECK(numerical_rank<double>(MM, tol) == rk);
        Mat M0(2 * r, c);
        M0 << M, Mat::Zero(r, c);
        CHECK(numerical_rank<double>(M0, tol) == rk);

        // [[X, S], [0, Y]] with X of full row rank.
        const Index xr = rng.integer(1, 3), xc = xr + rng.integer(0, 2);
        Mat X = testsupport::gauss_matrix(rng, xr, xc);
        const Index yr = rng.integer(1, 3), yc = rng.integer(1, 3);
        Mat Y = testsupport::int_matrix(rng, yr, yc);
        Mat S = testsupport::int_matrix(rng, xr, yc);
        Mat T = Mat::Zero(xr + yr, xc + yc);
        T.topLeftCorner(xr, xc) = X;
        T.topRightCorner(xr, yc) = S;
        T.bottomRightCorner(yr, yc) = Y;
        CHECK(numerical_rank<double>(T, tol) == numerical_rank<double>(X, tol) + numerical_rank<double>(Y, tol));
    }
}

TEST_CASE("property: ordered spectral split reconstructs the matrix") {
    Rng rng(202);
    for (int trial = 0; trial < 300; ++trial) {
        const Index n = rng.integer(1, 8);
        const Mat M = trial % 2 ? testsupport::gauss_matrix(rng, n, n) : testsupport::int_matrix(rng, n, n);
        const auto s = ordered_spectral_split(M, tol);
        REQUIRE(s.n1 + s.n2 == n);
        const Mat back = s.U * blkdiag({s.M1, s.M2}) * s.U.inverse();
        CHECK((back - M).norm() <= 1e-8 * std::max(1.0, M.norm()));
        for (Complex e : eigenvalues(s.M2)) CHECK(e.real() < 0.0);
        // Members of M1 may sit slightly left of the axis only as part of a cluster
        // whose center is in the closed right half-plane.
        for (const auto& c : spectrum_clusters(s.M1, tol)) CHECK(c.center.real() >= -tol.stab_margin - 1e-6);
    }
}

TEST_CASE("property: image of the preimage lies in the subspace") {
    Rng rng(303);
    for (int trial = 0; trial < 200; ++trial) {
        const Index r = rng.integer(1, 6), c = rng.integer(1, 6);
        const Mat M = testsupport::int_matrix(rng, r, c);
        const Index d = rng.integer(0, static_cast<int>(r));
        const RealSubspace S = RealSubspace::span(testsupport::int_matrix(rng, r, d), tol);
        const auto pre = preimage<double>(M, S, tol);
        CHECK(orthonormal(pre));
        CHECK(contained_in(image<double>(M, pre), S, tol));
    }
}

TEST_CASE("property: sum and intersection dimensions") {
    Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = rng.integer(1, 6);
        const auto a = RealSubspace::span(testsupport::int_matrix(rng, n, rng.integer(0, 4)), tol);
        const auto b = RealSubspace::span(testsupport::int_matrix(rng, n, rng.integer(0, 4)), tol);
        const auto sum = subspace_sum(a, b, tol);
        const auto cap = intersection(a, b, tol);
        CHECK(sum.dim() + cap.dim() == a.dim() + b.dim());
        CHECK(contained_in(cap, a, tol));
        CHECK(contained_in(cap, b, tol));
        CHECK(orthogonal_complement(a, tol).dim() == n - a.dim());
        CHECK(complement_within(sum, a, tol).dim() == sum.dim() - a.dim());
    }
}

TEST_CASE("complex subspaces") {
    CMat M(2, 2);
    M << Complex(0, 1), 1, -1, Complex(0, 1);  // rank 1: row2 = i * row1
    CHECK(numerical_rank<Complex>(M, tol) == 1);
    const auto k = kernel_basis<Complex>(M, tol);
    REQUIRE(k.dim() == 1);
    CHECK((M * k.basis()).norm() < 1e-12);
}

TEST_CASE("eigenvalue clustering") {
    const auto c = cluster_eigenvalues({Complex(1, 0), Complex(1 + 1e-9, 0), Complex(-1, 0)}, 1e-6);
    REQUIRE(c.size() == 2);
    Index total = 0;
    for (const auto& cl : c) total += cl.multiplicity;
    CHECK(total == 3);
    CHECK(in_closed_rhp(Complex(0, 0), tol));
    CHECK(in_closed_rhp(Complex(-1e-12, 0), tol));
    CHECK_FALSE(in_closed_rhp(Complex(-1e-3, 0), tol));
}

TEST_CASE("tolerances must be positive") {
    Tolerances t;
    CHECK_NOTHROW(t.validate());
    t.rank_rtol = 0.0;
    CHECK_THROWS(t.validate());
    t = Tolerances{};
    t.stab_margin = -1.0;
    CHECK_THROWS(t.validate());
}

TEST_CASE("condition number and blkdiag") {
    CHECK(condition_number(Mat(0, 0)) == 1.0);
    CHECK(std::isinf(condition_number(Mat::Zero(2, 2))));
    CHECK(std::abs(condition_number(rows({{2, 0}, {0, 1}})) - 2.0) < 1e-12);
    const Mat B = blkdiag({Mat::Identity(1, 1), Mat(0, 0), 2 * Mat::Identity(2, 2)});
    CHECK(B.rows() == 3);
    CHECK(B(2, 2) == 2.0);
    CHECK(B(0, 1) == 0.0);
}
