#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "nmpec/operators.hpp"

using namespace nmpec;
using testing::max_abs;

TEST_SUITE("operators") {

TEST_CASE("single-qubit Pauli basis is I, X, Y, Z") {
    const PauliBasis b = pauli_basis(1);
    REQUIRE(b.size() == 4);
    Matrix x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    CHECK(max_abs(b.elements[0] - Matrix::Identity(2, 2)) == 0.0);
    CHECK(max_abs(b.elements[1] - x) == 0.0);
    CHECK(max_abs(b.elements[2] - y) == 0.0);
    CHECK(max_abs(b.elements[3] - z) == 0.0);
    CHECK(b.labels == std::vector<std::string>{"I", "X", "Y", "Z"});
}

TEST_CASE("two-qubit basis order and orthogonality") {
    const PauliBasis b = pauli_basis(2);
    REQUIRE(b.size() == 16);
    CHECK(max_abs(b.elements.front() - Matrix::Identity(4, 4)) == 0.0);
    Matrix zz = Matrix::Zero(4, 4);
    zz.diagonal() << 1, -1, -1, 1;
    CHECK(max_abs(b.elements.back() - zz) == 0.0);
    CHECK(b.index_of("ZI") == 12);
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t c = 0; c < 16; ++c) {
            const cplx ip = (b.elements[a] * b.elements[c].adjoint()).trace();
            CHECK(std::abs(ip - (a == c ? 4.0 : 0.0)) < 1e-14);
        }
    CHECK_THROWS_AS(pauli_basis(0), std::invalid_argument);
    CHECK_THROWS_AS(pauli_basis(4), std::invalid_argument);
}

TEST_CASE("pauli_string follows the leftmost-most-significant convention") {
    const Matrix xz = ops::pauli_string("XZ");
    // X on the first (most significant) qubit, Z on the second:
    // (X kron Z)|e_1> = |e_3> with sign -1 since the low qubit is |1>.
    CHECK(xz(3, 1) == cplx(-1, 0));
    CHECK(xz(2, 0) == cplx(1, 0));
    CHECK_THROWS_AS(ops::pauli_string("XQ"), std::invalid_argument);
}

TEST_CASE("PTM examples") {
    const PTM id = ptm_of([](const Matrix& r) { return r; }, 1);
    CHECK(max_abs(id.matrix - Matrix::Identity(4, 4)) < 1e-15);

    const PTM cx = ptm_of(conjugation(ops::sigma_x()), 1);
    Matrix expect = Matrix::Zero(4, 4);
    expect.diagonal() << 1, 1, -1, -1;
    CHECK(max_abs(cx.matrix - expect) < 1e-15);

    Matrix pi = Matrix::Zero(2, 2);
    pi(0, 0) = 1;
    const PTM pp = ptm_of([&](const Matrix& r) { return Matrix(pi * r * pi); }, 1);
    // tr(V_a pi V_b pi)/2 only survives for a, b in {I, Z}.
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const bool on = (a == 0 || a == 3) && (b == 0 || b == 3);
            CHECK(std::abs(pp.matrix(a, b) - (on ? 0.5 : 0.0)) < 1e-15);
        }
}

TEST_CASE("PTM round trip and trace-preservation detector") {
    std::mt19937_64 rng(11);
    for (int n : {1, 2}) {
        const PauliBasis b = pauli_basis(n);
        const int d = 1 << n;
        const Matrix k1 = testing::random_matrix(d, rng), k2 = testing::random_matrix(d, rng);
        const Superop s = [&](const Matrix& r) { return Matrix(k1 * r * k1.adjoint() + k2 * r * k2.adjoint()); };
        const PTM p = ptm_of(s, b);
        CHECK(p.hermiticity_preserving());
        for (const auto& v : b.elements) CHECK(max_abs(p.apply(b, v) - s(v)) < 1e-10);

        const PTM u = ptm_of(conjugation(testing::random_unitary(d, rng)), b);
        CHECK(u.trace_preserving());
        CHECK(std::abs(u.matrix(0, 0) - 1.0) < 1e-12);
        CHECK(max_abs(u.matrix.row(0).tail(u.matrix.cols() - 1)) < 1e-12);
        CHECK_FALSE(p.trace_preserving());
    }
}

TEST_CASE("single-qubit basis table") {
    const auto ops1 = basis_operations(1);
    REQUIRE(ops1.size() == 16);
    CHECK(ops1[0].label == "[I]");
    CHECK(max_abs(ops1[0].op - Matrix::Identity(2, 2)) == 0.0);
    CHECK(ops1[12].label == "[pi_z]");
    Matrix pi = Matrix::Zero(2, 2);
    pi(0, 0) = 1;
    CHECK(max_abs(ops1[12].op - pi) < 1e-15);
    for (int l = 0; l < 10; ++l) {
        CHECK_FALSE(ops1[l].projective());
        CHECK(is_unitary(ops1[l].op));
    }
    for (int l = 10; l < 16; ++l) {
        CHECK(ops1[l].projective());
        CHECK(max_abs(ops1[l].left * pi * ops1[l].right - ops1[l].op) < 1e-14);
        // rank-one Kraus operator of a (non trace-preserving) projective map
        CHECK(std::abs(ops1[l].op.determinant()) < 1e-14);
    }
    const RealMatrix stacked = stacked_basis_ptms(ops1, pauli_basis(1));
    Eigen::JacobiSVD<RealMatrix> svd(stacked);
    const auto sv = svd.singularValues();
    CHECK(sv(sv.size() - 1) > 1e-3);
    CHECK(basis_operations(2).size() == 256);
    CHECK_THROWS_AS(basis_operations(3), std::invalid_argument);
}

TEST_CASE("basis completeness: any one-qubit superoperator expands uniquely") {
    std::mt19937_64 rng(5);
    const auto ops1 = basis_operations(1);
    const PauliBasis b = pauli_basis(1);
    const RealMatrix stacked = stacked_basis_ptms(ops1, b);
    const Matrix k = testing::random_matrix(2, rng);
    const Matrix h = testing::random_matrix(2, rng);
    const Superop s = [&](const Matrix& r) { return Matrix(k * r * k.adjoint() - 0.3 * (h * r + r * h.adjoint())
                                                            + 0.3 * (h.adjoint() * r + r * h)); };
    const PTM p = ptm_of(s, b);
    REQUIRE(p.hermiticity_preserving());
    const RealMatrix pr = p.real();
    Eigen::Map<const Eigen::VectorXd> target(pr.data(), 16);
    const Eigen::VectorXd c = stacked.fullPivLu().solve(Eigen::VectorXd(target));
    CHECK((stacked * c - target).norm() < 1e-10);
}

TEST_CASE("apply_basis_op") {
    const auto ops1 = basis_operations(1);
    const Vector zero = testing::ket({1, 0}), one = testing::ket({0, 1});
    const Vector psi = testing::tilted_state();

    auto r = apply_basis_op(ops1[0], psi);
    CHECK(r.weight == 1.0);
    CHECK((r.state - psi).norm() == 0.0);

    r = apply_basis_op(ops1[12], zero);
    CHECK(r.weight == doctest::Approx(1.0));
    CHECK((r.state - zero).norm() < 1e-15);

    r = apply_basis_op(ops1[12], one);
    CHECK(r.dead);
    CHECK(r.weight == 0.0);

    // Projective weight is the squared norm of the projected state.
    for (int l = 10; l < 16; ++l) {
        const Vector raw = ops1[l].op * psi;
        r = apply_basis_op(ops1[l], psi);
        CHECK(r.weight == doctest::Approx(raw.squaredNorm()).epsilon(1e-12));
        CHECK((r.state * std::sqrt(r.weight) - raw).norm() < 1e-12);
    }
    CHECK_THROWS_AS(apply_basis_op(ops1[0], Vector(2 * psi)), std::invalid_argument);
}

}  // TEST_SUITE
