#include <doctest.h>

#include "qknit/tensor.hpp"
#include "test_util.hpp"

using namespace qknit;
using testutil::Rng;

namespace {

ComplexMatrix pauli_x() {
    ComplexMatrix m(2, true);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

ComplexMatrix pauli_z() {
    ComplexMatrix m(2, true);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

// Maximally entangled state Phi(d) = (1/d) sum |ii><jj|.
ComplexMatrix max_entangled(int d) {
    ComplexMatrix m(d * d, true);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i * d + i, j * d + j) = 1.0 / d;
    return m;
}

SystemLayout two_qubits() {
    return SystemLayout({{"A", 2, Side::A, Role::Input}, {"B", 2, Side::B, Role::Input}});
}

}  // namespace

TEST_CASE("kron basics") {
    ComplexMatrix i2 = ComplexMatrix::identity(2);
    ComplexMatrix i4 = ComplexMatrix::identity(4);
    CHECK(testutil::max_abs_diff(kron(i2, i2), i4) == 0.0);

    // |0><0| ox X = block-diag(X, 0)
    ComplexMatrix p0 = ComplexMatrix::unit(2, 0, 0);
    ComplexMatrix k = kron(p0, pauli_x());
    CHECK(k(0, 1) == cxd(1.0));
    CHECK(k(1, 0) == cxd(1.0));
    CHECK(k.max_abs() == 1.0);
    CHECK(k(2, 3) == cxd(0.0));

    // (X ox X)|00> = |11>
    ComplexMatrix xx = kron(pauli_x(), pauli_x());
    CHECK(xx(3, 0) == cxd(1.0));
    CHECK(xx(0, 0) == cxd(0.0));
}

TEST_CASE("partial trace basics") {
    Rng rng(11);
    SystemLayout lay = two_qubits();

    ComplexMatrix rho = testutil::random_hermitian(rng, 2);
    ComplexMatrix sig = testutil::random_hermitian(rng, 2);
    ComplexMatrix joint = kron(rho, sig);
    ComplexMatrix red = partial_trace(joint, lay, {"A"});
    ComplexMatrix expect = rho;
    expect *= sig.trace();
    CHECK(testutil::max_abs_diff(red, expect) < 1e-12);

    // tr_B Phi(2) = I/2
    ComplexMatrix phi = max_entangled(2);
    ComplexMatrix marg = partial_trace(phi, lay, {"A"});
    ComplexMatrix half = ComplexMatrix::identity(2);
    half *= 0.5;
    CHECK(testutil::max_abs_diff(marg, half) < 1e-14);

    CHECK_THROWS_AS(partial_trace(phi, lay, {"nope"}), LayoutError);
}

TEST_CASE("partial transpose basics") {
    Rng rng(12);
    SystemLayout lay = two_qubits();

    ComplexMatrix rho = testutil::random_hermitian(rng, 2);
    ComplexMatrix sig = testutil::random_hermitian(rng, 2);
    ComplexMatrix pt = partial_transpose(kron(rho, sig), lay, {"B"});
    CHECK(testutil::max_abs_diff(pt, kron(rho, sig.transpose())) < 1e-14);

    // Phi(2)^{T_B} = SWAP/2 with eigenvalues {-1/2, 1/2, 1/2, 1/2}
    ComplexMatrix phi_pt = partial_transpose(max_entangled(2), lay, {"B"});
    std::vector<double> ev = hermitian_eigenvalues(phi_pt);
    CHECK(ev[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ev[3] == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(partial_transpose(phi_pt, lay, {"??"}), LayoutError);
}

TEST_CASE("eigenvalues and spectral norm basics") {
    ComplexMatrix i4 = ComplexMatrix::identity(4);
    for (double v : hermitian_eigenvalues(i4)) CHECK(v == doctest::Approx(1.0));
    std::vector<double> zev = hermitian_eigenvalues(pauli_z());
    CHECK(zev[0] == doctest::Approx(-1.0));
    CHECK(zev[1] == doctest::Approx(1.0));

    CHECK(spectral_norm(ComplexMatrix::identity(5)) == doctest::Approx(1.0));
    ComplexMatrix z3 = pauli_z();
    z3 *= 3.0;
    CHECK(spectral_norm(z3) == doctest::Approx(3.0));

    ComplexMatrix notherm(2);
    notherm(0, 1) = 1.0;
    CHECK_THROWS_AS(hermitian_eigenvalues(notherm), ContractError);
}

TEST_CASE("eigensystem reconstructs the matrix, complex entries") {
    Rng rng(13);
    for (int trial = 0; trial < 8; ++trial) {
        int d = 2 + static_cast<int>(rng.uniform() * 7);
        ComplexMatrix m = testutil::random_hermitian(rng, d);
        EigenSystem sys = hermitian_eigensystem(m);
        // rebuild
        ComplexMatrix rebuilt(d);
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    rebuilt(i, j) += sys.values[a] * sys.vectors(i, a) * std::conj(sys.vectors(j, a));
        CHECK(testutil::max_abs_diff(rebuilt, m) < 1e-9);
        // orthonormal columns
        ComplexMatrix gram = matmul(sys.vectors.dagger(), sys.vectors);
        CHECK(testutil::max_abs_diff(gram, ComplexMatrix::identity(d)) < 1e-10);
    }
}

TEST_CASE("eigensystem handles degenerate spectra") {
    Rng rng(14);
    // Projector with a 3-fold degenerate eigenvalue.
    ComplexMatrix u = testutil::random_unitary(rng, 5);
    ComplexMatrix m(5);
    for (int a = 0; a < 5; ++a) {
        double val = a < 3 ? 2.0 : -1.0;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) m(i, j) += val * u(i, a) * std::conj(u(j, a));
    }
    m.make_hermitian();
    EigenSystem sys = hermitian_eigensystem(m);
    CHECK(sys.values[0] == doctest::Approx(-1.0));
    CHECK(sys.values[4] == doctest::Approx(2.0));
    ComplexMatrix gram = matmul(sys.vectors.dagger(), sys.vectors);
    CHECK(testutil::max_abs_diff(gram, ComplexMatrix::identity(5)) < 1e-10);
}

TEST_CASE("property: partial transpose is an involution") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        SystemLayout lay({{"a", 2, Side::A, Role::Input},
                          {"b", 2, Side::B, Role::Input},
                          {"c", 4, Side::B, Role::Output}});
        ComplexMatrix m = testutil::random_hermitian(rng, lay.total_dim());
        ComplexMatrix twice = partial_transpose(partial_transpose(m, lay, {"b", "c"}), lay, {"b", "c"});
        CHECK(testutil::max_abs_diff(twice, m) <= 1e-15 * std::max(1.0, m.max_abs()));
    }
}

TEST_CASE("property: partial trace preserves trace") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        SystemLayout lay({{"a", 2, Side::A, Role::Input},
                          {"b", 2, Side::B, Role::Input},
                          {"c", 2, Side::A, Role::Output},
                          {"d", 2, Side::B, Role::Output}});
        ComplexMatrix m = testutil::random_hermitian(rng, 16);
        ComplexMatrix red = partial_trace(m, lay, {"a", "d"});
        CHECK(std::abs((red.trace() - m.trace())) < 1e-12 * 16);
    }
}

TEST_CASE("property: partial trace of a product factorizes") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        SystemLayout lay({{"a", 3, Side::A, Role::Input}, {"b", 4, Side::B, Role::Input}});
        ComplexMatrix a = testutil::random_hermitian(rng, 3);
        ComplexMatrix b = testutil::random_hermitian(rng, 4);
        ComplexMatrix red = partial_trace(kron(a, b), lay, {"a"});
        ComplexMatrix expect = a;
        expect *= b.trace();
        CHECK(testutil::max_abs_diff(red, expect) < 1e-11);
    }
}

TEST_CASE("property: spectral norm subadditive") {
    Rng rng(24);
    for (int trial = 0; trial < 20; ++trial) {
        int d = 2 + static_cast<int>(rng.uniform() * 7);
        ComplexMatrix a = testutil::random_hermitian(rng, d);
        ComplexMatrix b = testutil::random_hermitian(rng, d);
        CHECK(spectral_norm(a + b) <= spectral_norm(a) + spectral_norm(b) + 1e-9);
    }
}

TEST_CASE("property: trace invariant under partial transpose") {
    Rng rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        SystemLayout lay({{"a", 2, Side::A, Role::Input}, {"b", 4, Side::B, Role::Input}});
        ComplexMatrix m = testutil::random_hermitian(rng, 8);
        ComplexMatrix pt = partial_transpose(m, lay, {"b"});
        std::vector<double> e1 = hermitian_eigenvalues(m);
        std::vector<double> e2 = hermitian_eigenvalues(pt);
        double s1 = 0, s2 = 0;
        for (double v : e1) s1 += v;
        for (double v : e2) s2 += v;
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-10));
    }
}

TEST_CASE("permute_factors round trip") {
    Rng rng(26);
    SystemLayout lay({{"p", 2, Side::A, Role::Input},
                      {"q", 3, Side::B, Role::Input},
                      {"r", 2, Side::A, Role::Output}});
    ComplexMatrix m = testutil::random_hermitian(rng, 12);
    std::vector<size_t> order = {2, 0, 1};
    ComplexMatrix perm = permute_factors(m, lay, order);
    // inverse permutation
    std::vector<size_t> inv(3);
    for (size_t i = 0; i < 3; ++i) inv[order[i]] = i;
    ComplexMatrix back = permute_factors(perm, lay.permuted(order), inv);
    CHECK(testutil::max_abs_diff(back, m) == 0.0);
    CHECK(std::abs(perm.trace() - m.trace()) < 1e-13);
}

TEST_CASE("layout validation") {
    CHECK_THROWS_AS(SystemLayout({{"x", 2, Side::A, Role::Input}, {"x", 2, Side::B, Role::Input}}),
                    LayoutError);
    CHECK_THROWS_AS(SystemLayout({{"x", 0, Side::A, Role::Input}}), LayoutError);
    SystemLayout lay({{"x", 2, Side::A, Role::Input}});
    ComplexMatrix m(3);
    CHECK_THROWS_AS(lay.check_matches(m), LayoutError);
}
