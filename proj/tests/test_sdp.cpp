#include <doctest.h>

#include "oracle.hpp"
#include "qknit/sdp.hpp"
#include "test_util.hpp"

using namespace qknit;
using testutil::Rng;

namespace {

SystemLayout plain(int d) { return SystemLayout({{"m", d, Side::A, Role::Input}}); }

ComplexMatrix scaled_identity(int d, double v) {
    ComplexMatrix m = ComplexMatrix::identity(d);
    m *= v;
    return m;
}

}  // namespace

TEST_CASE("scalar LMI: min t s.t. t >= a") {
    SdpProblem p;
    p.add_scalar("t", false);
    ComplexMatrix a(1, true);
    a(0, 0) = 1.7;
    p.add_psd({SdpProblem::scalar_mat("t", ComplexMatrix::identity(1))}, a);
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(1.7).epsilon(1e-7));
    CHECK(sol.scalar("t") == doctest::Approx(1.7).epsilon(1e-7));
}

TEST_CASE("min tr X s.t. X >= I2") {
    SdpProblem p;
    p.add_hermitian("X", plain(2), true);
    p.add_psd({SdpProblem::id("X")}, ComplexMatrix::identity(2));
    p.objective_matrix("X", ComplexMatrix::identity(2));
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(sol.dual_objective <= sol.primal_objective + 1e-9);
    CHECK(testutil::max_abs_diff(sol.matrix("X"), ComplexMatrix::identity(2)) < 1e-5);
}

TEST_CASE("complex data: min t s.t. tI >= H gives max eigenvalue") {
    Rng rng(31);
    ComplexMatrix h = testutil::random_hermitian(rng, 4);
    SdpProblem p;
    p.add_scalar("t", false);
    p.add_psd({SdpProblem::scalar_mat("t", ComplexMatrix::identity(4))}, h);
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.primal_objective ==
          doctest::Approx(hermitian_eigenvalues(h).back()).epsilon(1e-7));
}

TEST_CASE("equality rows: trace pinned") {
    SdpProblem p;
    p.add_hermitian("X", plain(3), true);
    ComplexMatrix one(1, true);
    one(0, 0) = 3.0;
    p.add_eq({SdpProblem::ptrace("X", {})}, one);
    p.objective_matrix("X", ComplexMatrix::identity(3));
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(sol.matrix("X").trace().real() == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("maximize mode") {
    // max tr(X) s.t. X <= I (i.e. I - X >= 0), X >= 0
    SdpProblem p;
    p.add_hermitian("X", plain(2), true);
    p.add_psd({SdpProblem::id("X", -1.0)}, scaled_identity(2, -1.0));
    p.objective_matrix("X", ComplexMatrix::identity(2));
    p.set_maximize(true);
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("infeasible detection") {
    SdpProblem p;
    p.add_scalar("t", true);
    // -I - t I >= 0 is impossible for t >= 0
    p.add_psd({SdpProblem::scalar_mat("t", scaled_identity(2, -1.0))}, ComplexMatrix::identity(2));
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, 1e-8);
    CHECK(sol.status == SdpSolution::Status::Infeasible);
}

TEST_CASE("unbounded detection") {
    SdpProblem p;
    p.add_scalar("t", true);
    p.objective_scalar("t", -1.0);
    SdpSolution sol = solve(p, 1e-8);
    CHECK(sol.status == SdpSolution::Status::Unbounded);
}

TEST_CASE("determinism: identical problems give identical objectives") {
    auto build_and_solve = []() {
        Rng rng(77);
        ComplexMatrix h = testutil::random_hermitian(rng, 5);
        SdpProblem p;
        p.add_scalar("t", false);
        p.add_psd({SdpProblem::scalar_mat("t", ComplexMatrix::identity(5))}, h);
        p.objective_scalar("t", 1.0);
        return solve(p, 1e-8).primal_objective;
    };
    double a = build_and_solve();
    double b = build_and_solve();
    CHECK(a == b);
}

TEST_CASE("embed_complex examples") {
    // I2 -> eigenvalues {1,1,1,1}
    ComplexEmbedding e = embed_complex(ComplexMatrix::identity(2));
    std::vector<double> w;
    std::vector<double> a = e.embedded;
    dsyev_inplace(a, 4, w, false);
    for (double v : w) CHECK(v == doctest::Approx(1.0));

    // Pauli Y -> {-1,-1,1,1}
    ComplexMatrix y(2, true);
    y(0, 1) = cxd(0, -1);
    y(1, 0) = cxd(0, 1);
    e = embed_complex(y);
    a = e.embedded;
    dsyev_inplace(a, 4, w, false);
    CHECK(w[0] == doctest::Approx(-1.0));
    CHECK(w[1] == doctest::Approx(-1.0));
    CHECK(w[2] == doctest::Approx(1.0));
    CHECK(w[3] == doctest::Approx(1.0));

    // round trip preserves Hermiticity within 1e-12
    Rng rng(32);
    ComplexMatrix h = testutil::random_hermitian(rng, 6);
    ComplexMatrix back = unembed_complex(embed_complex(h).embedded, 6);
    CHECK(testutil::max_abs_diff(back, h) < 1e-12);
    CHECK(back.hermiticity_defect() <= 1e-12);
}

TEST_CASE("embedding of Phi^{T_B} has doubled spectrum with min -1/2") {
    ComplexMatrix phi(4, true);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) phi(i * 2 + i, j * 2 + j) = 0.5;
    SystemLayout lay({{"A", 2, Side::A, Role::Input}, {"B", 2, Side::B, Role::Input}});
    ComplexMatrix pt = partial_transpose(phi, lay, {"B"});
    ComplexEmbedding e = embed_complex(pt);
    std::vector<double> w;
    std::vector<double> a = e.embedded;
    dsyev_inplace(a, 8, w, false);
    CHECK(w[0] == doctest::Approx(-0.5));
    CHECK(w[1] == doctest::Approx(-0.5));
    CHECK(w[2] == doctest::Approx(0.5));
}

TEST_CASE("solver corpus vs grid oracle") {
    Rng rng(4242);
    int solved = 0;
    for (int inst = 0; inst < 20; ++inst) {
        int m = 2 + static_cast<int>(rng.uniform() * 2);  // 2 or 3 variables
        int d = 3 + static_cast<int>(rng.uniform() * 6);  // block dim 3..8
        bool cplx = inst % 2 == 0;

        testutil::LmiInstance li;
        li.c.resize(m);
        for (int k = 0; k < m; ++k) li.c[k] = rng.sym();
        li.a.push_back(ComplexMatrix::identity(d));
        for (int k = 1; k < m; ++k) {
            ComplexMatrix a = testutil::random_hermitian(rng, d, cplx);
            a *= 1.0 / std::max(1.0, spectral_norm(a));
            li.a.push_back(a);
        }
        ComplexMatrix b = testutil::random_hermitian(rng, d, cplx);
        b *= 1.5 / std::max(1.0, spectral_norm(b));
        li.b = b;

        SdpProblem p;
        std::vector<SdpProblem::Term> terms;
        for (int k = 0; k < m; ++k) {
            std::string name = "y" + std::to_string(k);
            p.add_scalar(name, false);
            p.objective_scalar(name, li.c[k]);
            terms.push_back(SdpProblem::scalar_mat(name, li.a[k]));
            // box |y| <= 3
            p.add_nonneg({SdpProblem::scalar_row(name)}, {-3.0});
            p.add_nonneg({SdpProblem::scalar_row(name, -1.0)}, {-3.0});
        }
        p.add_psd(terms, li.b);

        SdpSolution sol = solve(p, 1e-7);
        REQUIRE(sol.status == SdpSolution::Status::Optimal);
        double oracle = testutil::grid_minimize(li);
        CHECK(std::abs(sol.primal_objective - oracle) <= 1e-4 * std::max(1.0, std::abs(oracle)));
        ++solved;
    }
    CHECK(solved == 20);
}

TEST_CASE("duality bracket holds on a random feasible problem") {
    Rng rng(99);
    ComplexMatrix h = testutil::random_hermitian(rng, 6);
    SdpProblem p;
    p.add_scalar("t", false);
    p.add_psd({SdpProblem::scalar_mat("t", ComplexMatrix::identity(6))}, h);
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, 1e-8);
    REQUIRE(sol.status == SdpSolution::Status::Optimal);
    CHECK(sol.dual_objective <= sol.primal_objective + 1e-10);
    CHECK(sol.primal_objective - sol.dual_objective <=
          1e-8 * (1.0 + std::abs(sol.primal_objective)) * 10);
}

TEST_CASE("problem dump is valid JSON-ish and mentions variables") {
    SdpProblem p;
    p.add_hermitian("X", plain(2), true);
    p.objective_matrix("X", ComplexMatrix::identity(2));
    p.add_psd({SdpProblem::id("X")}, ComplexMatrix::identity(2));
    std::string dump = p.dump_json();
    CHECK(dump.find("\"X\"") != std::string::npos);
    CHECK(dump.find("psd") != std::string::npos);
}
