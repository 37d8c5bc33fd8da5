// Scratch driver for solver debugging (not registered with ctest).
#include <cstdio>

#include "oracle.hpp"
#include "qknit/sdp.hpp"
#include "test_util.hpp"

using namespace qknit;
using testutil::Rng;

int main(int argc, char** argv) {
    int which = argc > 1 ? std::atoi(argv[1]) : 0;

    if (which == 0) {
        // unbounded case
        SdpProblem p;
        p.add_scalar("t", true);
        p.objective_scalar("t", -1.0);
        SolveOptions opt;
        opt.tol = 1e-8;
        opt.verbose = true;
        SdpSolution sol = solve(p, opt);
        std::printf("status=%s obj=%g\n", SdpSolution::status_name(sol.status),
                    sol.primal_objective);
    } else {
        Rng rng(4242);
        for (int inst = 0; inst <= which - 1; ++inst) {
            int m = 2 + static_cast<int>(rng.uniform() * 2);
            int d = 3 + static_cast<int>(rng.uniform() * 6);
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
            if (inst < which - 1) continue;

            SdpProblem p;
            std::vector<SdpProblem::Term> terms;
            for (int k = 0; k < m; ++k) {
                std::string name = "y" + std::to_string(k);
                p.add_scalar(name, false);
                p.objective_scalar(name, li.c[k]);
                terms.push_back(SdpProblem::scalar_mat(name, li.a[k]));
                p.add_nonneg({SdpProblem::scalar_row(name)}, {-3.0});
                p.add_nonneg({SdpProblem::scalar_row(name, -1.0)}, {-3.0});
            }
            p.add_psd(terms, li.b);
            SolveOptions opt;
            opt.tol = 1e-8;
            opt.verbose = true;
            SdpSolution sol = solve(p, opt);
            std::printf("inst=%d m=%d d=%d cplx=%d status=%s obj=%.9f oracle=%.9f\n", inst, m, d,
                        cplx ? 1 : 0, SdpSolution::status_name(sol.status), sol.primal_objective,
                        testutil::grid_minimize(li));
        }
    }
    return 0;
}
