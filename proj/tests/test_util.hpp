#pragma once

// Shared helpers for the test suites: a small deterministic RNG and random
// matrix generators.

#include <cmath>
#include <cstdint>
#include <vector>

#include "qknit/tensor.hpp"

namespace testutil {

struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }
    double sym() { return 2.0 * uniform() - 1.0; }
    // Box-Muller
    double gauss() {
        double u1 = std::max(uniform(), 1e-300), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

inline qknit::ComplexMatrix random_hermitian(Rng& rng, int d, bool complex_entries = true) {
    qknit::ComplexMatrix m(d);
    for (int i = 0; i < d; ++i) {
        m(i, i) = rng.gauss();
        for (int j = i + 1; j < d; ++j) {
            double re = rng.gauss(), im = complex_entries ? rng.gauss() : 0.0;
            m(i, j) = qknit::cxd(re, im);
            m(j, i) = qknit::cxd(re, -im);
        }
    }
    m.set_hermitian_flag(true);
    return m;
}

inline qknit::ComplexMatrix random_unitary(Rng& rng, int d) {
    // Gram-Schmidt on a random complex matrix.
    qknit::ComplexMatrix a(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = qknit::cxd(rng.gauss(), rng.gauss());
    for (int c = 0; c < d; ++c) {
        for (int prev = 0; prev < c; ++prev) {
            qknit::cxd ov = 0.0;
            for (int r = 0; r < d; ++r) ov += std::conj(a(r, prev)) * a(r, c);
            for (int r = 0; r < d; ++r) a(r, c) -= ov * a(r, prev);
        }
        double n = 0.0;
        for (int r = 0; r < d; ++r) n += std::norm(a(r, c));
        n = std::sqrt(n);
        for (int r = 0; r < d; ++r) a(r, c) /= n;
    }
    return a;
}

inline qknit::ComplexMatrix random_density(Rng& rng, int d) {
    qknit::ComplexMatrix g(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = qknit::cxd(rng.gauss(), rng.gauss());
    qknit::ComplexMatrix rho = qknit::matmul(g, g.dagger());
    rho *= 1.0 / rho.trace().real();
    rho.set_hermitian_flag(true);
    return rho;
}

inline double max_abs_diff(const qknit::ComplexMatrix& a, const qknit::ComplexMatrix& b) {
    qknit::ComplexMatrix d = a;
    d -= b;
    return d.max_abs();
}

}  // namespace testutil
