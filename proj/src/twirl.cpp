#include "qknit/twirl.hpp"

#include <algorithm>
#include <cmath>

namespace qknit {

const ComplexMatrix& pauli(int which) {
    static const auto make = [](int w) {
        ComplexMatrix m(2, true);
        switch (w) {
            case 0: m(0, 0) = m(1, 1) = 1.0; break;
            case 1: m(0, 1) = m(1, 0) = 1.0; break;
            case 2:
                m(0, 1) = cxd(0, -1);
                m(1, 0) = cxd(0, 1);
                break;
            case 3:
                m(0, 0) = 1.0;
                m(1, 1) = -1.0;
                break;
        }
        return m;
    };
    static const ComplexMatrix table[4] = {make(0), make(1), make(2), make(3)};
    return table[which & 3];
}

std::vector<ComplexMatrix> pauli_strings(int k) {
    std::vector<ComplexMatrix> out;
    const int count = 1 << (2 * k);
    out.reserve(count);
    for (int idx = 0; idx < count; ++idx) {
        ComplexMatrix m = pauli((idx >> (2 * (k - 1))) & 3);
        for (int q = k - 2; q >= 0; --q) m = kron(m, pauli((idx >> (2 * q)) & 3));
        out.push_back(std::move(m));
    }
    return out;
}

std::optional<std::vector<ComplexMatrix>> clifford_images(const ComplexMatrix& u, int k) {
    const int d = 1 << k;
    if (u.dim() != d) throw DimensionError("clifford_images: unitary/qubit count mismatch");
    std::vector<ComplexMatrix> strings = pauli_strings(k);
    std::vector<ComplexMatrix> images;
    images.reserve(strings.size());
    ComplexMatrix udag = u.dagger();
    for (const ComplexMatrix& w : strings) {
        ComplexMatrix v = matmul(matmul(u, w), udag);
        // A Clifford image is a single Pauli string up to sign.
        bool found = false;
        for (const ComplexMatrix& p : strings) {
            cxd c = hs_inner(p, v) * (1.0 / d);
            if (std::abs(std::abs(c) - 1.0) < 1e-9) {
                if (std::abs(c.imag()) > 1e-9) return std::nullopt;  // not a +-1 image
                ComplexMatrix img = p;
                img *= c.real() > 0 ? 1.0 : -1.0;
                images.push_back(std::move(img));
                found = true;
                break;
            }
        }
        if (!found) return std::nullopt;
    }
    return images;
}

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_real(uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
}

double max_offdiag(const ComplexMatrix& m) {
    double worst = 0.0;
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
            if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    return worst;
}

}  // namespace

ComplexMatrix joint_eigenbasis(const std::vector<ComplexMatrix>& family, double tol) {
    if (family.empty()) throw ContractError("joint_eigenbasis: empty family");
    const int d = family.front().dim();

    // Fixed-seed random Hermitian combination separates most eigenspaces.
    uint64_t rng = 0x51a7bb5ce7a3f1b2ULL;
    ComplexMatrix t(d, true);
    for (const ComplexMatrix& g : family) {
        if (g.dim() != d) throw DimensionError("joint_eigenbasis: dim mismatch in family");
        ComplexMatrix h = g;
        h.make_hermitian();
        h *= 2.0 * unit_real(rng) - 1.0;
        t += h;
    }
    t.make_hermitian();
    EigenSystem sys = hermitian_eigensystem(t);
    ComplexMatrix q = sys.vectors;

    // Cluster columns by the combination's eigenvalues, then split clusters
    // with each family member until everything is diagonal.
    double scale = 1.0 + std::abs(sys.values.back()) + std::abs(sys.values.front());
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < d; ++i) {
        if (i > 0 && std::abs(sys.values[i] - sys.values[i - 1]) < 1e-9 * scale)
            clusters.back().push_back(i);
        else
            clusters.push_back({i});
    }

    for (const ComplexMatrix& graw : family) {
        ComplexMatrix g = graw;
        g.make_hermitian();
        std::vector<std::vector<int>> next;
        for (const auto& cluster : clusters) {
            const int m = static_cast<int>(cluster.size());
            if (m == 1) {
                next.push_back(cluster);
                continue;
            }
            // Small restricted matrix S = Qc^dag G Qc.
            ComplexMatrix s(m, true);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) {
                    cxd v = 0.0;
                    for (int r = 0; r < d; ++r) {
                        cxd gq = 0.0;
                        for (int rr = 0; rr < d; ++rr) gq += g(r, rr) * q(rr, cluster[b]);
                        v += std::conj(q(r, cluster[a])) * gq;
                    }
                    s(a, b) = v;
                }
            s.make_hermitian();
            EigenSystem ss = hermitian_eigensystem(s);
            // Rotate the cluster columns.
            std::vector<std::vector<cxd>> rotated(m, std::vector<cxd>(d, 0.0));
            for (int b = 0; b < m; ++b)
                for (int a = 0; a < m; ++a) {
                    cxd w = ss.vectors(a, b);
                    for (int r = 0; r < d; ++r) rotated[b][r] += q(r, cluster[a]) * w;
                }
            for (int b = 0; b < m; ++b)
                for (int r = 0; r < d; ++r) q(r, cluster[b]) = rotated[b][r];
            // Split by eigenvalue gaps.
            double sscale = 1.0 + std::abs(ss.values.back()) + std::abs(ss.values.front());
            std::vector<int> cur = {cluster[0]};
            for (int i = 1; i < m; ++i) {
                if (std::abs(ss.values[i] - ss.values[i - 1]) < 1e-9 * sscale) {
                    cur.push_back(cluster[i]);
                } else {
                    next.push_back(cur);
                    cur = {cluster[i]};
                }
            }
            next.push_back(cur);
        }
        clusters = std::move(next);
    }

    // Verify: every member must now be diagonal in the basis.
    for (const ComplexMatrix& graw : family) {
        ComplexMatrix g = graw;
        g.make_hermitian();
        ComplexMatrix gq = matmul(g, q);
        ComplexMatrix qd = q.dagger();
        ComplexMatrix m = matmul(qd, gq);
        if (max_offdiag(m) > tol * std::max(1.0, g.max_abs()))
            throw std::runtime_error("joint_eigenbasis: family not simultaneously diagonalizable");
    }
    return q;
}

ComplexMatrix lift_diagonal(const ComplexMatrix& basis, const std::vector<double>& x) {
    const int d = basis.dim();
    if (static_cast<int>(x.size()) != d) throw DimensionError("lift_diagonal: size mismatch");
    ComplexMatrix r(d);
    for (int a = 0; a < d; ++a) {
        if (x[a] == 0.0) continue;
        for (int i = 0; i < d; ++i) {
            cxd qa = basis(i, a) * x[a];
            if (qa == cxd(0.0)) continue;
            for (int j = 0; j < d; ++j) r(i, j) += qa * std::conj(basis(j, a));
        }
    }
    r.make_hermitian();
    return r;
}

std::optional<TwirlReduction> reduce_by_symmetry(const ChoiRepresentation& choi, double tol) {
    if (!choi.symmetry) return std::nullopt;
    const ComplexMatrix& q = choi.symmetry->basis;
    const int d = choi.matrix.dim();
    if (q.dim() != d) return std::nullopt;

    TwirlReduction red;
    red.dim = d;
    red.basis = q;

    auto diag_of = [&](const ComplexMatrix& m, std::vector<double>& out) -> double {
        ComplexMatrix mq = matmul(m, q);
        ComplexMatrix a = matmul(q.dagger(), mq);
        out.resize(d);
        double defect = 0.0;
        for (int i = 0; i < d; ++i) {
            out[i] = a(i, i).real();
            defect = std::max(defect, std::abs(a(i, i).imag()));
            for (int j = 0; j < d; ++j)
                if (i != j) defect = std::max(defect, std::abs(a(i, j)));
        }
        return defect;
    };

    double scale = std::max(1.0, choi.matrix.max_abs());
    double defect = diag_of(choi.matrix, red.j_diag);
    if (defect > tol * scale) return std::nullopt;
    red.defect = defect;

    ComplexMatrix jt = partial_transpose(choi.matrix, choi.layout, choi.b_labels());
    defect = diag_of(jt, red.jt_diag);
    if (defect > tol * scale) return std::nullopt;
    red.defect = std::max(red.defect, defect);

    // Partial-transpose action on diagonal coordinates.  Work in a factor
    // order with all A-side factors first so the transposed block is the
    // trailing index.
    std::vector<size_t> ab_order;
    for (size_t k = 0; k < choi.layout.count(); ++k)
        if (choi.layout.factor(k).side == Side::A) ab_order.push_back(k);
    for (size_t k = 0; k < choi.layout.count(); ++k)
        if (choi.layout.factor(k).side == Side::B) ab_order.push_back(k);
    std::vector<int> rowmap = permute_index_map(choi.layout, ab_order);
    int dk = 1, dt = 1;
    for (size_t k = 0; k < choi.layout.count(); ++k) {
        if (choi.layout.factor(k).side == Side::A)
            dk *= choi.layout.factor(k).dim;
        else
            dt *= choi.layout.factor(k).dim;
    }

    // Reshaped eigenvectors: mats[b] is dk x dt.
    std::vector<std::vector<cxd>> mats(d, std::vector<cxd>(static_cast<size_t>(dk) * dt));
    for (int b = 0; b < d; ++b)
        for (int i = 0; i < d; ++i) mats[b][rowmap[i]] = q(i, b);

    red.pt_map.assign(static_cast<size_t>(d) * d, 0.0);
    std::vector<cxd> g(static_cast<size_t>(dt) * dt);
    for (int al = 0; al < d; ++al) {
        const std::vector<cxd>& ma = mats[al];
        for (int be = 0; be < d; ++be) {
            const std::vector<cxd>& mb = mats[be];
            // G = Ma^dag Mb  (dt x dt), G[t1,t2] = sum_k conj(Ma[k,t1]) Mb[k,t2]
            std::fill(g.begin(), g.end(), cxd(0.0));
            for (int k = 0; k < dk; ++k) {
                const cxd* ra = &ma[static_cast<size_t>(k) * dt];
                const cxd* rb = &mb[static_cast<size_t>(k) * dt];
                for (int t1 = 0; t1 < dt; ++t1) {
                    cxd ca = std::conj(ra[t1]);
                    if (ca == cxd(0.0)) continue;
                    cxd* grow = &g[static_cast<size_t>(t1) * dt];
                    for (int t2 = 0; t2 < dt; ++t2) grow[t2] += ca * rb[t2];
                }
            }
            cxd val = 0.0;
            for (int t1 = 0; t1 < dt; ++t1)
                for (int t2 = 0; t2 < dt; ++t2)
                    val += g[static_cast<size_t>(t1) * dt + t2] *
                           std::conj(g[static_cast<size_t>(t2) * dt + t1]);
            red.pt_map[static_cast<size_t>(al) * d + be] = val.real();
        }
    }

    // Closure check: the transpose of a random algebra element must stay in
    // the algebra, and the dense map must reproduce it.
    {
        uint64_t rng = 0xabcdef1234567890ULL;
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) x[i] = 2.0 * unit_real(rng) - 1.0;
        ComplexMatrix lifted = lift_diagonal(q, x);
        ComplexMatrix pt = partial_transpose(lifted, choi.layout, choi.b_labels());
        std::vector<double> via_full;
        double dfull = diag_of(pt, via_full);
        if (dfull > 1e-7) return std::nullopt;
        for (int i = 0; i < d; ++i) {
            double via_map = 0.0;
            for (int k = 0; k < d; ++k) via_map += red.pt_map[static_cast<size_t>(i) * d + k] * x[k];
            if (std::abs(via_map - via_full[i]) > 1e-7) return std::nullopt;
        }
        red.defect = std::max(red.defect, dfull);
    }

    // Consistency: pt_map applied to j_diag must give jt_diag.
    for (int i = 0; i < d; ++i) {
        double v = 0.0;
        for (int k = 0; k < d; ++k) v += red.pt_map[static_cast<size_t>(i) * d + k] * red.j_diag[k];
        if (std::abs(v - red.jt_diag[i]) > 1e-7 * scale) return std::nullopt;
    }

    // Input marginals of the eigenprojectors (inputs are the leading factors).
    const int din = choi.dim_in();
    const int dout = choi.dim_out();
    red.marg.reserve(d);
    for (int b = 0; b < d; ++b) {
        ComplexMatrix m(din, true);
        for (int i = 0; i < din; ++i)
            for (int i2 = 0; i2 < din; ++i2) {
                cxd v = 0.0;
                for (int o = 0; o < dout; ++o)
                    v += q(i * dout + o, b) * std::conj(q(i2 * dout + o, b));
                m(i, i2) = v;
            }
        m.make_hermitian();
        red.marg.push_back(std::move(m));
    }
    return red;
}

}  // namespace qknit
