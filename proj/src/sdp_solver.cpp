#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <lapacke.h>

#include "sdp_internal.hpp"

extern "C" {
void dgemm_(const char*, const char*, const int*, const int*, const int*, const double*,
            const double*, const int*, const double*, const int*, const double*, double*,
            const int*);
}

namespace qknit::detail {

namespace {

using Vec = std::vector<double>;

// Row-major C = A * B for square n x n matrices (via the transposed views).
void mat_mul(Vec& c, const Vec& a, const Vec& b, int n) {
    c.assign(static_cast<size_t>(n) * n, 0.0);
    const double one = 1.0, zero = 0.0;
    dgemm_("N", "N", &n, &n, &n, &one, b.data(), &n, a.data(), &n, &zero, c.data(), &n);
}

void transpose_inplace(Vec& a, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            std::swap(a[static_cast<size_t>(i) * n + j], a[static_cast<size_t>(j) * n + i]);
}

void symmetrize(Vec& a, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = 0.5 * (a[static_cast<size_t>(i) * n + j] + a[static_cast<size_t>(j) * n + i]);
            a[static_cast<size_t>(i) * n + j] = v;
            a[static_cast<size_t>(j) * n + i] = v;
        }
}

// f(M) = Q diag(f(w)) Q^T for symmetric M; optionally returns the eigensystem.
void sym_func(const Vec& m, int n, double (*fn)(double), Vec& out, Vec* q_out = nullptr,
              Vec* w_out = nullptr) {
    Vec q = m;
    Vec w;
    dsyev_inplace(q, n, w, true);  // q[k*n+j] = component k of eigenvector j
    Vec qd(static_cast<size_t>(n) * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            qd[static_cast<size_t>(k) * n + j] = q[static_cast<size_t>(k) * n + j] * fn(w[j]);
    // out = (Q diag) * Q^T
    Vec qt = q;
    transpose_inplace(qt, n);
    mat_mul(out, qd, qt, n);
    symmetrize(out, n);
    if (q_out) *q_out = std::move(q);
    if (w_out) *w_out = std::move(w);
}

double fn_sqrt(double x) { return std::sqrt(std::max(x, 1e-300)); }
double fn_invsqrt(double x) { return 1.0 / std::sqrt(std::max(x, 1e-300)); }

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
double nrm2(const Vec& a) { return std::sqrt(dot(a, a)); }
double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

struct ConeLayout {
    std::vector<int> offset;
    int total = 0;
    double degree = 0.0;
};

ConeLayout cone_layout(const Compiled& cp) {
    ConeLayout cl;
    for (const auto& blk : cp.cones) {
        cl.offset.push_back(cl.total);
        cl.total += blk.rows;
        cl.degree += blk.psd ? blk.n : blk.rows;
    }
    return cl;
}

void mult_G(const Compiled& cp, const ConeLayout& cl, const Vec& x, Vec& out) {
    out.assign(cl.total, 0.0);
    for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
        const auto& blk = cp.cones[bi];
        int base = cl.offset[bi];
        for (int col = 0; col < cp.n_x; ++col) {
            double xv = x[col];
            if (xv == 0.0) continue;
            for (const auto& e : blk.cols[col].entries) out[base + e.first] += e.second * xv;
        }
    }
}

void mult_Gt(const Compiled& cp, const ConeLayout& cl, const Vec& v, Vec& out) {
    out.assign(cp.n_x, 0.0);
    for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
        const auto& blk = cp.cones[bi];
        int base = cl.offset[bi];
        for (int col = 0; col < cp.n_x; ++col) {
            double sum = 0.0;
            for (const auto& e : blk.cols[col].entries) sum += e.second * v[base + e.first];
            out[col] += sum;
        }
    }
}

void mult_A(const Compiled& cp, const Vec& x, Vec& out) {
    out.assign(cp.eq.rows, 0.0);
    if (cp.eq.rows == 0) return;
    for (int col = 0; col < cp.n_x; ++col) {
        double xv = x[col];
        if (xv == 0.0) continue;
        for (const auto& e : cp.eq.cols[col].entries) out[e.first] += e.second * xv;
    }
}

void mult_At(const Compiled& cp, const Vec& y, Vec& out) {
    out.assign(cp.n_x, 0.0);
    if (cp.eq.rows == 0) return;
    for (int col = 0; col < cp.n_x; ++col) {
        double sum = 0.0;
        for (const auto& e : cp.eq.cols[col].entries) sum += e.second * y[e.first];
        out[col] = sum;
    }
}

struct BlockScaling {
    // psd blocks: NT matrix P (P Z P = S), its inverse, square roots, the
    // scaled point lam and its eigensystem.
    Vec p, pinv, r, rinv, lam, lam_q, lam_qt, lam_w;
    // nonneg rows
    Vec w, lam_v;
};

// out(svec) = R mat(v) R for symmetric R.
void conj_apply(const Vec& rm, int n, const double* v, double* out, Vec& t1, Vec& t2, Vec& t3) {
    svec_to_mat(v, n, t1);
    mat_mul(t2, rm, t1, n);
    mat_mul(t3, t2, rm, n);
    symmetrize(t3, n);
    mat_to_svec(t3, n, out);
}

double max_step_psd(const double* s, const double* d, int n) {
    Vec sm, dm;
    svec_to_mat(s, n, sm);
    svec_to_mat(d, n, dm);
    Vec shalf_inv;
    sym_func(sm, n, fn_invsqrt, shalf_inv);
    Vec t1, t2;
    mat_mul(t1, shalf_inv, dm, n);
    mat_mul(t2, t1, shalf_inv, n);
    symmetrize(t2, n);
    Vec w;
    dsyev_inplace(t2, n, w, false);
    double lmin = w.front();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

double min_eig_svec(const double* s, int n) {
    Vec sm;
    svec_to_mat(s, n, sm);
    Vec w;
    dsyev_inplace(sm, n, w, false);
    return w.front();
}

class KktSolver {
  public:
    KktSolver(const Compiled& c, const ConeLayout& l)
        : cp_(c), cl_(l), n_x_(c.n_x), p_(c.eq.rows) {}

    void factor(const std::vector<BlockScaling>& scaling) {
        assemble(scaling);
        int info = LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', n_x_, H_.data(), n_x_);
        if (info != 0) {
            assemble(scaling);
            double scale = 0.0;
            for (int i = 0; i < n_x_; ++i)
                scale = std::max(scale, H_[static_cast<size_t>(i) * n_x_ + i]);
            for (int i = 0; i < n_x_; ++i)
                H_[static_cast<size_t>(i) * n_x_ + i] += 1e-12 * std::max(1.0, scale);
            info = LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', n_x_, H_.data(), n_x_);
            if (info != 0) throw SolverError("Schur complement factorization failed");
        }
        factor_eq();
    }

    // Solve [0 A' G'; A 0 0; G 0 -W2](dx,dy,dz) = (px,py,pz), W2 the squared
    // NT scaling (conjugation by P, or w^2 on nonneg rows), with one round of
    // iterative refinement.
    void core_solve(const std::vector<BlockScaling>& scaling, const Vec& px, const Vec& py,
                    const Vec& pz, Vec& dx, Vec& dy, Vec& dz) const {
        core_solve_raw(scaling, px, py, pz, dx, dy, dz);
        for (int pass = 0; pass < 2; ++pass) {
            Vec r1, r2(p_, 0.0), r3, t1, t2;
            mult_At(cp_, dy, r1);
            mult_Gt(cp_, cl_, dz, t1);
            for (int i = 0; i < n_x_; ++i) r1[i] = px[i] - (r1[i] + t1[i]);
            if (p_ > 0) {
                mult_A(cp_, dx, r2);
                for (int i = 0; i < p_; ++i) r2[i] = py[i] - r2[i];
            }
            mult_G(cp_, cl_, dx, t1);
            apply_W2(scaling, dz, t2);
            r3.assign(cl_.total, 0.0);
            for (int i = 0; i < cl_.total; ++i) r3[i] = pz[i] - (t1[i] - t2[i]);
            double worst = std::max({norm_inf_local(r1), norm_inf_local(r2), norm_inf_local(r3)});
            double scale = 1.0 + std::max({norm_inf_local(px), norm_inf_local(py),
                                           norm_inf_local(pz)});
            if (worst <= 1e-13 * scale) break;
            Vec cx, cy, cz;
            core_solve_raw(scaling, r1, r2, r3, cx, cy, cz);
            for (int i = 0; i < n_x_; ++i) dx[i] += cx[i];
            for (int i = 0; i < p_; ++i) dy[i] += cy[i];
            for (int i = 0; i < cl_.total; ++i) dz[i] += cz[i];
        }
    }

    void core_solve_raw(const std::vector<BlockScaling>& scaling, const Vec& px, const Vec& py,
                        const Vec& pz, Vec& dx, Vec& dy, Vec& dz) const {
        Vec wz;
        apply_Winv2(scaling, pz, wz);
        Vec t;
        mult_Gt(cp_, cl_, wz, t);
        for (int i = 0; i < n_x_; ++i) t[i] += px[i];

        Vec u = t;
        solve_H(u);
        if (p_ > 0) {
            Vec au;
            mult_A(cp_, u, au);
            for (int i = 0; i < p_; ++i) au[i] -= py[i];
            LAPACKE_dpotrs(LAPACK_ROW_MAJOR, 'L', p_, 1, SA_.data(), p_, au.data(), 1);
            dy = au;
            Vec aty;
            mult_At(cp_, dy, aty);
            solve_H(aty);
            dx.assign(n_x_, 0.0);
            for (int i = 0; i < n_x_; ++i) dx[i] = u[i] - aty[i];
        } else {
            dy.clear();
            dx = u;
        }
        Vec gdx;
        mult_G(cp_, cl_, dx, gdx);
        for (int i = 0; i < cl_.total; ++i) gdx[i] -= pz[i];
        apply_Winv2(scaling, gdx, dz);
    }

    static double norm_inf_local(const Vec& a) {
        double s = 0.0;
        for (double v : a) s = std::max(s, std::abs(v));
        return s;
    }

    void apply_Winv2(const std::vector<BlockScaling>& scaling, const Vec& v, Vec& out) const {
        out.assign(cl_.total, 0.0);
        Vec t1, t2, t3;
        for (size_t bi = 0; bi < cp_.cones.size(); ++bi) {
            const auto& blk = cp_.cones[bi];
            int base = cl_.offset[bi];
            if (blk.psd) {
                conj_apply(scaling[bi].pinv, blk.n, &v[base], &out[base], t1, t2, t3);
            } else {
                for (int i = 0; i < blk.rows; ++i) {
                    double w = scaling[bi].w[i];
                    out[base + i] = v[base + i] / (w * w);
                }
            }
        }
    }

    void apply_W2(const std::vector<BlockScaling>& scaling, const Vec& v, Vec& out) const {
        out.assign(cl_.total, 0.0);
        Vec t1, t2, t3;
        for (size_t bi = 0; bi < cp_.cones.size(); ++bi) {
            const auto& blk = cp_.cones[bi];
            int base = cl_.offset[bi];
            if (blk.psd) {
                conj_apply(scaling[bi].p, blk.n, &v[base], &out[base], t1, t2, t3);
            } else {
                for (int i = 0; i < blk.rows; ++i) {
                    double w = scaling[bi].w[i];
                    out[base + i] = v[base + i] * w * w;
                }
            }
        }
    }

  private:
    void assemble(const std::vector<BlockScaling>& scaling) {
        H_.assign(static_cast<size_t>(n_x_) * n_x_, 0.0);
        const double sq2 = std::sqrt(2.0);
        for (size_t bi = 0; bi < cp_.cones.size(); ++bi) {
            const auto& blk = cp_.cones[bi];
            std::vector<int> act;
            for (int col = 0; col < n_x_; ++col)
                if (!blk.cols[col].entries.empty()) act.push_back(col);

            if (blk.psd) {
                const Vec& pinv = scaling[bi].pinv;
                const int n = blk.n;
                const int nh = svec_size(n);
                sk_.assign(static_cast<size_t>(nh) * nh, 0.0);
                auto W = [&](int i, int j) { return pinv[static_cast<size_t>(i) * n + j]; };
                int pidx = 0;
                for (int j = 0; j < n; ++j)
                    for (int i = j; i < n; ++i, ++pidx) {
                        int qidx = 0;
                        double* row = &sk_[static_cast<size_t>(pidx) * nh];
                        for (int l = 0; l < n; ++l)
                            for (int k = l; k < n; ++k, ++qidx) {
                                double v;
                                if (i == j && k == l)
                                    v = W(i, k) * W(i, k);
                                else if (i == j)
                                    v = sq2 * W(i, k) * W(i, l);
                                else if (k == l)
                                    v = sq2 * W(i, k) * W(j, k);
                                else
                                    v = W(i, k) * W(j, l) + W(i, l) * W(j, k);
                                row[qidx] = v;
                            }
                    }
                for (size_t ia = 0; ia < act.size(); ++ia) {
                    int ca = act[ia];
                    const auto& ea = blk.cols[ca].entries;
                    for (size_t ib = ia; ib < act.size(); ++ib) {
                        int cb = act[ib];
                        const auto& eb = blk.cols[cb].entries;
                        double v = 0.0;
                        for (const auto& a : ea) {
                            const double* row = &sk_[static_cast<size_t>(a.first) * nh];
                            for (const auto& b : eb) v += a.second * b.second * row[b.first];
                        }
                        H_[static_cast<size_t>(ca) * n_x_ + cb] += v;
                        if (ca != cb) H_[static_cast<size_t>(cb) * n_x_ + ca] += v;
                    }
                }
            } else {
                const Vec& w = scaling[bi].w;
                for (size_t ia = 0; ia < act.size(); ++ia) {
                    int ca = act[ia];
                    const auto& ea = blk.cols[ca].entries;
                    for (size_t ib = ia; ib < act.size(); ++ib) {
                        int cb = act[ib];
                        const auto& eb = blk.cols[cb].entries;
                        double v = 0.0;
                        for (const auto& a : ea)
                            for (const auto& b : eb)
                                if (a.first == b.first)
                                    v += a.second * b.second / (w[a.first] * w[a.first]);
                        if (v != 0.0) {
                            H_[static_cast<size_t>(ca) * n_x_ + cb] += v;
                            if (ca != cb) H_[static_cast<size_t>(cb) * n_x_ + ca] += v;
                        }
                    }
                }
            }
        }
    }

    void factor_eq() {
        if (p_ == 0) return;
        AH_.assign(static_cast<size_t>(n_x_) * p_, 0.0);
        for (int col = 0; col < n_x_; ++col)
            for (const auto& e : cp_.eq.cols[col].entries)
                AH_[static_cast<size_t>(col) * p_ + e.first] = e.second;
        LAPACKE_dpotrs(LAPACK_ROW_MAJOR, 'L', n_x_, p_, H_.data(), n_x_, AH_.data(), p_);
        SA_.assign(static_cast<size_t>(p_) * p_, 0.0);
        for (int col = 0; col < n_x_; ++col)
            for (const auto& e : cp_.eq.cols[col].entries)
                for (int j = 0; j < p_; ++j)
                    SA_[static_cast<size_t>(e.first) * p_ + j] +=
                        e.second * AH_[static_cast<size_t>(col) * p_ + j];
        int info = LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', p_, SA_.data(), p_);
        if (info != 0) throw SolverError("equality-row Schur factorization failed");
    }

    void solve_H(Vec& rhs) const {
        LAPACKE_dpotrs(LAPACK_ROW_MAJOR, 'L', n_x_, 1, const_cast<double*>(H_.data()), n_x_,
                       rhs.data(), 1);
    }

    const Compiled& cp_;
    const ConeLayout& cl_;
    int n_x_, p_;
    Vec H_, AH_;
    mutable Vec SA_;
    Vec sk_;
};

}  // namespace

SdpSolution solve_compiled(const Compiled& cp, const SdpProblem& prob, const SolveOptions& opt) {
    (void)prob;
    ConeLayout cl = cone_layout(cp);
    const int n_x = cp.n_x;
    const int p = cp.eq.rows;
    const int m = cl.total;
    const double nu = cl.degree + 1.0;

    Vec b = cp.eq.b;
    Vec h(m, 0.0);
    for (size_t bi = 0; bi < cp.cones.size(); ++bi)
        for (int r = 0; r < cp.cones[bi].rows; ++r) h[cl.offset[bi] + r] = cp.cones[bi].h[r];
    const Vec& c = cp.c;

    const double norm_b = std::max(1.0, norm_inf(b));
    const double norm_h = std::max(1.0, norm_inf(h));
    const double norm_c = std::max(1.0, norm_inf(c));

    const double reltol = opt.tol;
    const double feastol = 10.0 * opt.tol;

    Vec e_cone(m, 0.0);
    for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
        const auto& blk = cp.cones[bi];
        int base = cl.offset[bi];
        if (blk.psd) {
            int pidx = 0;
            for (int j = 0; j < blk.n; ++j)
                for (int i = j; i < blk.n; ++i, ++pidx)
                    if (i == j) e_cone[base + pidx] = 1.0;
        } else {
            for (int i = 0; i < blk.rows; ++i) e_cone[base + i] = 1.0;
        }
    }

    std::vector<BlockScaling> scaling(cp.cones.size());
    auto identity_scaling = [&]() {
        for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
            const auto& blk = cp.cones[bi];
            if (blk.psd) {
                int n = blk.n;
                scaling[bi].p.assign(static_cast<size_t>(n) * n, 0.0);
                scaling[bi].pinv.assign(static_cast<size_t>(n) * n, 0.0);
                for (int i = 0; i < n; ++i) {
                    scaling[bi].p[static_cast<size_t>(i) * n + i] = 1.0;
                    scaling[bi].pinv[static_cast<size_t>(i) * n + i] = 1.0;
                }
            } else {
                scaling[bi].w.assign(blk.rows, 1.0);
            }
        }
    };

    KktSolver kkt(cp, cl);
    identity_scaling();
    kkt.factor(scaling);

    Vec x(n_x, 0.0), y(p, 0.0), z(m, 0.0), s(m, 0.0);
    double tau = 1.0, kappa = 1.0;
    {
        Vec zero_x(n_x, 0.0), dx, dy, dz;
        kkt.core_solve(scaling, zero_x, b, h, dx, dy, dz);
        x = dx;
        Vec gx;
        mult_G(cp, cl, x, gx);
        for (int i = 0; i < m; ++i) s[i] = h[i] - gx[i];

        Vec mc(n_x);
        for (int i = 0; i < n_x; ++i) mc[i] = -c[i];
        Vec zp(p, 0.0), zm(m, 0.0);
        kkt.core_solve(scaling, mc, zp, zm, dx, dy, dz);
        y = dy;
        z = dz;

        auto nudge = [&](Vec& v) {
            double worst = std::numeric_limits<double>::infinity();
            for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
                const auto& blk = cp.cones[bi];
                int base = cl.offset[bi];
                if (blk.psd)
                    worst = std::min(worst, min_eig_svec(&v[base], blk.n));
                else
                    for (int i = 0; i < blk.rows; ++i) worst = std::min(worst, v[base + i]);
            }
            double nv = std::max(1.0, nrm2(v));
            if (worst < 1e-8 * nv) {
                double a = 1.0 + std::max(0.0, -worst);
                for (int i = 0; i < m; ++i) v[i] += a * e_cone[i];
            }
        };
        nudge(s);
        nudge(z);
    }

    SdpSolution best;
    double best_score = std::numeric_limits<double>::infinity();

    auto extract = [&](SdpSolution& sol, const Vec& xv, double tdiv) {
        const double isq = 1.0 / std::sqrt(2.0);
        for (const auto& slot : cp.slots) {
            const double* xs = &xv[slot.offset];
            if (slot.kind == SdpProblem::VarInfo::Kind::Scalar) {
                sol.scalars[slot.name] = xs[0] / tdiv;
            } else if (slot.kind == SdpProblem::VarInfo::Kind::Vector) {
                std::vector<double> v(slot.count);
                for (int i = 0; i < slot.count; ++i) v[i] = xs[i] / tdiv;
                sol.vectors[slot.name] = std::move(v);
            } else {
                int d = slot.dim;
                ComplexMatrix mv(d, true);
                int pidx = 0;
                for (int j = 0; j < d; ++j)
                    for (int i = j; i < d; ++i) {
                        if (i == j) {
                            mv(i, i) = xs[pidx++] / tdiv;
                        } else {
                            double re = xs[pidx++] * isq / tdiv;
                            double im = slot.complex_coords ? xs[pidx++] * isq / tdiv : 0.0;
                            mv(i, j) = cxd(re, im);
                            mv(j, i) = cxd(re, -im);
                        }
                    }
                sol.matrices[slot.name] = std::move(mv);
            }
        }
    };

    // Worst spectral constraint violation of the de-homogenized solution.
    auto spectral_pres = [&](const Vec& xv, double tdiv) {
        Vec gx2;
        mult_G(cp, cl, xv, gx2);
        double worst = 0.0;
        for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
            const auto& blk = cp.cones[bi];
            int base = cl.offset[bi];
            Vec slack(blk.rows);
            for (int r = 0; r < blk.rows; ++r) slack[r] = (h[base + r] - gx2[base + r]) / tdiv;
            if (blk.psd)
                worst = std::max(worst, -std::min(0.0, min_eig_svec(slack.data(), blk.n)));
            else
                for (int r = 0; r < blk.rows; ++r) worst = std::max(worst, -std::min(0.0, slack[r]));
        }
        if (p > 0) {
            Vec ax2;
            mult_A(cp, xv, ax2);
            for (int i = 0; i < p; ++i) worst = std::max(worst, std::abs(ax2[i] / tdiv - b[i]));
        }
        return worst;
    };

    Vec rx, ry, rz, gt_z, at_y, gx, ax;
    std::string note;
    int stall_count = 0;

    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        mult_Gt(cp, cl, z, gt_z);
        mult_At(cp, y, at_y);
        rx.assign(n_x, 0.0);
        for (int i = 0; i < n_x; ++i) rx[i] = at_y[i] + gt_z[i] + c[i] * tau;
        mult_A(cp, x, ax);
        ry.assign(p, 0.0);
        for (int i = 0; i < p; ++i) ry[i] = ax[i] - b[i] * tau;
        mult_G(cp, cl, x, gx);
        rz.assign(m, 0.0);
        for (int i = 0; i < m; ++i) rz[i] = gx[i] + s[i] - h[i] * tau;
        const double cx = dot(c, x), by = dot(b, y), hz = dot(h, z);
        const double rt = kappa + cx + by + hz;

        const double gap = dot(s, z);
        const double mu = (gap + tau * kappa) / nu;

        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double agap = gap / (tau * tau);
        const double denom = std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
        const double relgap = agap / denom;
        const double pres =
            std::max(p > 0 ? nrm2(ry) / norm_b : 0.0, nrm2(rz) / norm_h) / tau;
        const double dres = nrm2(rx) / norm_c / tau;

        if (opt.verbose)
            std::fprintf(stderr,
                         "it %3d  pcost % .9e  dcost % .9e  relgap %.2e  pres %.2e  dres %.2e\n",
                         iter, pcost, dcost, relgap, pres, dres);

        double score = std::max({relgap, pres, dres});
        if (score < best_score) {
            best_score = score;
            stall_count = 0;
            best = SdpSolution{};
            best.iterations = iter;
            best.primal_objective = cp.sign * pcost + cp.sign * cp.offset;
            best.dual_objective = cp.sign * dcost + cp.sign * cp.offset;
            best.gap = std::abs(pcost - dcost);
            best.rel_gap = relgap;
            best.primal_residual = pres;
            best.dual_residual = dres;
            extract(best, x, tau);
        }

        if (pres <= feastol && dres <= feastol && (relgap <= reltol || agap <= reltol)) {
            SdpSolution sol;
            sol.status = SdpSolution::Status::Optimal;
            sol.iterations = iter;
            sol.primal_objective = cp.sign * pcost + cp.sign * cp.offset;
            sol.dual_objective = cp.sign * dcost + cp.sign * cp.offset;
            sol.gap = std::abs(pcost - dcost);
            sol.rel_gap = relgap;
            sol.primal_residual = spectral_pres(x, tau);
            sol.dual_residual = norm_inf(rx) / tau;
            extract(sol, x, tau);
            return sol;
        }

        // certificates of infeasibility / unboundedness
        if (-(by + hz) > 0.0) {
            Vec rx0(n_x);
            for (int i = 0; i < n_x; ++i) rx0[i] = at_y[i] + gt_z[i];
            double pinfres = nrm2(rx0) / norm_c / (-(by + hz));
            if (pinfres <= feastol && tau <= 1e-6 * std::max(1.0, kappa)) {
                SdpSolution sol = best;
                sol.status = SdpSolution::Status::Infeasible;
                sol.iterations = iter;
                return sol;
            }
        }
        if (-cx > 0.0) {
            Vec gxs(m);
            for (int i = 0; i < m; ++i) gxs[i] = gx[i] + s[i];
            double dinfres = std::max(p > 0 ? nrm2(ax) / norm_b : 0.0, nrm2(gxs) / norm_h) / (-cx);
            if (dinfres <= feastol && tau <= 1e-6 * std::max(1.0, kappa)) {
                SdpSolution sol = best;
                sol.status = SdpSolution::Status::Unbounded;
                sol.iterations = iter;
                return sol;
            }
        }

        if (iter == opt.max_iterations) {
            note = "iteration cap reached";
            break;
        }
        if (++stall_count > 10) {
            note = "no progress over 10 iterations";
            break;
        }

        // --- NT scaling update ---
        bool scale_ok = true;
        for (size_t bi = 0; bi < cp.cones.size() && scale_ok; ++bi) {
            const auto& blk = cp.cones[bi];
            int base = cl.offset[bi];
            BlockScaling& sc = scaling[bi];
            if (blk.psd) {
                int n = blk.n;
                Vec S, Z;
                svec_to_mat(&s[base], n, S);
                svec_to_mat(&z[base], n, Z);
                Vec zw;
                Vec zhalf, zhalfinv;
                sym_func(Z, n, fn_sqrt, zhalf, nullptr, &zw);
                if (zw.front() <= 0.0) {
                    scale_ok = false;
                    break;
                }
                sym_func(Z, n, fn_invsqrt, zhalfinv);
                Vec t1, t2;
                mat_mul(t1, zhalf, S, n);
                mat_mul(t2, t1, zhalf, n);
                symmetrize(t2, n);
                Vec thalf, thalfinv, tw;
                sym_func(t2, n, fn_sqrt, thalf, nullptr, &tw);
                if (tw.front() <= 0.0) {
                    scale_ok = false;
                    break;
                }
                sym_func(t2, n, fn_invsqrt, thalfinv);
                mat_mul(t1, zhalfinv, thalf, n);
                mat_mul(sc.p, t1, zhalfinv, n);
                symmetrize(sc.p, n);
                mat_mul(t1, zhalf, thalfinv, n);
                mat_mul(sc.pinv, t1, zhalf, n);
                symmetrize(sc.pinv, n);
                sym_func(sc.p, n, fn_sqrt, sc.r);
                sym_func(sc.p, n, fn_invsqrt, sc.rinv);
                mat_mul(t1, sc.r, Z, n);
                mat_mul(sc.lam, t1, sc.r, n);
                symmetrize(sc.lam, n);
                sc.lam_q = sc.lam;
                dsyev_inplace(sc.lam_q, n, sc.lam_w, true);
                sc.lam_qt = sc.lam_q;
                transpose_inplace(sc.lam_qt, n);
                if (sc.lam_w.front() <= 0.0) {
                    scale_ok = false;
                    break;
                }
            } else {
                sc.w.assign(blk.rows, 1.0);
                sc.lam_v.assign(blk.rows, 0.0);
                for (int i = 0; i < blk.rows; ++i) {
                    double si = s[base + i], zi = z[base + i];
                    if (si <= 0.0 || zi <= 0.0) {
                        scale_ok = false;
                        break;
                    }
                    sc.w[i] = std::sqrt(si / zi);
                    sc.lam_v[i] = std::sqrt(si * zi);
                }
            }
        }
        if (!scale_ok) {
            note = "iterate left the cone interior";
            break;
        }

        try {
            kkt.factor(scaling);
        } catch (const SolverError& err) {
            note = err.what();
            break;
        }

        Vec x1, y1, z1;
        {
            Vec mc(n_x);
            for (int i = 0; i < n_x; ++i) mc[i] = -c[i];
            kkt.core_solve(scaling, mc, b, h, x1, y1, z1);
        }
        const double d1 = dot(c, x1) + dot(b, y1) + dot(h, z1);


        // lam o lam in svec coordinates
        Vec lam2(m, 0.0);
        {
            Vec t1;
            for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
                const auto& blk = cp.cones[bi];
                int base = cl.offset[bi];
                if (blk.psd) {
                    mat_mul(t1, scaling[bi].lam, scaling[bi].lam, blk.n);
                    symmetrize(t1, blk.n);
                    mat_to_svec(t1, blk.n, &lam2[base]);
                } else {
                    for (int i = 0; i < blk.rows; ++i) {
                        double l = scaling[bi].lam_v[i];
                        lam2[base + i] = l * l;
                    }
                }
            }
        }

        // Solve the Newton system for rhs scale eta, scaled-complementarity
        // rhs Ds (svec) and kappa-complementarity rhs dk.
        auto direction = [&](double eta, const Vec& Ds, double dk_rhs, Vec& ox, Vec& oy, Vec& oz,
                             Vec& os, double& otau, double& okap) {
            Vec wdts(m, 0.0);
            Vec t1, t2, t3;
            for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
                const auto& blk = cp.cones[bi];
                int base = cl.offset[bi];
                const BlockScaling& sc = scaling[bi];
                if (blk.psd) {
                    int n = blk.n;
                    Vec Dm;
                    svec_to_mat(&Ds[base], n, Dm);
                    // Jordan solve: lam X + X lam = 2 D via lam's eigensystem
                    Vec u1, u2;
                    mat_mul(u1, sc.lam_qt, Dm, n);
                    mat_mul(u2, u1, sc.lam_q, n);  // Q^T D Q
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j)
                            u2[static_cast<size_t>(i) * n + j] *=
                                2.0 / (sc.lam_w[i] + sc.lam_w[j]);
                    mat_mul(u1, sc.lam_q, u2, n);
                    mat_mul(u2, u1, sc.lam_qt, n);  // X = Q (..) Q^T
                    // W(X) = R X R
                    mat_mul(u1, sc.r, u2, n);
                    mat_mul(u2, u1, sc.r, n);
                    symmetrize(u2, n);
                    mat_to_svec(u2, n, &wdts[base]);
                } else {
                    for (int i = 0; i < blk.rows; ++i)
                        wdts[base + i] = sc.w[i] * (Ds[base + i] / sc.lam_v[i]);
                }
            }
            Vec px(n_x), py(p), pz(m);
            for (int i = 0; i < n_x; ++i) px[i] = -eta * rx[i];
            for (int i = 0; i < p; ++i) py[i] = -eta * ry[i];
            for (int i = 0; i < m; ++i) pz[i] = -eta * rz[i] - wdts[i];
            Vec x0, y0, z0;
            kkt.core_solve(scaling, px, py, pz, x0, y0, z0);
            double num = -eta * rt - dk_rhs / tau - (dot(c, x0) + dot(b, y0) + dot(h, z0));
            double den = d1 - kappa / tau;
            otau = num / den;
            ox.assign(n_x, 0.0);
            oy.assign(p, 0.0);
            oz.assign(m, 0.0);
            for (int i = 0; i < n_x; ++i) ox[i] = x0[i] + otau * x1[i];
            for (int i = 0; i < p; ++i) oy[i] = y0[i] + otau * y1[i];
            for (int i = 0; i < m; ++i) oz[i] = z0[i] + otau * z1[i];
            // os = W(dts) - W^2(oz)
            Vec w2z;
            kkt.apply_W2(scaling, oz, w2z);
            os.assign(m, 0.0);
            for (int i = 0; i < m; ++i) os[i] = wdts[i] - w2z[i];
            okap = (dk_rhs - kappa * otau) / tau;
        };

        Vec Ds(m, 0.0);
        for (int i = 0; i < m; ++i) Ds[i] = -lam2[i];
        Vec dx_a, dy_a, dz_a, ds_a;
        double dtau_a = 0.0, dkap_a = 0.0;
        direction(1.0, Ds, -tau * kappa, dx_a, dy_a, dz_a, ds_a, dtau_a, dkap_a);


        auto max_step_all = [&](const Vec& dsv, const Vec& dzv, double dtv, double dkv) {
            double a = std::numeric_limits<double>::infinity();
            for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
                const auto& blk = cp.cones[bi];
                int base = cl.offset[bi];
                if (blk.psd) {
                    a = std::min(a, max_step_psd(&s[base], &dsv[base], blk.n));
                    a = std::min(a, max_step_psd(&z[base], &dzv[base], blk.n));
                } else {
                    for (int i = 0; i < blk.rows; ++i) {
                        if (dsv[base + i] < 0.0) a = std::min(a, -s[base + i] / dsv[base + i]);
                        if (dzv[base + i] < 0.0) a = std::min(a, -z[base + i] / dzv[base + i]);
                    }
                }
            }
            if (dtv < 0.0) a = std::min(a, -tau / dtv);
            if (dkv < 0.0) a = std::min(a, -kappa / dkv);
            return a;
        };

        double alpha_aff = std::min(1.0, max_step_all(ds_a, dz_a, dtau_a, dkap_a));
        double gap_aff;
        {
            Vec s2(m), z2(m);
            for (int i = 0; i < m; ++i) {
                s2[i] = s[i] + alpha_aff * ds_a[i];
                z2[i] = z[i] + alpha_aff * dz_a[i];
            }
            gap_aff = dot(s2, z2) + (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a);
        }
        double sigma = std::pow(std::max(0.0, gap_aff / (gap + tau * kappa)), 3.0);
        sigma = std::clamp(sigma, 0.0, 1.0);

        // corrector rhs
        for (int i = 0; i < m; ++i) Ds[i] = sigma * mu * e_cone[i] - lam2[i];
        {
            Vec t1, sds, sdz, prod1, prod2;
            for (size_t bi = 0; bi < cp.cones.size(); ++bi) {
                const auto& blk = cp.cones[bi];
                int base = cl.offset[bi];
                const BlockScaling& sc = scaling[bi];
                if (blk.psd) {
                    int n = blk.n;
                    Vec dsm, dzm;
                    svec_to_mat(&ds_a[base], n, dsm);
                    svec_to_mat(&dz_a[base], n, dzm);
                    mat_mul(t1, sc.rinv, dsm, n);
                    mat_mul(sds, t1, sc.rinv, n);
                    mat_mul(t1, sc.r, dzm, n);
                    mat_mul(sdz, t1, sc.r, n);
                    mat_mul(prod1, sds, sdz, n);
                    mat_mul(prod2, sdz, sds, n);
                    Vec corr(static_cast<size_t>(n) * n);
                    for (size_t k = 0; k < corr.size(); ++k)
                        corr[k] = 0.5 * (prod1[k] + prod2[k]);
                    Vec cs(svec_size(n));
                    mat_to_svec(corr, n, cs.data());
                    for (int r = 0; r < svec_size(n); ++r) Ds[base + r] -= cs[r];
                } else {
                    for (int i = 0; i < blk.rows; ++i) {
                        double u = ds_a[base + i] / sc.w[i];
                        double v = dz_a[base + i] * sc.w[i];
                        Ds[base + i] -= u * v;
                    }
                }
            }
        }
        double dk_rhs = sigma * mu - tau * kappa - dtau_a * dkap_a;

        Vec dx, dy, dz, ds;
        double dtau = 0.0, dkap = 0.0;
        direction(1.0 - sigma, Ds, dk_rhs, dx, dy, dz, ds, dtau, dkap);

        double alpha = std::min(1.0, 0.99 * max_step_all(ds, dz, dtau, dkap));
        if (!std::isfinite(alpha) || alpha <= 1e-10) {
            note = "step length collapsed";
            break;
        }

        for (int i = 0; i < n_x; ++i) x[i] += alpha * dx[i];
        for (int i = 0; i < p; ++i) y[i] += alpha * dy[i];
        for (int i = 0; i < m; ++i) {
            z[i] += alpha * dz[i];
            s[i] += alpha * ds[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkap;
    }

    best.status = SdpSolution::Status::NumericalFailure;
    return best;
}

}  // namespace qknit::detail
