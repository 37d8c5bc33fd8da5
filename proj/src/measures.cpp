#include "qknit/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "qknit/twirl.hpp"

using json = nlohmann::json;

namespace qknit {

namespace {

constexpr double kLog2 = 0.6931471805599453;

double log2_safe(double v) { return std::log(std::max(v, 1e-300)) / kLog2; }

SolverDiag diag_of(const SdpSolution& sol, bool reduced) {
    SolverDiag d;
    d.status = SdpSolution::status_name(sol.status);
    d.gap = sol.gap;
    d.rel_gap = sol.rel_gap;
    d.primal_residual = sol.primal_residual;
    d.dual_residual = sol.dual_residual;
    d.iterations = sol.iterations;
    d.reduced = reduced;
    return d;
}

// Accepts an optimal solve, or a stalled one whose best iterate still sits
// within a small multiple of the requested tolerance (IPM endgames can stop
// a hair short of very tight targets while the value is long converged).
void require_usable(const SdpSolution& sol, const char* what, double tol) {
    if (sol.status == SdpSolution::Status::Optimal) return;
    if (sol.status == SdpSolution::Status::NumericalFailure && sol.rel_gap <= 20.0 * tol &&
        sol.primal_residual <= 20.0 * tol && sol.dual_residual <= 20.0 * tol)
        return;
    char buf[160];
    std::snprintf(buf, sizeof(buf), " (relgap %.2e, pres %.2e, dres %.2e, it %d)", sol.rel_gap,
                  sol.primal_residual, sol.dual_residual, sol.iterations);
    throw SolverError(std::string(what) + ": solver returned " +
                      SdpSolution::status_name(sol.status) + buf);
}

// Shared per-channel context for the SDP builders.
struct Ctx {
    const ChoiRepresentation& choi;
    std::vector<std::string> in_labels;
    std::vector<std::string> bb;    // B-side labels, inputs and outputs
    std::vector<std::string> b_in;  // B-side inputs (labels of the AB layout)
    SystemLayout ab_layout;
    int d_in, d_out;
    ComplexMatrix j_pt;  // J^{T_BB'}

    explicit Ctx(const ChoiRepresentation& c) : choi(c) {
        in_labels = c.input_labels();
        bb = c.b_labels();
        ab_layout = c.layout.restricted(in_labels);
        for (const Factor& f : ab_layout.factors())
            if (f.side == Side::B) b_in.push_back(f.label);
        d_in = c.dim_in();
        d_out = c.dim_out();
        j_pt = partial_transpose(c.matrix, c.layout, bb);
    }
};

std::optional<TwirlReduction> maybe_reduce(const ChoiRepresentation& choi,
                                           const MeasureOptions& opt) {
    if (!opt.allow_twirl) return std::nullopt;
    return reduce_by_symmetry(choi);
}

std::vector<std::vector<double>> rows_of(const std::vector<double>& flat, int n) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rows[i][j] = flat[static_cast<size_t>(i) * n + j];
    return rows;
}

void guard_direct_size(const Ctx& ctx) {
    int d = ctx.choi.matrix.dim();
    if (d > 64)
        throw SolverError("direct SDP at Choi dimension " + std::to_string(d) +
                          " exceeds the dense-solver budget; channels of this size need "
                          "twirl symmetry");
}

// ---- gamma_PPT ----

GammaResult finish_gamma(const ChoiRepresentation& choi, double gamma, double c,
                         const ComplexMatrix& jm, const SolverDiag& diag) {
    // Trace preservation forces c >= 1; values a solver-epsilon below are
    // rounding on a PPT channel.
    c = std::max(c, 1.0);
    gamma = std::max(gamma, 1.0);
    GammaResult r;
    r.gamma = gamma;
    r.diag = diag;
    QpdDecomposition& q = r.qpd;
    q.c1 = c;
    q.c2 = std::max(0.0, c - 1.0);
    q.kappa = q.c1 + q.c2;

    ComplexMatrix m1 = jm;
    m1 *= 1.0 / c;
    m1.make_hermitian();
    q.choi_m1 = ChoiRepresentation{std::move(m1), choi.layout, nullptr};
    if (q.c2 > 1e-7) {
        ComplexMatrix m2 = jm;
        m2 -= choi.matrix;
        m2 *= 1.0 / q.c2;
        m2.make_hermitian();
        q.choi_m2 = ChoiRepresentation{std::move(m2), choi.layout, nullptr};
    } else {
        q.c2 = 0.0;
        q.kappa = q.c1;
    }
    return r;
}

GammaResult gamma_ppt_direct(const Ctx& ctx, const MeasureOptions& opt) {
    guard_direct_size(ctx);
    SdpProblem p;
    p.add_hermitian("JM", ctx.choi.layout, false);
    p.add_scalar("c", true);
    p.add_psd({SdpProblem::pt("JM", ctx.bb)}, ComplexMatrix::zero(ctx.choi.matrix.dim()));
    p.add_psd({SdpProblem::id("JM")}, ctx.choi.matrix);
    p.add_psd({SdpProblem::pt("JM", ctx.bb)}, ctx.j_pt);
    ComplexMatrix negi = ComplexMatrix::identity(ctx.d_in);
    negi *= -1.0;
    p.add_eq({SdpProblem::ptrace("JM", ctx.in_labels), SdpProblem::scalar_mat("c", negi)},
             ComplexMatrix::zero(ctx.d_in));
    p.objective_scalar("c", 2.0);
    p.set_offset(-1.0);

    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "gamma_ppt", opt.tol);
    return finish_gamma(ctx.choi, sol.primal_objective, sol.scalar("c"), sol.matrix("JM"),
                        diag_of(sol, false));
}

GammaResult gamma_ppt_reduced(const Ctx& ctx, const TwirlReduction& red,
                              const MeasureOptions& opt) {
    const int d = red.dim;
    SdpProblem p;
    p.add_vector("x", d, false);
    p.add_scalar("c", true);
    std::vector<std::vector<double>> t = rows_of(red.pt_map, d);
    p.add_nonneg({SdpProblem::vec_dense("x", t)}, std::vector<double>(d, 0.0));
    p.add_nonneg({SdpProblem::vec_id("x")}, red.j_diag);
    p.add_nonneg({SdpProblem::vec_dense("x", t)}, red.jt_diag);
    ComplexMatrix negi = ComplexMatrix::identity(ctx.d_in);
    negi *= -1.0;
    p.add_eq({SdpProblem::vec_combo("x", red.marg), SdpProblem::scalar_mat("c", negi)},
             ComplexMatrix::zero(ctx.d_in));
    p.objective_scalar("c", 2.0);
    p.set_offset(-1.0);

    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "gamma_ppt (reduced)", opt.tol);
    ComplexMatrix jm = lift_diagonal(red.basis, sol.vector("x"));
    return finish_gamma(ctx.choi, sol.primal_objective, sol.scalar("c"), jm, diag_of(sol, true));
}

// ---- W-hat ----

WhatResult w_hat_direct(const Ctx& ctx, const MeasureOptions& opt) {
    guard_direct_size(ctx);
    const int d = ctx.choi.matrix.dim();
    SdpProblem p;
    p.add_hermitian("JM", ctx.choi.layout, false);
    p.add_scalar("c", true);
    p.add_psd({SdpProblem::pt("JM", ctx.bb)}, ComplexMatrix::zero(d));
    p.add_psd({SdpProblem::id("JM")}, ctx.choi.matrix);
    p.add_psd({SdpProblem::scalar_mat("c", ComplexMatrix::identity(ctx.d_in)),
               SdpProblem::ptrace("JM", ctx.in_labels, -1.0)},
              ComplexMatrix::zero(ctx.d_in));
    p.objective_scalar("c", 1.0);
    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "w_hat", opt.tol);

    // dual program, solved explicitly to produce the certificate
    SdpProblem q;
    q.add_hermitian("Y", ctx.choi.layout, true);
    q.add_hermitian("R", ctx.ab_layout, true);
    ComplexMatrix neg1(1, true);
    neg1(0, 0) = -1.0;
    q.add_psd({SdpProblem::ptrace("R", {}, -1.0)}, neg1);  // 1 - tr R >= 0
    q.add_psd({SdpProblem::pt_kron_id("R", ctx.b_in, ctx.d_out),
               SdpProblem::pt("Y", ctx.bb, -1.0)},
              ComplexMatrix::zero(d));
    q.objective_matrix("Y", ctx.choi.matrix);
    q.set_maximize(true);
    SdpSolution dsol = solve(q, opt.tol);
    require_usable(dsol, "w_hat dual", opt.tol);

    WhatResult r;
    r.value = sol.primal_objective;
    r.dual_value = dsol.primal_objective;
    r.cert_y = dsol.matrix("Y");
    r.cert_r = dsol.matrix("R");
    r.diag = diag_of(sol, false);
    r.diag_dual = diag_of(dsol, false);
    return r;
}

WhatResult w_hat_reduced(const Ctx& ctx, const TwirlReduction& red, const MeasureOptions& opt) {
    const int d = red.dim;
    std::vector<std::vector<double>> t = rows_of(red.pt_map, d);
    SdpProblem p;
    p.add_vector("x", d, false);
    p.add_scalar("c", true);
    p.add_nonneg({SdpProblem::vec_dense("x", t)}, std::vector<double>(d, 0.0));
    p.add_nonneg({SdpProblem::vec_id("x")}, red.j_diag);
    p.add_psd({SdpProblem::scalar_mat("c", ComplexMatrix::identity(ctx.d_in)),
               SdpProblem::vec_combo("x", red.marg, -1.0)},
              ComplexMatrix::zero(ctx.d_in));
    p.objective_scalar("c", 1.0);
    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "w_hat (reduced)", opt.tol);

    // Reduced dual: Y diagonal in the twirl basis, R = r I / d_in.
    SdpProblem q;
    q.add_vector("y", d, true);
    q.add_scalar("r", true);
    q.add_nonneg({SdpProblem::scalar_row("r", -1.0)}, {-1.0});  // 1 - r >= 0
    std::vector<std::vector<double>> bc(d, std::vector<double>(1, 1.0 / ctx.d_in));
    q.add_nonneg({SdpProblem::vec_dense("r", bc), SdpProblem::vec_dense("y", t, -1.0)},
                 std::vector<double>(d, 0.0));
    q.objective_vector("y", red.j_diag);
    q.set_maximize(true);
    SdpSolution dsol = solve(q, opt.tol);
    require_usable(dsol, "w_hat dual (reduced)", opt.tol);

    WhatResult r;
    r.value = sol.primal_objective;
    r.dual_value = dsol.primal_objective;
    r.cert_y = lift_diagonal(red.basis, dsol.vector("y"));
    ComplexMatrix cr = ComplexMatrix::identity(ctx.d_in);
    cr *= dsol.scalar("r") / ctx.d_in;
    r.cert_r = cr;
    r.diag = diag_of(sol, true);
    r.diag_dual = diag_of(dsol, true);
    return r;
}

// ---- LN_max ----

ValueResult ln_max_direct(const Ctx& ctx, const MeasureOptions& opt) {
    guard_direct_size(ctx);
    ComplexMatrix neg_jpt = ctx.j_pt;
    neg_jpt *= -1.0;
    ComplexMatrix zin = ComplexMatrix::zero(ctx.d_in);
    ComplexMatrix eye_in = ComplexMatrix::identity(ctx.d_in);

    SdpProblem p;
    p.add_hermitian("P", ctx.choi.layout, true);
    p.add_scalar("t", true);
    p.add_psd({SdpProblem::pt("P", ctx.bb)}, ctx.j_pt);
    p.add_psd({SdpProblem::pt("P", ctx.bb)}, neg_jpt);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in),
               SdpProblem::ptrace("P", ctx.in_labels, -1.0)},
              zin);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in),
               SdpProblem::ptrace_pt("P", ctx.in_labels, ctx.b_in, -1.0)},
              zin);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in),
               SdpProblem::ptrace_pt("P", ctx.in_labels, ctx.b_in, 1.0)},
              zin);
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "ln_max", opt.tol);
    ValueResult r;
    r.value = log2_safe(sol.primal_objective);
    r.diag = diag_of(sol, false);
    return r;
}

ValueResult ln_max_reduced(const Ctx& ctx, const TwirlReduction& red, const MeasureOptions& opt) {
    const int d = red.dim;
    std::vector<std::vector<double>> t = rows_of(red.pt_map, d);
    std::vector<ComplexMatrix> marg_pt;
    marg_pt.reserve(d);
    for (const ComplexMatrix& m : red.marg)
        marg_pt.push_back(partial_transpose(m, ctx.ab_layout, ctx.b_in));

    std::vector<double> neg_jt = red.jt_diag;
    for (double& v : neg_jt) v = -v;
    ComplexMatrix zin = ComplexMatrix::zero(ctx.d_in);
    ComplexMatrix eye_in = ComplexMatrix::identity(ctx.d_in);

    SdpProblem p;
    p.add_vector("x", d, true);
    p.add_scalar("t", true);
    p.add_nonneg({SdpProblem::vec_dense("x", t)}, red.jt_diag);
    p.add_nonneg({SdpProblem::vec_dense("x", t)}, neg_jt);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in), SdpProblem::vec_combo("x", red.marg, -1.0)},
              zin);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in), SdpProblem::vec_combo("x", marg_pt, -1.0)},
              zin);
    p.add_psd({SdpProblem::scalar_mat("t", eye_in), SdpProblem::vec_combo("x", marg_pt, 1.0)},
              zin);
    p.objective_scalar("t", 1.0);
    SdpSolution sol = solve(p, opt.tol);
    require_usable(sol, "ln_max (reduced)", opt.tol);
    ValueResult r;
    r.value = log2_safe(sol.primal_objective);
    r.diag = diag_of(sol, true);
    return r;
}

// ---- max-Rains ----

RainsResult max_rains_impl(const Ctx& ctx, const std::optional<TwirlReduction>& red,
                           const MeasureOptions& opt) {
    RainsResult r;
    if (!red) guard_direct_size(ctx);

    if (!red) {
        SdpProblem p;
        p.add_hermitian("V", ctx.choi.layout, true);
        p.add_hermitian("Y", ctx.choi.layout, true);
        p.add_scalar("mu", true);
        p.add_psd({SdpProblem::pt("V", ctx.bb), SdpProblem::pt("Y", ctx.bb, -1.0)},
                  ctx.choi.matrix);
        p.add_psd({SdpProblem::scalar_mat("mu", ComplexMatrix::identity(ctx.d_in)),
                   SdpProblem::ptrace("V", ctx.in_labels, -1.0),
                   SdpProblem::ptrace("Y", ctx.in_labels, -1.0)},
                  ComplexMatrix::zero(ctx.d_in));
        p.objective_scalar("mu", 1.0);
        SdpSolution sol = solve(p, opt.tol);
        require_usable(sol, "max_rains primal", opt.tol);
        r.primal_gamma = sol.primal_objective;
        r.diag_primal = diag_of(sol, false);
    } else {
        const int d = red->dim;
        std::vector<std::vector<double>> t = rows_of(red->pt_map, d);
        SdpProblem p;
        p.add_vector("v", d, true);
        p.add_vector("y", d, true);
        p.add_scalar("mu", true);
        p.add_nonneg({SdpProblem::vec_dense("v", t), SdpProblem::vec_dense("y", t, -1.0)},
                     red->j_diag);
        p.add_psd({SdpProblem::scalar_mat("mu", ComplexMatrix::identity(ctx.d_in)),
                   SdpProblem::vec_combo("v", red->marg, -1.0),
                   SdpProblem::vec_combo("y", red->marg, -1.0)},
                  ComplexMatrix::zero(ctx.d_in));
        p.objective_scalar("mu", 1.0);
        SdpSolution sol = solve(p, opt.tol);
        require_usable(sol, "max_rains primal (reduced)", opt.tol);
        r.primal_gamma = sol.primal_objective;
        r.diag_primal = diag_of(sol, true);
    }

    if (!red) {
        const int d = ctx.choi.matrix.dim();
        SdpProblem q;
        q.add_hermitian("Yd", ctx.choi.layout, true);
        q.add_hermitian("R", ctx.ab_layout, true);
        ComplexMatrix one(1, true);
        one(0, 0) = 1.0;
        q.add_eq({SdpProblem::ptrace("R", {})}, one);
        q.add_psd({SdpProblem::kron_id("R", ctx.d_out), SdpProblem::pt("Yd", ctx.bb, -1.0)},
                  ComplexMatrix::zero(d));
        q.add_psd({SdpProblem::kron_id("R", ctx.d_out), SdpProblem::pt("Yd", ctx.bb, 1.0)},
                  ComplexMatrix::zero(d));
        q.objective_matrix("Yd", ctx.choi.matrix);
        q.set_maximize(true);
        SdpSolution sol = solve(q, opt.tol);
        require_usable(sol, "max_rains dual", opt.tol);
        r.dual_gamma = sol.primal_objective;
        r.diag_dual = diag_of(sol, false);
    } else {
        const int d = red->dim;
        std::vector<std::vector<double>> t = rows_of(red->pt_map, d);
        std::vector<std::vector<double>> bc(d, std::vector<double>(1, 1.0 / ctx.d_in));
        SdpProblem q;
        q.add_vector("y", d, true);
        q.add_scalar("r", true);
        q.add_eq_vec({SdpProblem::scalar_row("r")}, {1.0});
        q.add_nonneg({SdpProblem::vec_dense("r", bc), SdpProblem::vec_dense("y", t, -1.0)},
                     std::vector<double>(d, 0.0));
        q.add_nonneg({SdpProblem::vec_dense("r", bc), SdpProblem::vec_dense("y", t, 1.0)},
                     std::vector<double>(d, 0.0));
        q.objective_vector("y", red->j_diag);
        q.set_maximize(true);
        SdpSolution sol = solve(q, opt.tol);
        require_usable(sol, "max_rains dual (reduced)", opt.tol);
        r.dual_gamma = sol.primal_objective;
        r.diag_dual = diag_of(sol, true);
    }

    if (std::abs(r.primal_gamma - r.dual_gamma) > 1e-4 * std::max(1.0, std::abs(r.primal_gamma)))
        throw SolverError("max_rains primal/dual disagree: " + std::to_string(r.primal_gamma) +
                          " vs " + std::to_string(r.dual_gamma));
    r.value = log2_safe(r.primal_gamma);
    return r;
}

}  // namespace

void QpdDecomposition::validate(const ChoiRepresentation& channel) const {
    if (std::abs(c1 - c2 - 1.0) > 1e-7)
        throw ContractError("QPD: c1 = c2 + 1 violated (c1=" + std::to_string(c1) +
                            ", c2=" + std::to_string(c2) + ")");
    choi_m1.validate(1e-6);
    if (!psd_within(partial_transpose(choi_m1.matrix, choi_m1.layout, choi_m1.b_labels()), 1e-7))
        throw ContractError("QPD: M1 partial transpose is not PSD");
    ComplexMatrix recon = choi_m1.matrix;
    recon *= c1;
    if (choi_m2) {
        choi_m2->validate(1e-6);
        if (!psd_within(partial_transpose(choi_m2->matrix, choi_m2->layout, choi_m2->b_labels()),
                        1e-7))
            throw ContractError("QPD: M2 partial transpose is not PSD");
        ComplexMatrix m2 = choi_m2->matrix;
        m2 *= c2;
        recon -= m2;
    }
    recon -= channel.matrix;
    recon.make_hermitian();
    if (spectral_norm(recon) > 1e-6 * std::max(1.0, channel.matrix.max_abs()))
        throw ContractError("QPD: c1 M1 - c2 M2 does not reconstruct the channel");
}

GammaResult gamma_ppt(const ChoiRepresentation& choi, const MeasureOptions& opt) {
    Ctx ctx(choi);
    auto red = maybe_reduce(choi, opt);
    return red ? gamma_ppt_reduced(ctx, *red, opt) : gamma_ppt_direct(ctx, opt);
}

ValueResult ln_max(const ChoiRepresentation& choi, const MeasureOptions& opt) {
    Ctx ctx(choi);
    auto red = maybe_reduce(choi, opt);
    return red ? ln_max_reduced(ctx, *red, opt) : ln_max_direct(ctx, opt);
}

RainsResult max_rains(const ChoiRepresentation& choi, const MeasureOptions& opt) {
    Ctx ctx(choi);
    auto red = maybe_reduce(choi, opt);
    return max_rains_impl(ctx, red, opt);
}

WhatResult w_hat(const ChoiRepresentation& choi, const MeasureOptions& opt) {
    Ctx ctx(choi);
    auto red = maybe_reduce(choi, opt);
    return red ? w_hat_reduced(ctx, *red, opt) : w_hat_direct(ctx, opt);
}

CertificateCheck verify_certificate(const ChoiRepresentation& choi, const ComplexMatrix& y,
                                    const ComplexMatrix& r) {
    CertificateCheck out;
    Ctx ctx(choi);
    if (y.dim() != choi.matrix.dim() || r.dim() != ctx.d_in)
        throw LayoutError("certificate dimensions do not match the channel");
    if (!y.is_hermitian(1e-9) || !r.is_hermitian(1e-9))
        throw ContractError("certificate matrices must be Hermitian");

    double tr_r = r.trace().real();
    if (tr_r > 1.0 + 1e-9) {
        out.violated = "tr(R) <= 1";
        out.violation = tr_r - 1.0;
        return out;
    }
    ComplexMatrix rh = r;
    rh.make_hermitian();
    double r_min = min_eigenvalue(rh);
    if (r_min < -1e-9) {
        out.violated = "R >= 0";
        out.violation = -r_min;
        return out;
    }
    ComplexMatrix yh = y;
    yh.make_hermitian();
    double y_min = min_eigenvalue(yh);
    if (y_min < -1e-9) {
        out.violated = "Y >= 0";
        out.violation = -y_min;
        return out;
    }
    ComplexMatrix lhs = kron(partial_transpose(rh, ctx.ab_layout, ctx.b_in),
                             ComplexMatrix::identity(ctx.d_out));
    lhs -= partial_transpose(yh, choi.layout, ctx.bb);
    lhs.make_hermitian();
    double lmi_min = min_eigenvalue(lhs);
    if (lmi_min < -1e-9) {
        out.violated = "Y^{T_BB'} <= R^{T_B} ox I";
        out.violation = -lmi_min;
        return out;
    }
    out.feasible = true;
    out.bound = hs_inner(yh, choi.matrix).real();
    return out;
}

EffectiveGammaBound effective_gamma_bound(const ChoiRepresentation& choi, int n,
                                          const MeasureOptions& opt, int dimension_cap) {
    if (n < 1) throw ContractError("effective_gamma_bound: n must be >= 1");
    EffectiveGammaBound out;
    out.n = n;
    double ln = ln_max(choi, opt).value;
    double rm = max_rains(choi, opt).value;
    out.from_ln_max = std::pow(std::max(std::pow(2.0, n * ln) - 1.0, 1.0), 1.0 / n);
    out.from_max_rains = std::pow(std::max(std::pow(2.0, n * rm + 1.0) - 1.0, 1.0), 1.0 / n);
    out.bound = std::max(out.from_ln_max, out.from_max_rains);
    double dn = std::pow(static_cast<double>(choi.matrix.dim()), n);
    if (dn <= dimension_cap) {
        ChoiRepresentation par = tensor_parallel(choi, n, dimension_cap);
        GammaResult g = gamma_ppt(par, opt);
        out.direct = std::pow(g.gamma, 1.0 / n);
    }
    return out;
}

MeasureReport compute_report(const ChoiRepresentation& choi, const std::string& id,
                             const MeasureOptions& opt) {
    MeasureReport rep;
    rep.channel_id = id;
    GammaResult g = gamma_ppt(choi, opt);
    rep.gamma_ppt = g.gamma;
    rep.diag_gamma = g.diag;
    ValueResult l = ln_max(choi, opt);
    rep.ln_max = l.value;
    rep.diag_ln = l.diag;
    RainsResult rr = max_rains(choi, opt);
    rep.max_rains = rr.value;
    rep.diag_rains = rr.diag_primal;
    WhatResult w = w_hat(choi, opt);
    rep.w_hat = w.value;
    rep.diag_what = w.diag;
    rep.bound_from_ln_max = std::pow(2.0, rep.ln_max);
    rep.bound_from_max_rains = std::pow(2.0, rep.max_rains);
    return rep;
}

void MeasureReport::check_chain(double tol) const {
    if (gamma_ppt < 1.0 - 1e-9) throw ContractError("chain: gamma_ppt < 1");
    if (gamma_ppt < 2.0 * w_hat - 1.0 - tol)
        throw ContractError("chain: gamma_ppt >= 2 w_hat - 1 violated");
    if (w_hat < bound_from_max_rains - tol)
        throw ContractError("chain: w_hat >= Gamma violated");
    if (gamma_ppt < bound_from_ln_max - 1.0 - tol)
        throw ContractError("chain: gamma_ppt >= 2^LN - 1 violated");
}

namespace {

json diag_json(const SolverDiag& d) {
    return json{{"status", d.status},
                {"gap", d.gap},
                {"rel_gap", d.rel_gap},
                {"primal_residual", d.primal_residual},
                {"dual_residual", d.dual_residual},
                {"iterations", d.iterations},
                {"reduced", d.reduced}};
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string MeasureReport::to_json() const {
    json j;
    j["channel_id"] = channel_id;
    j["gamma_ppt"] = gamma_ppt;
    j["ln_max"] = ln_max;
    j["max_rains"] = max_rains;
    j["w_hat"] = w_hat;
    j["bound_from_ln_max"] = bound_from_ln_max;
    j["bound_from_max_rains"] = bound_from_max_rains;
    j["solver"] = {{"gamma_ppt", diag_json(diag_gamma)},
                   {"ln_max", diag_json(diag_ln)},
                   {"max_rains", diag_json(diag_rains)},
                   {"w_hat", diag_json(diag_what)}};
    return j.dump(2);
}

std::string MeasureReport::csv_header() {
    return "parameter,gamma_ppt,ln_max,max_rains,w_hat,bound_ln_max,bound_max_rains,"
           "gap_ppt_solver,iterations";
}

std::string MeasureReport::csv_row(double parameter) const {
    std::string row;
    row += fmt9(parameter);
    row += "," + fmt9(gamma_ppt);
    row += "," + fmt9(ln_max);
    row += "," + fmt9(max_rains);
    row += "," + fmt9(w_hat);
    row += "," + fmt9(bound_from_ln_max);
    row += "," + fmt9(bound_from_max_rains);
    row += "," + fmt9(diag_gamma.gap);
    row += "," + std::to_string(diag_gamma.iterations);
    return row;
}

GammaTotBound gamma_tot_bound(const std::vector<MeasureReport>& reports) {
    if (reports.empty()) throw ContractError("gamma_tot_bound: empty report list");
    GammaTotBound out;
    for (const MeasureReport& r : reports) {
        double factor = std::max(std::pow(2.0, r.ln_max) - 1.0, 1.0);
        out.factors.push_back(factor);
        out.proxy_product *= factor * factor;
        out.gamma_product *= r.gamma_ppt * r.gamma_ppt;
    }
    return out;
}

}  // namespace qknit
