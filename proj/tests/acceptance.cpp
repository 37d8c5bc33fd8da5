// Acceptance suite: runs every verification criterion end to end and prints
// one PASS/FAIL line per criterion.  Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "qknit/measures.hpp"
#include "qknit/qpdsim.hpp"
#include "test_util.hpp"

using namespace qknit;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GateData {
    std::string name;
    ChoiRepresentation choi;
    GammaResult gamma;
    ValueResult ln;
    RainsResult rains;
    WhatResult what;
    double gamma_seconds = 0.0;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    MeasureOptions opt;  // solver defaults: tol 1e-7

    // ---- library measurements (used by criteria 1, 3, 4, 8, 9) ----
    std::vector<std::pair<std::string, std::string>> library = {
        {"identity", ""}, {"cnot", ""}, {"swap", ""},
        {"iswap", ""},    {"toffoli", "1|23"}, {"cswap", "1|23"}};
    std::vector<GateData> gates;
    for (const auto& [name, cut] : library) {
        GateData g;
        g.name = cut.empty() ? name : name + "[" + cut + "]";
        g.choi = choi_from_unitary(GateSpec::library(name, cut));
        auto t0 = clock::now();
        g.gamma = gamma_ppt(g.choi, opt);
        g.gamma_seconds = seconds_since(t0);
        g.ln = ln_max(g.choi, opt);
        g.rains = max_rains(g.choi, opt);
        g.what = w_hat(g.choi, opt);
        gates.push_back(std::move(g));
    }
    auto gate_by = [&](const std::string& n) -> const GateData& {
        for (const GateData& g : gates)
            if (g.name == n) return g;
        throw std::runtime_error("no gate " + n);
    };

    // ---- criterion 1: gate golden values ----
    {
        const double tol = 1e-5;
        bool pass = true;
        std::string detail;
        for (const auto& [n, want] : std::map<std::string, double>{
                 {"identity", 1.0}, {"cnot", 3.0}, {"swap", 7.0}, {"iswap", 7.0}}) {
            const GateData& g = gate_by(n);
            bool ok = std::abs(g.gamma.gamma - want) <= tol && g.gamma_seconds <= 5.0;
            pass = pass && ok;
            detail += n + "=" + fmt(g.gamma.gamma) + "(" + fmt(g.gamma_seconds) + "s) ";
        }
        report(1, pass, "gamma_ppt " + detail);
    }

    // ---- criterion 2: parallel-cut law on two CNOT copies ----
    {
        auto t0 = clock::now();
        ChoiRepresentation two = tensor_parallel(gate_by("cnot").choi, 2);
        GammaResult g2 = gamma_ppt(two, opt);
        g2.qpd.validate(two);
        double secs = seconds_since(t0);
        bool pass = std::abs(g2.gamma - 7.0) <= 1e-4 && secs <= 600.0;
        report(2, pass,
               "gamma_ppt(cnot x cnot) = " + fmt(g2.gamma) + " (dim 256, " + fmt(secs) + "s)");
    }

    // ---- criterion 3: ordering chain on the whole library ----
    {
        const double tol = 1e-5;
        bool pass = true;
        std::string detail;
        for (const GateData& g : gates) {
            double gamma = g.gamma.gamma;
            double what = g.what.value;
            double rains_gamma = g.rains.primal_gamma;
            double ln_bound = std::pow(2.0, g.ln.value);
            bool ok = gamma >= 2.0 * what - 1.0 - tol && what >= rains_gamma - tol &&
                      gamma >= ln_bound - 1.0 - tol && gamma >= 1.0 - 1e-9;
            if (!ok) detail += g.name + "!chain ";
            pass = pass && ok;
        }
        report(3, pass, detail.empty() ? "gamma >= 2W-1 >= 2Gamma-1, gamma >= 2^LN-1 on 6 gates"
                                       : detail);
    }

    // ---- criterion 4: CNOT single-copy measures ----
    {
        const GateData& g = gate_by("cnot");
        bool pass = std::abs(g.ln.value - 1.0) <= 1e-5 &&
                    std::abs(g.rains.value - 1.0) <= 1e-5 &&
                    std::abs(std::pow(2.0, g.ln.value) - 2.0) <= 1e-4 &&
                    std::abs(std::pow(2.0, g.rains.value) - 2.0) <= 1e-4 &&
                    std::abs(g.what.value - 2.0) <= 1e-5;
        report(4, pass, "LN=" + fmt(g.ln.value) + " R=" + fmt(g.rains.value) +
                            " W=" + fmt(g.what.value) + " bounds=" +
                            fmt(std::pow(2.0, g.ln.value)) + "," +
                            fmt(std::pow(2.0, g.rains.value)));
    }

    // ---- criteria 5 + 6: noise sweeps (collected for criterion 9 too) ----
    std::vector<RainsResult> all_rains;
    for (const GateData& g : gates) all_rains.push_back(g.rains);

    bool c5_pass = true;
    double c5_secs = 0.0;
    {
        auto t0 = clock::now();
        const ChoiRepresentation& cx = gate_by("cnot").choi;
        double prev_g = 1e300, prev_l = 1e300, prev_r = 1e300;
        for (int i = 0; i <= 20; ++i) {
            double p = 0.05 * i;
            ChoiRepresentation noisy =
                p == 0.0 ? cx : attach_noise(cx, NoiseModel::depolarizing(p));
            GammaResult gg = gamma_ppt(noisy, opt);
            ValueResult ll = ln_max(noisy, opt);
            RainsResult rr = max_rains(noisy, opt);
            all_rains.push_back(rr);
            double bl = std::pow(2.0, ll.value), br = std::pow(2.0, rr.value);
            if (gg.gamma > prev_g + 1e-7 || bl > prev_l + 1e-7 || br > prev_r + 1e-7)
                c5_pass = false;
            if (p >= 0.9 - 1e-12) {
                if (std::abs(gg.gamma - 1.0) > 1e-3 || std::abs(bl - 1.0) > 1e-3 ||
                    std::abs(br - 1.0) > 1e-3)
                    c5_pass = false;
            }
            prev_g = gg.gamma;
            prev_l = bl;
            prev_r = br;
        }
        c5_secs = seconds_since(t0);
        if (c5_secs > 180.0) c5_pass = false;
        report(5, c5_pass,
               "noisy-cnot sweep, 21 points, monotone + plateau (" + fmt(c5_secs) + "s)");
    }

    {
        bool pass = true;
        const ChoiRepresentation& sw = gate_by("swap").choi;
        for (int i = 0; i <= 20; ++i) {
            double gdamp = 0.05 * i;
            ChoiRepresentation damped =
                gdamp == 0.0 ? sw : attach_noise(sw, NoiseModel::amplitude_damping(gdamp, 2));
            GammaResult gg = gamma_ppt(damped, opt);
            ValueResult ll = ln_max(damped, opt);
            RainsResult rr = max_rains(damped, opt);
            all_rains.push_back(rr);
            if (ll.value < rr.value - 1e-6) pass = false;
            if (gdamp > 0.0 + 1e-12 && gdamp < 0.8 - 1e-12) {
                double bl = std::pow(2.0, ll.value), br = std::pow(2.0, rr.value);
                if (!(gg.gamma > bl && gg.gamma > br)) pass = false;
            }
        }
        report(6, pass, "damped-swap sweep, 21 points, LN >= R and a strict gap on (0,0.8)");
    }

    // ---- criterion 7: three-qubit gates and both cuts ----
    {
        GammaResult tof2 =
            gamma_ppt(choi_from_unitary(GateSpec::library("toffoli", "12|3")), opt);
        const GammaResult& tof1 = gate_by("toffoli[1|23]").gamma;
        GammaResult cs2 = gamma_ppt(choi_from_unitary(GateSpec::library("cswap", "12|3")), opt);
        const GammaResult& cs1 = gate_by("cswap[1|23]").gamma;
        double ratio = cs1.gamma / cs2.gamma;
        bool ratio_ok = std::abs(ratio - 0.5) <= 2e-2 * 0.5;
        bool pass = std::abs(tof1.gamma - 3.0) <= 1e-4 && std::abs(tof2.gamma - 3.0) <= 1e-4 &&
                    ratio_ok;
        std::string detail = "toffoli " + fmt(tof1.gamma) + "/" + fmt(tof2.gamma) + ", cswap " +
                             fmt(cs1.gamma) + "/" + fmt(cs2.gamma) + " ratio " + fmt(ratio) +
                             " (want 0.5 +- 2e-2 rel)";
        if (!ratio_ok)
            detail += "; both gamma values are duality-certified (each meets its 2*Gamma-1 "
                      "lower bound with equality), so the gamma ratio is 3/7; the halving is "
                      "exact for the exponential bounds 2^LN (2 vs 4), not for gamma";
        report(7, pass, detail);
    }

    // ---- criterion 8: bundled analytic certificates ----
    {
        const ChoiRepresentation& cx = gate_by("cnot").choi;
        ComplexMatrix y1 = cx.matrix;
        y1 *= 1.0 / 8.0;
        ComplexMatrix r1 = ComplexMatrix::identity(4);
        r1 *= 0.25;
        CertificateCheck a = verify_certificate(cx, y1, r1);

        const ChoiRepresentation& sw = gate_by("swap").choi;
        ComplexMatrix y2 = sw.matrix;
        y2 *= 0.25;
        CertificateCheck b = verify_certificate(sw, y2, r1);

        bool pass = a.feasible && std::abs(a.bound - 2.0) <= 1e-9 && b.feasible &&
                    std::abs(b.bound - 4.0) <= 1e-9;
        report(8, pass, "cnot bound " + fmt(a.bound) + ", swap bound " + fmt(b.bound));
    }

    // ---- criterion 9: primal-dual agreement everywhere ----
    {
        double worst = 0.0;
        for (const RainsResult& r : all_rains)
            worst = std::max(worst,
                             std::abs(r.primal_gamma - r.dual_gamma) /
                                 std::max(1.0, std::abs(r.primal_gamma)));
        bool pass = worst <= 1e-5;
        report(9, pass, "max primal/dual Gamma mismatch " + fmt(worst) + " over " +
                            std::to_string(all_rains.size()) + " solves");
    }

    // ---- criterion 10: additivity properties at 256 dimensions ----
    {
        ChoiRepresentation two = tensor_parallel(gate_by("cnot").choi, 2);
        RainsResult r2 = max_rains(two, opt);
        double g1 = gate_by("cnot").rains.primal_gamma;
        ValueResult l2 = ln_max(two, opt);
        double l1 = gate_by("cnot").ln.value;
        bool pass = std::abs(r2.primal_gamma - g1 * g1) <= 1e-4 &&
                    l2.value >= 2.0 * l1 - 1e-4;
        report(10, pass, "Gamma(cnot x cnot)=" + fmt(r2.primal_gamma) + " vs " + fmt(g1 * g1) +
                             "; LN 2-copy " + fmt(l2.value) + " >= " + fmt(2.0 * l1) + " - 1e-4");
    }

    // ---- criterion 11: sampling contract ----
    {
        EstimationTask task;
        task.qpd = gate_by("cnot").gamma.qpd;
        ComplexMatrix plus0(4, true);
        plus0(0, 0) = plus0(0, 2) = plus0(2, 0) = plus0(2, 2) = 0.5;
        task.input_state = plus0;
        ComplexMatrix z(2, true);
        z(0, 0) = 1.0;
        z(1, 1) = -1.0;
        task.observable = kron(z, z);
        task.delta = 0.05;
        task.epsilon = 0.05;
        task.seed = 42;
        CoverageResult cov = run_trials(task, 200);
        long long n1 = required_samples(1.0, 0.05, 0.05);
        long long n3 = required_samples(3.0, 0.05, 0.05);
        bool pass = cov.coverage >= 0.92 && n3 == 9 * n1;
        report(11, pass, "coverage " + fmt(cov.coverage) + " over 200 trials, samples " +
                             std::to_string(n3) + " = 9 x " + std::to_string(n1));
    }

    // ---- criterion 12: solver corpus against the grid oracle ----
    {
        testutil::Rng rng(4242);
        bool pass = true;
        double worst = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            int m = 2 + static_cast<int>(rng.uniform() * 2);
            int dim = 3 + static_cast<int>(rng.uniform() * 6);
            bool cplx = inst % 2 == 0;
            testutil::LmiInstance li;
            li.c.resize(m);
            for (int k = 0; k < m; ++k) li.c[k] = rng.sym();
            li.a.push_back(ComplexMatrix::identity(dim));
            for (int k = 1; k < m; ++k) {
                ComplexMatrix a = testutil::random_hermitian(rng, dim, cplx);
                a *= 1.0 / std::max(1.0, spectral_norm(a));
                li.a.push_back(a);
            }
            ComplexMatrix b = testutil::random_hermitian(rng, dim, cplx);
            b *= 1.5 / std::max(1.0, spectral_norm(b));
            li.b = b;

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
            SdpSolution sol = solve(p, 1e-7);
            if (sol.status != SdpSolution::Status::Optimal) {
                pass = false;
                continue;
            }
            double oracle = testutil::grid_minimize(li);
            double diff = std::abs(sol.primal_objective - oracle) /
                          std::max(1.0, std::abs(oracle));
            worst = std::max(worst, diff);
            if (diff > 1e-4) pass = false;
        }
        report(12, pass, "20 random SDPs vs grid oracle, worst relative gap " + fmt(worst));
    }

    std::printf("%s: %d of 12 criteria passed\n", failures == 0 ? "OK" : "FAILURES",
                12 - failures);
    return failures;
}
