#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qknit/channel.hpp"
#include "qknit/sdp.hpp"

namespace qknit {

// Two-term quasi-probability decomposition N = c1 M1 - c2 M2 with PPT
// certificates for both terms.  A PPT channel has a one-term decomposition
// (c2 = 0, no M2).
struct QpdDecomposition {
    double c1 = 1.0;
    double c2 = 0.0;
    double kappa = 1.0;  // c1 + c2
    ChoiRepresentation choi_m1;
    std::optional<ChoiRepresentation> choi_m2;

    // c1 = c2 + 1, reconstruction matches the channel, and both terms have
    // PSD partial transposes.  Throws ContractError on violation.
    void validate(const ChoiRepresentation& channel) const;
};

struct SolverDiag {
    std::string status;
    double gap = 0.0;
    double rel_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    bool reduced = false;  // solved via the symmetry-reduced program
};

struct MeasureOptions {
    double tol = 1e-7;       // solver relative-gap target
    bool allow_twirl = true; // use symmetry reduction when available
};

struct GammaResult {
    double gamma = 1.0;
    QpdDecomposition qpd;
    SolverDiag diag;
};

struct ValueResult {
    double value = 0.0;  // log2 domain
    SolverDiag diag;
};

struct RainsResult {
    double value = 0.0;        // log2(Gamma), from the primal
    double primal_gamma = 1.0; // Gamma from the primal program
    double dual_gamma = 1.0;   // Gamma from the dual program
    SolverDiag diag_primal, diag_dual;
};

struct WhatResult {
    double value = 1.0;  // W-hat (linear domain)
    double dual_value = 1.0;
    ComplexMatrix cert_y;  // dual certificate
    ComplexMatrix cert_r;
    SolverDiag diag, diag_dual;
};

// gamma_PPT: min 2c-1 over PPT-pair decompositions (SDP), plus the
// reconstructed two-term QPD.
GammaResult gamma_ppt(const ChoiRepresentation& choi, const MeasureOptions& opt = {});

// Max-logarithmic negativity (log2 of the sandwich SDP value).
ValueResult ln_max(const ChoiRepresentation& choi, const MeasureOptions& opt = {});

// Bidirectional max-Rains information, computed from both the primal and the
// dual program; the two must agree within 1e-4 or a consistency error is
// thrown.
RainsResult max_rains(const ChoiRepresentation& choi, const MeasureOptions& opt = {});

// The PPT-relaxation intermediate quantity with its dual certificate (Y, R).
WhatResult w_hat(const ChoiRepresentation& choi, const MeasureOptions& opt = {});

struct CertificateCheck {
    bool feasible = false;
    double bound = 0.0;           // tr(Y J) when feasible
    std::string violated;         // name of the violated constraint
    double violation = 0.0;       // its magnitude
};

// Checks (Y, R) against the dual feasibility conditions and returns the
// certified lower bound tr(Y J) when they hold.
CertificateCheck verify_certificate(const ChoiRepresentation& choi, const ComplexMatrix& y,
                                    const ComplexMatrix& r);

struct EffectiveGammaBound {
    int n = 1;
    double from_ln_max = 1.0;    // (2^{n LN} - 1)^{1/n}
    double from_max_rains = 1.0; // (2^{n R + 1} - 1)^{1/n}
    double bound = 1.0;          // max of the two
    std::optional<double> direct; // gamma_PPT(N^{ox n})^{1/n} when it fits the cap
};

EffectiveGammaBound effective_gamma_bound(const ChoiRepresentation& choi, int n,
                                          const MeasureOptions& opt = {},
                                          int dimension_cap = 4096);

// All computed bounds for one channel.
struct MeasureReport {
    std::string channel_id;
    double gamma_ppt = 1.0;
    double ln_max = 0.0;
    double max_rains = 0.0;
    double w_hat = 1.0;
    double bound_from_ln_max = 1.0;
    double bound_from_max_rains = 1.0;
    SolverDiag diag_gamma, diag_ln, diag_rains, diag_what;

    std::string to_json() const;
    // Fixed column order: parameter, gamma_ppt, ln_max, max_rains, w_hat,
    // bound_ln_max, bound_max_rains, gap_ppt_solver, iterations.
    static std::string csv_header();
    std::string csv_row(double parameter) const;

    // Lemma-chain invariants (gamma >= 2W-1 >= 2*Gamma-1, gamma >= 2^LN - 1,
    // gamma >= 1); throws ContractError outside tolerance.
    void check_chain(double tol = 1e-5) const;
};

MeasureReport compute_report(const ChoiRepresentation& choi, const std::string& id,
                             const MeasureOptions& opt = {});

struct GammaTotBound {
    double proxy_product = 1.0;   // prod max(2^LN - 1, 1)^2
    double gamma_product = 1.0;   // prod gamma_ppt^2
    std::vector<double> factors;  // per-gate proxy factors max(2^LN - 1, 1)
};

GammaTotBound gamma_tot_bound(const std::vector<MeasureReport>& reports);

}  // namespace qknit
