#include "qknit/qpdsim.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace qknit {

void EstimationTask::validate() const {
    if (!(delta > 0.0 && delta < 1.0) || !(epsilon > 0.0 && epsilon < 1.0))
        throw ContractError("delta and epsilon must lie in (0, 1)");
    if (!observable.is_hermitian(1e-9))
        throw ContractError("observable must be Hermitian");
    ComplexMatrix o = observable;
    o.make_hermitian();
    if (spectral_norm(o) > 1.0 + 1e-9)
        throw ContractError("observable spectral norm must be <= 1");
    if (!input_state.is_hermitian(1e-9) ||
        std::abs(input_state.trace().real() - 1.0) > 1e-9)
        throw ContractError("input state must be a density operator");
    ComplexMatrix rho = input_state;
    rho.make_hermitian();
    if (!psd_within(rho, 1e-9)) throw ContractError("input state must be PSD");
    if (input_state.dim() != qpd.choi_m1.dim_in())
        throw DimensionError("input state dimension does not match the decomposition");
    if (observable.dim() != qpd.choi_m1.dim_out())
        throw DimensionError("observable dimension does not match the decomposition");
    // decomposition invariants that do not need the original channel
    if (std::abs(qpd.c1 - qpd.c2 - 1.0) > 1e-7)
        throw ContractError("QPD: c1 = c2 + 1 violated");
    qpd.choi_m1.validate(1e-6);
    if (!psd_within(partial_transpose(qpd.choi_m1.matrix, qpd.choi_m1.layout,
                                      qpd.choi_m1.b_labels()),
                    1e-7))
        throw ContractError("QPD: M1 partial transpose is not PSD");
    if (qpd.choi_m2) {
        qpd.choi_m2->validate(1e-6);
        if (!psd_within(partial_transpose(qpd.choi_m2->matrix, qpd.choi_m2->layout,
                                          qpd.choi_m2->b_labels()),
                        1e-7))
            throw ContractError("QPD: M2 partial transpose is not PSD");
    }
}

long long required_samples(double kappa, double delta, double epsilon) {
    if (kappa < 1.0) throw ContractError("kappa must be >= 1");
    if (!(delta > 0.0 && delta < 1.0) || !(epsilon > 0.0 && epsilon < 1.0))
        throw ContractError("delta and epsilon must lie in (0, 1)");
    double base = std::ceil(2.0 * std::log(2.0 / epsilon) / (delta * delta));
    return static_cast<long long>(std::ceil(kappa * kappa * base - 1e-9));
}

EstimationOutcome estimate_expectation(const EstimationTask& task) {
    task.validate();

    ComplexMatrix rho = task.input_state;
    rho.make_hermitian();
    ComplexMatrix obs = task.observable;
    obs.make_hermitian();

    const double v1 = hs_inner(obs, apply_channel(task.qpd.choi_m1, rho, true)).real();
    const double v2 = task.qpd.choi_m2
                          ? hs_inner(obs, apply_channel(*task.qpd.choi_m2, rho, true)).real()
                          : 0.0;
    const double kappa = task.qpd.kappa;
    const double truth = task.qpd.c1 * v1 - task.qpd.c2 * v2;

    const long long n = required_samples(kappa, task.delta, task.epsilon);
    const double p1 = task.qpd.c1 / kappa;

    SplitMix64 rng(task.seed);
    long long n1 = 0;
    for (long long i = 0; i < n; ++i)
        if (rng.uniform_at(static_cast<uint64_t>(i)) < p1) ++n1;

    // Counts determine the sum exactly, so partitioned workers reproduce it.
    const double sum = static_cast<double>(n1) * (kappa * v1) -
                       static_cast<double>(n - n1) * (kappa * v2);
    EstimationOutcome out;
    out.estimate = sum / static_cast<double>(n);
    out.samples_used = n;
    out.truth = truth;
    out.abs_error = std::abs(out.estimate - truth);
    out.seed = task.seed;
    return out;
}

CoverageResult run_trials(const EstimationTask& task, int trials) {
    if (trials < 1) throw ContractError("trials must be >= 1");
    CoverageResult res;
    res.trials = trials;
    SplitMix64 master(task.seed);
    for (int t = 0; t < trials; ++t) {
        EstimationTask sub = task;
        sub.seed = master.split(static_cast<uint64_t>(t)).seed;
        EstimationOutcome out = estimate_expectation(sub);
        res.truth = out.truth;
        res.samples_per_trial = out.samples_used;
        if (out.abs_error <= task.delta) ++res.within_delta;
    }
    res.coverage = static_cast<double>(res.within_delta) / trials;
    return res;
}

std::string EstimationOutcome::to_json() const {
    json j;
    j["estimate"] = estimate;
    j["samples_used"] = samples_used;
    j["truth"] = truth;
    j["abs_error"] = abs_error;
    j["seed"] = seed;
    j["rng"] = "splitmix64";
    return j.dump(2);
}

std::string CoverageResult::to_json() const {
    json j;
    j["trials"] = trials;
    j["within_delta"] = within_delta;
    j["coverage"] = coverage;
    j["truth"] = truth;
    j["samples_per_trial"] = samples_per_trial;
    j["rng"] = "splitmix64";
    return j.dump(2);
}

}  // namespace qknit
