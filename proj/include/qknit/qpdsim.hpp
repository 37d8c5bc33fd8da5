#pragma once

#include <cstdint>
#include <string>

#include "qknit/measures.hpp"

namespace qknit {

// Counter-based pseudo-random stream (SplitMix64): sample i of stream `seed`
// is a pure function of (seed, i), so worker partitions of the index range
// merge to exactly the sequential result.
struct SplitMix64 {
    uint64_t seed;
    explicit SplitMix64(uint64_t s) : seed(s) {}
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    uint64_t at(uint64_t i) const { return mix(seed + (i + 1) * 0x9e3779b97f4a7c15ULL); }
    double uniform_at(uint64_t i) const {
        return static_cast<double>(at(i) >> 11) * (1.0 / 9007199254740992.0);
    }
    // Stream for an independent sub-experiment (trial index, worker, ...).
    SplitMix64 split(uint64_t which) const {
        return SplitMix64(mix(seed ^ (0x5851f42d4c957f2dULL * (which + 1))));
    }
};

struct EstimationTask {
    QpdDecomposition qpd;
    ComplexMatrix input_state;  // density operator on the channel input
    ComplexMatrix observable;   // Hermitian on the output, spectral norm <= 1
    double delta = 0.05;        // target additive error
    double epsilon = 0.05;      // failure probability
    uint64_t seed = 0;

    void validate() const;
};

// Hoeffding count for single-shot outcomes in [-kappa, kappa], two-sided:
// kappa^2 * ceil(2 ln(2/eps) / delta^2), rounded up.
long long required_samples(double kappa, double delta, double epsilon);

struct EstimationOutcome {
    double estimate = 0.0;
    long long samples_used = 0;
    double truth = 0.0;  // computed exactly from the decomposition
    double abs_error = 0.0;
    uint64_t seed = 0;

    std::string to_json() const;
};

// Draws terms j in {1,2} with probability c_j / kappa and averages the
// per-sample values kappa * sign_j * tr(O M_j(rho)); unbiased for
// tr(O N(rho)) by linearity.
EstimationOutcome estimate_expectation(const EstimationTask& task);

struct CoverageResult {
    int trials = 0;
    int within_delta = 0;
    double coverage = 0.0;
    double truth = 0.0;
    long long samples_per_trial = 0;

    std::string to_json() const;
};

// Repeats the estimation over independently seeded trials and reports the
// fraction with |estimate - truth| <= delta.
CoverageResult run_trials(const EstimationTask& task, int trials);

}  // namespace qknit
