#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qknit/tensor.hpp"

namespace qknit {

// Abelian symmetry data attached to a channel whose Choi matrix commutes
// with a known group of local unitaries (e.g. Pauli conjugation pairs of a
// Clifford gate).  Columns of `basis` form a common eigenbasis of the group;
// consumers re-verify diagonality before relying on it.
struct TwirlSymmetry {
    ComplexMatrix basis;
};

// Unnormalized Choi matrix of a bipartite channel (trace = d_A * d_B)
// together with its subsystem layout.  Factor order is fixed globally as
// A-side inputs, B-side inputs, A-side outputs, B-side outputs.
struct ChoiRepresentation {
    ComplexMatrix matrix;
    SystemLayout layout;
    std::shared_ptr<const TwirlSymmetry> symmetry;  // optional

    int dim_in() const;    // d_A * d_B
    int dim_out() const;   // d_A' * d_B'
    int dim_in_a() const;
    int dim_in_b() const;
    int dim_out_a() const;
    int dim_out_b() const;

    std::vector<std::string> input_labels() const { return layout.labels_with(Role::Input); }
    std::vector<std::string> output_labels() const { return layout.labels_with(Role::Output); }
    // B-side labels, inputs and outputs (the partial-transpose set).
    std::vector<std::string> b_labels() const;

    ComplexMatrix normalized() const;  // matrix / (d_A * d_B)

    // Checks Hermiticity, positivity (min eig >= -tol), the identity marginal
    // on the inputs and the total trace; throws ContractError on violation.
    void validate(double tol = 1e-9) const;

    std::string to_json() const;
    static ChoiRepresentation from_json(const std::string& text);
};

enum class GateName { Identity, Cnot, Swap, Iswap, Toffoli, Cswap, Custom };

// Partition of gate qubits between the two parties, e.g. "1|23".
struct Cut {
    std::vector<Side> side_of_qubit;

    static Cut parse(const std::string& text, int num_qubits);
    std::string to_string() const;
    int qubits() const { return static_cast<int>(side_of_qubit.size()); }
    void check(int num_qubits) const;
};

struct GateSpec {
    GateName name = GateName::Custom;
    Cut cut;
    std::optional<ComplexMatrix> unitary;  // required for Custom

    static GateSpec library(GateName name, const Cut& cut);
    static GateSpec library(const std::string& name, const std::string& cut_text = "");
    static GateSpec custom(const ComplexMatrix& u, const Cut& cut);

    int num_qubits() const;
    ComplexMatrix unitary_matrix() const;
};

GateName gate_name_from_string(const std::string& s);
std::string to_string(GateName g);

struct NoiseModel {
    enum class Kind { Depolarizing, AmplitudeDamping } kind = Kind::Depolarizing;
    double parameter = 0.0;          // p or gamma, in [0,1]
    std::vector<int> target_qubits;  // empty = all output qubits (depolarizing)

    static NoiseModel depolarizing(double p, std::vector<int> targets = {});
    static NoiseModel amplitude_damping(double gamma, int target_qubit);
};

// Rank-1 unnormalized Choi matrix of a unitary gate, re-indexed into the
// global A x B x A' x B' ordering per the cut.  Clifford gates get
// TwirlSymmetry metadata attached.
ChoiRepresentation choi_from_unitary(const GateSpec& gate);

// N(rho) = tr_in[(rho^T ox I_out) J]; rho must be a density operator on the
// channel input unless `any_operator` is set (linear extension, used for
// composition and tests).
ComplexMatrix apply_channel(const ChoiRepresentation& choi, const ComplexMatrix& rho,
                            bool any_operator = false);

// Choi of the channel followed by the noise on its outputs.
ChoiRepresentation attach_noise(const ChoiRepresentation& choi, const NoiseModel& noise);

// Choi of N^{ox n} with factors regrouped to the global ordering.
ChoiRepresentation tensor_parallel(const ChoiRepresentation& choi, int n,
                                   int dimension_cap = 4096);

// op^{ox n} on the input (or output) space of the channel, re-indexed the
// same way tensor_parallel regroups those factors; used to feed per-copy
// states and observables to a parallel channel.
ComplexMatrix tensor_parallel_operator(const ComplexMatrix& op, const SystemLayout& single_side,
                                       int n);

// Choi of second o first.
ChoiRepresentation compose(const ChoiRepresentation& second, const ChoiRepresentation& first);

// Conjugate a channel by local unitaries: input factors by u_in[k], output
// factors by u_out[k] (dims must match factor dims).  Used for the
// local-unitary invariance checks.
ChoiRepresentation conjugate_local(const ChoiRepresentation& choi,
                                   const std::vector<ComplexMatrix>& u_in,
                                   const std::vector<ComplexMatrix>& u_out);

}  // namespace qknit
