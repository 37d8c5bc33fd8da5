#pragma once

#include <optional>
#include <vector>

#include "qknit/channel.hpp"
#include "qknit/tensor.hpp"

namespace qknit {

// Single-qubit Pauli matrices I, X, Y, Z.
const ComplexMatrix& pauli(int which);

// All 4^k Pauli strings on k qubits, index interpreted base-4, qubit 0 most
// significant.
std::vector<ComplexMatrix> pauli_strings(int k);

// If U W U^dag is a Pauli string up to a +-1 sign for every string W, returns
// the conjugation images; otherwise nullopt.  This is a Clifford check.
std::optional<std::vector<ComplexMatrix>> clifford_images(const ComplexMatrix& u, int k);

// Common eigenbasis of a family of commuting Hermitian matrices (columns).
// Starts from a fixed-seed random combination and refines degenerate
// clusters until every family member is diagonal to `tol`.
ComplexMatrix joint_eigenbasis(const std::vector<ComplexMatrix>& family, double tol = 1e-9);

// Everything the symmetry-reduced programs need about one channel:
// the diagonal coordinates of J and of its partial transpose, the action of
// the partial transpose on diagonal coordinates, and the input-marginal
// matrices of the eigenprojectors.
struct TwirlReduction {
    int dim = 0;                      // Choi dimension D
    std::vector<double> j_diag;       // diag(Q^dag J Q)
    std::vector<double> jt_diag;      // diag coords of J^{T_BB'}
    std::vector<double> pt_map;       // D x D row-major: x -> diag coords of PT
    std::vector<ComplexMatrix> marg;  // tr_{A'B'}(q_a q_a^dag), each d_AB x d_AB
    ComplexMatrix basis;              // Q, for lifting solutions back
    double defect = 0.0;              // worst off-diagonal residual seen
};

// Builds the reduction for a channel carrying TwirlSymmetry; returns nullopt
// when the channel has no symmetry data or verification fails (off-diagonal
// parts above tol), in which case callers fall back to the direct solve.
std::optional<TwirlReduction> reduce_by_symmetry(const ChoiRepresentation& choi,
                                                 double tol = 1e-8);

// Lift diagonal coordinates back to a full matrix Q diag(x) Q^dag.
ComplexMatrix lift_diagonal(const ComplexMatrix& basis, const std::vector<double>& x);

}  // namespace qknit
