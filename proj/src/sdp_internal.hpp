#pragma once

#include <vector>

#include "qknit/sdp.hpp"

namespace qknit::detail {

struct SparseCol {
    std::vector<std::pair<int, double>> entries;  // (row, value), rows block-local
};

struct ConeBlock {
    bool psd = true;  // else a batch of nonneg rows
    int n = 0;        // matrix dim (post-embedding) for psd; row count otherwise
    int rows = 0;     // svec size for psd, n for nonneg
    std::vector<SparseCol> cols;
    std::vector<double> h;
};

struct EqBlock {
    int rows = 0;
    std::vector<SparseCol> cols;
    std::vector<double> b;
};

struct VarSlot {
    std::string name;
    SdpProblem::VarInfo::Kind kind;
    int dim = 0;
    bool complex_coords = false;
    int offset = 0;
    int count = 0;
    SystemLayout layout;
};

struct Compiled {
    int n_x = 0;
    std::vector<double> c;
    double offset = 0.0;
    double sign = 1.0;  // -1 when the user problem is a maximization
    EqBlock eq;
    std::vector<ConeBlock> cones;
    std::vector<VarSlot> slots;
    bool real_mode = false;
};

Compiled compile(const SdpProblem& p);

// svec index helpers (lower triangle, column-major, sqrt(2) off-diagonal).
inline int svec_size(int n) { return n * (n + 1) / 2; }
int svec_index(int n, int i, int j);  // requires i >= j

// Dense real symmetric matrix <-> svec.
void mat_to_svec(const std::vector<double>& m, int n, double* out);
void svec_to_mat(const double* v, int n, std::vector<double>& m);

SdpSolution solve_compiled(const Compiled& cp, const SdpProblem& p, const SolveOptions& opt);

}  // namespace qknit::detail
