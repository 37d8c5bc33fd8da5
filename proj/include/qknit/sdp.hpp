#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qknit/tensor.hpp"

namespace qknit {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Semidefinite program over Hermitian matrix variables, scalars and vectors.
// Constraints are linear-matrix inequalities, elementwise inequalities and
// equalities; linear maps cover identity, scalar multiplication, partial
// trace, partial transpose and Kronecker-with-identity, plus one level of
// composition (partial trace followed by partial transpose, partial
// transpose followed by Kronecker).
//
// Complex Hermitian data is embedded into real symmetric form internally
// ([[Re,-Im],[Im,Re]]); problems whose constants are all real are compiled
// directly over real symmetric variables, which halves the coordinate count.
class SdpProblem {
  public:
    struct Term {
        enum class Kind {
            MatId,        // coeff * X
            MatPt,        // coeff * X^{T_S}
            MatPtrace,    // coeff * tr_S(X)   (keep-labels given)
            MatPtracePt,  // coeff * (tr_S(X))^{T_S'}
            MatKron,      // coeff * (X ox I_k)
            MatPtKron,    // coeff * (X^{T_S} ox I_k)
            ScalarMat,    // coeff * s * C
            VecCombo,     // coeff * sum_a x_a M_a
            VecDense,     // coeff * A x   (vector rows)
            VecId,        // coeff * x     (vector rows)
            ScalarRow,    // coeff * s     (a 1-entry vector row)
        };
        Kind kind;
        std::string var;
        double coeff = 1.0;
        std::vector<std::string> labels1;         // pt set or keep set
        std::vector<std::string> labels2;         // second-stage pt set
        int kron_dim = 1;
        ComplexMatrix cmat;                       // ScalarMat
        std::vector<ComplexMatrix> combo;         // VecCombo
        std::vector<std::vector<double>> dense;   // VecDense (rows)
    };

    // --- variables ---
    void add_hermitian(const std::string& name, const SystemLayout& layout, bool psd_cone);
    void add_scalar(const std::string& name, bool nonneg);
    void add_vector(const std::string& name, int n, bool nonneg);

    // --- objective (minimized; use set_maximize to flip) ---
    void objective_scalar(const std::string& name, double coeff);
    void objective_matrix(const std::string& name, const ComplexMatrix& c);
    void objective_vector(const std::string& name, const std::vector<double>& c);
    void set_offset(double v) { offset_ = v; }
    void set_maximize(bool m) { maximize_ = m; }

    // --- term builders ---
    static Term id(const std::string& var, double coeff = 1.0);
    static Term pt(const std::string& var, const std::vector<std::string>& labels,
                   double coeff = 1.0);
    static Term ptrace(const std::string& var, const std::vector<std::string>& keep,
                       double coeff = 1.0);
    static Term ptrace_pt(const std::string& var, const std::vector<std::string>& keep,
                          const std::vector<std::string>& pt_labels, double coeff = 1.0);
    static Term kron_id(const std::string& var, int right_dim, double coeff = 1.0);
    static Term pt_kron_id(const std::string& var, const std::vector<std::string>& labels,
                           int right_dim, double coeff = 1.0);
    static Term scalar_mat(const std::string& var, const ComplexMatrix& c, double coeff = 1.0);
    static Term vec_combo(const std::string& var, std::vector<ComplexMatrix> mats,
                          double coeff = 1.0);
    static Term vec_dense(const std::string& var, std::vector<std::vector<double>> rows,
                          double coeff = 1.0);
    static Term vec_id(const std::string& var, double coeff = 1.0);
    static Term scalar_row(const std::string& var, double coeff = 1.0);

    // --- constraints ---
    // sum(terms) - c >= 0 (Loewner order).
    void add_psd(std::vector<Term> terms, const ComplexMatrix& c);
    // sum(terms) = c.
    void add_eq(std::vector<Term> terms, const ComplexMatrix& c);
    // sum(terms) - rhs >= 0 elementwise (vector-valued terms).
    void add_nonneg(std::vector<Term> terms, const std::vector<double>& rhs);
    // sum(terms) = rhs elementwise.
    void add_eq_vec(std::vector<Term> terms, const std::vector<double>& rhs);

    std::string dump_json() const;

    // internals shared with the solver
    struct VarInfo {
        std::string name;
        enum class Kind { Hermitian, Scalar, Vector } kind;
        bool cone = false;  // PSD / nonneg
        int dim = 0;        // matrix dim or vector length
        SystemLayout layout;
    };
    struct Constraint {
        enum class Kind { Psd, EqMat, Nonneg, EqVec } kind;
        std::vector<Term> terms;
        ComplexMatrix cmat;
        std::vector<double> cvec;
    };
    const std::vector<VarInfo>& variables() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return cons_; }
    double offset() const { return offset_; }
    bool maximize() const { return maximize_; }
    const VarInfo& var(const std::string& name) const;
    const ComplexMatrix* objective_matrix_for(const std::string& name) const;
    double objective_scalar_for(const std::string& name) const;
    const std::vector<double>* objective_vector_for(const std::string& name) const;

  private:
    std::vector<VarInfo> vars_;
    std::vector<Constraint> cons_;
    std::map<std::string, double> obj_scalar_;
    std::map<std::string, ComplexMatrix> obj_matrix_;
    std::map<std::string, std::vector<double>> obj_vector_;
    double offset_ = 0.0;
    bool maximize_ = false;
};

struct SdpSolution {
    enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };
    Status status = Status::NumericalFailure;
    // For minimization: dual_objective <= optimum <= primal_objective up to
    // the reported residuals.  For maximization the roles are mirrored:
    // primal_objective is the value of the returned feasible point and
    // dual_objective the outer bound.
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double rel_gap = 0.0;
    double primal_residual = 0.0;  // worst constraint violation (spectral)
    double dual_residual = 0.0;
    int iterations = 0;

    std::map<std::string, ComplexMatrix> matrices;
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> vectors;

    const ComplexMatrix& matrix(const std::string& name) const;
    double scalar(const std::string& name) const;
    const std::vector<double>& vector(const std::string& name) const;

    static const char* status_name(Status s);
};

struct SolveOptions {
    double tol = 1e-7;        // relative duality gap target
    int max_iterations = 200;
    bool verbose = false;
};

SdpSolution solve(const SdpProblem& problem, const SolveOptions& options = {});
SdpSolution solve(const SdpProblem& problem, double tol);

// Real symmetric embedding bookkeeping for one Hermitian matrix: the
// embedding has each eigenvalue of H twice, and objective/constraint values
// are preserved once the duplication is accounted for.  Exposed for tests.
struct ComplexEmbedding {
    int complex_dim;
    std::vector<double> embedded;  // (2d)^2 row-major real symmetric
};
ComplexEmbedding embed_complex(const ComplexMatrix& h);
ComplexMatrix unembed_complex(const std::vector<double>& e, int complex_dim);

}  // namespace qknit
