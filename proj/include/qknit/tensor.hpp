#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qknit {

using cxd = std::complex<double>;

// Thrown when a label set does not match a layout, or factor dims disagree
// with a matrix dimension.
struct LayoutError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an operation's precondition on the value itself is violated
// (non-Hermitian input, non-unitary gate, non-density operator, ...).
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dense square complex matrix, row-major.  The Hermitian flag is set by
// construction paths that guarantee it and re-validated (tolerance 1e-12)
// before eigendecompositions.
class ComplexMatrix {
  public:
    ComplexMatrix() : dim_(0) {}
    explicit ComplexMatrix(int dim, bool hermitian = false)
        : dim_(dim), herm_(hermitian), a_(static_cast<size_t>(dim) * dim) {}

    static ComplexMatrix identity(int dim);
    static ComplexMatrix zero(int dim) { return ComplexMatrix(dim, true); }
    // |i><j| on a dim-dimensional space.
    static ComplexMatrix unit(int dim, int i, int j);

    int dim() const { return dim_; }
    size_t size() const { return a_.size(); }

    cxd& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
    const cxd& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    cxd* data() { return a_.data(); }
    const cxd* data() const { return a_.data(); }

    bool hermitian_flag() const { return herm_; }
    void set_hermitian_flag(bool h) { herm_ = h; }
    // Max |M[i][j] - conj(M[j][i])|.
    double hermiticity_defect() const;
    bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }
    // Symmetrize in place: M <- (M + M^dagger)/2, sets the flag.
    void make_hermitian();

    cxd trace() const;
    double max_abs() const;
    ComplexMatrix dagger() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cxd s);
    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(cxd s, ComplexMatrix a) { return a *= s; }

  private:
    int dim_;
    bool herm_ = false;
    std::vector<cxd> a_;
};

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
// tr(a^dagger b), the Hilbert-Schmidt inner product.
cxd hs_inner(const ComplexMatrix& a, const ComplexMatrix& b);

enum class Side { A, B };
enum class Role { Input, Output };

struct Factor {
    std::string label;
    int dim = 0;
    Side side = Side::A;
    Role role = Role::Input;
};

// Ordered tensor factors annotating a matrix; row-major lexicographic index
// convention in layout order.  The Choi space ordering is fixed globally as
// A x B x A' x B'.
class SystemLayout {
  public:
    SystemLayout() = default;
    explicit SystemLayout(std::vector<Factor> factors);

    int total_dim() const;
    size_t count() const { return factors_.size(); }
    const Factor& factor(size_t i) const { return factors_[i]; }
    const std::vector<Factor>& factors() const { return factors_; }

    // Index of the factor with this label; throws LayoutError if absent.
    size_t position(const std::string& label) const;
    bool has_label(const std::string& label) const;
    std::vector<size_t> positions(const std::vector<std::string>& labels) const;

    SystemLayout restricted(const std::vector<std::string>& keep) const;
    SystemLayout permuted(const std::vector<size_t>& order) const;

    std::vector<std::string> labels() const;
    // Labels with the given role (in layout order).
    std::vector<std::string> labels_with(Role role) const;
    std::vector<std::string> labels_with(Side side, Role role) const;

    void check_matches(const ComplexMatrix& m) const;

  private:
    std::vector<Factor> factors_;
};

// --- operations over layouts ---

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Reduced operator on the kept factors, in layout order restricted to keep.
ComplexMatrix partial_trace(const ComplexMatrix& m, const SystemLayout& layout,
                            const std::vector<std::string>& keep);

// Transposes the indices of the selected factors only.
ComplexMatrix partial_transpose(const ComplexMatrix& m, const SystemLayout& layout,
                                const std::vector<std::string>& transpose);

// Reorders tensor factors; order is a permutation of 0..n-1 giving, for each
// output slot, the input factor that lands there.
ComplexMatrix permute_factors(const ComplexMatrix& m, const SystemLayout& layout,
                              const std::vector<size_t>& order);

// Index map of the same permutation: component i of a vector moves to
// position map[i].
std::vector<int> permute_index_map(const SystemLayout& layout, const std::vector<size_t>& order);

// min eig >= -tol check; fast Cholesky path with an eigenvalue fallback.
bool psd_within(const ComplexMatrix& m, double tol);

// Ascending real eigenvalues.  Computed by symmetric tridiagonalization and
// implicit QL on the real embedding [[Re,-Im],[Im,Re]]; the doubled spectrum
// of the embedding is collapsed back.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m);

// Full eigensystem; columns of `vectors` are orthonormal eigenvectors
// matching `values` (ascending).
struct EigenSystem {
    std::vector<double> values;
    ComplexMatrix vectors;
};
EigenSystem hermitian_eigensystem(const ComplexMatrix& m);

double spectral_norm(const ComplexMatrix& m);
double min_eigenvalue(const ComplexMatrix& m);

// Real symmetric embedding of a Hermitian matrix (2*dim x 2*dim, row-major).
std::vector<double> embed_real(const ComplexMatrix& m);

// In-place dense real-symmetric eigendecomposition (LAPACK dsyev); a is
// n x n row-major, overwritten with eigenvectors in rows when jobz' is true.
void dsyev_inplace(std::vector<double>& a, int n, std::vector<double>& w, bool vectors);

}  // namespace qknit
