#include "qknit/sdp.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "sdp_internal.hpp"

using json = nlohmann::json;

namespace qknit {

namespace {

constexpr double kRealTol = 1e-13;
const double kSqrt2 = std::sqrt(2.0);

bool matrix_is_real(const ComplexMatrix& m) {
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
            if (std::abs(m(i, j).imag()) > kRealTol) return false;
    return true;
}

}  // namespace

void SdpProblem::add_hermitian(const std::string& name, const SystemLayout& layout,
                               bool psd_cone) {
    VarInfo v;
    v.name = name;
    v.kind = VarInfo::Kind::Hermitian;
    v.cone = psd_cone;
    v.dim = layout.total_dim();
    v.layout = layout;
    vars_.push_back(std::move(v));
    if (psd_cone) add_psd({id(name)}, ComplexMatrix::zero(layout.total_dim()));
}

void SdpProblem::add_scalar(const std::string& name, bool nonneg) {
    VarInfo v;
    v.name = name;
    v.kind = VarInfo::Kind::Scalar;
    v.cone = nonneg;
    v.dim = 1;
    vars_.push_back(std::move(v));
    if (nonneg) add_nonneg({scalar_row(name)}, {0.0});
}

void SdpProblem::add_vector(const std::string& name, int n, bool nonneg) {
    VarInfo v;
    v.name = name;
    v.kind = VarInfo::Kind::Vector;
    v.cone = nonneg;
    v.dim = n;
    vars_.push_back(std::move(v));
    if (nonneg) add_nonneg({vec_id(name)}, std::vector<double>(n, 0.0));
}

void SdpProblem::objective_scalar(const std::string& name, double coeff) {
    obj_scalar_[name] += coeff;
}
void SdpProblem::objective_matrix(const std::string& name, const ComplexMatrix& c) {
    auto it = obj_matrix_.find(name);
    if (it == obj_matrix_.end())
        obj_matrix_.emplace(name, c);
    else
        it->second += c;
}
void SdpProblem::objective_vector(const std::string& name, const std::vector<double>& c) {
    auto& v = obj_vector_[name];
    if (v.empty()) v.assign(c.size(), 0.0);
    for (size_t i = 0; i < c.size(); ++i) v[i] += c[i];
}

SdpProblem::Term SdpProblem::id(const std::string& var, double coeff) {
    Term t;
    t.kind = Term::Kind::MatId;
    t.var = var;
    t.coeff = coeff;
    return t;
}
SdpProblem::Term SdpProblem::pt(const std::string& var, const std::vector<std::string>& labels,
                                double coeff) {
    Term t;
    t.kind = Term::Kind::MatPt;
    t.var = var;
    t.coeff = coeff;
    t.labels1 = labels;
    return t;
}
SdpProblem::Term SdpProblem::ptrace(const std::string& var, const std::vector<std::string>& keep,
                                    double coeff) {
    Term t;
    t.kind = Term::Kind::MatPtrace;
    t.var = var;
    t.coeff = coeff;
    t.labels1 = keep;
    return t;
}
SdpProblem::Term SdpProblem::ptrace_pt(const std::string& var,
                                       const std::vector<std::string>& keep,
                                       const std::vector<std::string>& pt_labels, double coeff) {
    Term t;
    t.kind = Term::Kind::MatPtracePt;
    t.var = var;
    t.coeff = coeff;
    t.labels1 = keep;
    t.labels2 = pt_labels;
    return t;
}
SdpProblem::Term SdpProblem::kron_id(const std::string& var, int right_dim, double coeff) {
    Term t;
    t.kind = Term::Kind::MatKron;
    t.var = var;
    t.coeff = coeff;
    t.kron_dim = right_dim;
    return t;
}
SdpProblem::Term SdpProblem::pt_kron_id(const std::string& var,
                                        const std::vector<std::string>& labels, int right_dim,
                                        double coeff) {
    Term t;
    t.kind = Term::Kind::MatPtKron;
    t.var = var;
    t.coeff = coeff;
    t.labels1 = labels;
    t.kron_dim = right_dim;
    return t;
}
SdpProblem::Term SdpProblem::scalar_mat(const std::string& var, const ComplexMatrix& c,
                                        double coeff) {
    Term t;
    t.kind = Term::Kind::ScalarMat;
    t.var = var;
    t.coeff = coeff;
    t.cmat = c;
    return t;
}
SdpProblem::Term SdpProblem::vec_combo(const std::string& var, std::vector<ComplexMatrix> mats,
                                       double coeff) {
    Term t;
    t.kind = Term::Kind::VecCombo;
    t.var = var;
    t.coeff = coeff;
    t.combo = std::move(mats);
    return t;
}
SdpProblem::Term SdpProblem::vec_dense(const std::string& var,
                                       std::vector<std::vector<double>> rows, double coeff) {
    Term t;
    t.kind = Term::Kind::VecDense;
    t.var = var;
    t.coeff = coeff;
    t.dense = std::move(rows);
    return t;
}
SdpProblem::Term SdpProblem::vec_id(const std::string& var, double coeff) {
    Term t;
    t.kind = Term::Kind::VecId;
    t.var = var;
    t.coeff = coeff;
    return t;
}
SdpProblem::Term SdpProblem::scalar_row(const std::string& var, double coeff) {
    Term t;
    t.kind = Term::Kind::ScalarRow;
    t.var = var;
    t.coeff = coeff;
    return t;
}

void SdpProblem::add_psd(std::vector<Term> terms, const ComplexMatrix& c) {
    Constraint con;
    con.kind = Constraint::Kind::Psd;
    con.terms = std::move(terms);
    con.cmat = c;
    cons_.push_back(std::move(con));
}
void SdpProblem::add_eq(std::vector<Term> terms, const ComplexMatrix& c) {
    Constraint con;
    con.kind = Constraint::Kind::EqMat;
    con.terms = std::move(terms);
    con.cmat = c;
    cons_.push_back(std::move(con));
}
void SdpProblem::add_nonneg(std::vector<Term> terms, const std::vector<double>& rhs) {
    Constraint con;
    con.kind = Constraint::Kind::Nonneg;
    con.terms = std::move(terms);
    con.cvec = rhs;
    cons_.push_back(std::move(con));
}
void SdpProblem::add_eq_vec(std::vector<Term> terms, const std::vector<double>& rhs) {
    Constraint con;
    con.kind = Constraint::Kind::EqVec;
    con.terms = std::move(terms);
    con.cvec = rhs;
    cons_.push_back(std::move(con));
}

const SdpProblem::VarInfo& SdpProblem::var(const std::string& name) const {
    for (const VarInfo& v : vars_)
        if (v.name == name) return v;
    throw SolverError("unknown variable '" + name + "'");
}

const ComplexMatrix* SdpProblem::objective_matrix_for(const std::string& name) const {
    auto it = obj_matrix_.find(name);
    return it == obj_matrix_.end() ? nullptr : &it->second;
}
double SdpProblem::objective_scalar_for(const std::string& name) const {
    auto it = obj_scalar_.find(name);
    return it == obj_scalar_.end() ? 0.0 : it->second;
}
const std::vector<double>* SdpProblem::objective_vector_for(const std::string& name) const {
    auto it = obj_vector_.find(name);
    return it == obj_vector_.end() ? nullptr : &it->second;
}

SdpSolution solve(const SdpProblem& problem, const SolveOptions& options) {
    detail::Compiled cp = detail::compile(problem);
    return detail::solve_compiled(cp, problem, options);
}

SdpSolution solve(const SdpProblem& problem, double tol) {
    SolveOptions opt;
    opt.tol = tol;
    return solve(problem, opt);
}

const ComplexMatrix& SdpSolution::matrix(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end()) throw SolverError("no matrix value for '" + name + "'");
    return it->second;
}
double SdpSolution::scalar(const std::string& name) const {
    auto it = scalars.find(name);
    if (it == scalars.end()) throw SolverError("no scalar value for '" + name + "'");
    return it->second;
}
const std::vector<double>& SdpSolution::vector(const std::string& name) const {
    auto it = vectors.find(name);
    if (it == vectors.end()) throw SolverError("no vector value for '" + name + "'");
    return it->second;
}

const char* SdpSolution::status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

ComplexEmbedding embed_complex(const ComplexMatrix& h) {
    ComplexEmbedding e;
    e.complex_dim = h.dim();
    e.embedded = embed_real(h);
    return e;
}

ComplexMatrix unembed_complex(const std::vector<double>& e, int d) {
    ComplexMatrix m(d);
    const int n2 = 2 * d;
    auto at = [&](int i, int j) { return e[static_cast<size_t>(i) * n2 + j]; };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            m(i, j) = cxd(0.5 * (at(i, j) + at(d + i, d + j)),
                          0.5 * (at(d + i, j) - at(i, d + j)));
    m.make_hermitian();
    return m;
}

namespace detail {

int svec_index(int n, int i, int j) {
    // column-major lower triangle: column j holds rows j..n-1
    return j * n - j * (j - 1) / 2 + (i - j);
}

void mat_to_svec(const std::vector<double>& m, int n, double* out) {
    int p = 0;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i, ++p)
            out[p] = m[static_cast<size_t>(i) * n + j] * (i == j ? 1.0 : kSqrt2);
}

void svec_to_mat(const double* v, int n, std::vector<double>& m) {
    m.assign(static_cast<size_t>(n) * n, 0.0);
    int p = 0;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i, ++p) {
            double val = v[p] * (i == j ? 1.0 : 1.0 / kSqrt2);
            m[static_cast<size_t>(i) * n + j] = val;
            m[static_cast<size_t>(j) * n + i] = val;
        }
}

namespace {

// Coordinate basis of a Hermitian variable.  Real mode: svec order over the
// lower triangle.  Complex mode: same order, off-diagonals contribute a
// (real, imaginary) coordinate pair.
ComplexMatrix coord_basis(int d, bool complex_coords, int k) {
    if (!complex_coords) {
        int p = 0;
        for (int j = 0; j < d; ++j)
            for (int i = j; i < d; ++i, ++p)
                if (p == k) {
                    ComplexMatrix b(d, true);
                    if (i == j)
                        b(i, i) = 1.0;
                    else
                        b(i, j) = b(j, i) = 1.0 / kSqrt2;
                    return b;
                }
    } else {
        int p = 0;
        for (int j = 0; j < d; ++j)
            for (int i = j; i < d; ++i) {
                if (i == j) {
                    if (p == k) {
                        ComplexMatrix b(d, true);
                        b(i, i) = 1.0;
                        return b;
                    }
                    ++p;
                } else {
                    if (p == k) {
                        ComplexMatrix b(d, true);
                        b(i, j) = 1.0 / kSqrt2;
                        b(j, i) = 1.0 / kSqrt2;
                        return b;
                    }
                    ++p;
                    if (p == k) {
                        ComplexMatrix b(d, true);
                        b(i, j) = cxd(0, 1.0 / kSqrt2);
                        b(j, i) = cxd(0, -1.0 / kSqrt2);
                        return b;
                    }
                    ++p;
                }
            }
    }
    throw SolverError("coordinate index out of range");
}

int coord_count(int d, bool complex_coords) { return complex_coords ? d * d : svec_size(d); }

// Inner product of a Hermitian matrix against the coordinate basis
// (recovers coordinates from a matrix).
std::vector<double> coords_of(const ComplexMatrix& m, bool complex_coords) {
    const int d = m.dim();
    std::vector<double> out;
    out.reserve(coord_count(d, complex_coords));
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) {
            if (i == j) {
                out.push_back(m(i, i).real());
            } else {
                out.push_back(kSqrt2 * m(i, j).real());
                if (complex_coords) out.push_back(kSqrt2 * m(i, j).imag());
            }
        }
    return out;
}

ComplexMatrix matrix_from_coords(const double* x, int d, bool complex_coords) {
    ComplexMatrix m(d, true);
    int p = 0;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) {
            if (i == j) {
                m(i, i) = x[p++];
            } else {
                double re = x[p++] / kSqrt2;
                double im = complex_coords ? x[p++] / kSqrt2 : 0.0;
                m(i, j) = cxd(re, im);
                m(j, i) = cxd(re, -im);
            }
        }
    return m;
}

ComplexMatrix apply_mat_term(const SdpProblem::Term& t, const SystemLayout& layout,
                             const ComplexMatrix& x) {
    using K = SdpProblem::Term::Kind;
    ComplexMatrix r;
    switch (t.kind) {
        case K::MatId: r = x; break;
        case K::MatPt: r = partial_transpose(x, layout, t.labels1); break;
        case K::MatPtrace: r = partial_trace(x, layout, t.labels1); break;
        case K::MatPtracePt: {
            ComplexMatrix red = partial_trace(x, layout, t.labels1);
            r = partial_transpose(red, layout.restricted(t.labels1), t.labels2);
            break;
        }
        case K::MatKron: r = kron(x, ComplexMatrix::identity(t.kron_dim)); break;
        case K::MatPtKron: {
            ComplexMatrix px = partial_transpose(x, layout, t.labels1);
            r = kron(px, ComplexMatrix::identity(t.kron_dim));
            break;
        }
        default: throw SolverError("term kind is not a matrix map");
    }
    if (t.coeff != 1.0) r *= t.coeff;
    return r;
}

}  // namespace

Compiled compile(const SdpProblem& p) {
    Compiled cp;
    cp.sign = p.maximize() ? -1.0 : 1.0;

    // Real mode when every constant matrix in play is real.
    bool real_mode = true;
    for (const auto& con : p.constraints()) {
        if (con.cmat.dim() > 0 && !matrix_is_real(con.cmat)) real_mode = false;
        for (const auto& t : con.terms) {
            if (t.kind == SdpProblem::Term::Kind::ScalarMat && !matrix_is_real(t.cmat))
                real_mode = false;
            if (t.kind == SdpProblem::Term::Kind::VecCombo)
                for (const auto& m : t.combo)
                    if (!matrix_is_real(m)) real_mode = false;
        }
    }
    for (const auto& v : p.variables())
        if (v.kind == SdpProblem::VarInfo::Kind::Hermitian) {
            const ComplexMatrix* c = p.objective_matrix_for(v.name);
            if (c && !matrix_is_real(*c)) real_mode = false;
        }
    cp.real_mode = real_mode;

    // Variable slots.
    int off = 0;
    for (const auto& v : p.variables()) {
        VarSlot s;
        s.name = v.name;
        s.kind = v.kind;
        s.dim = v.dim;
        s.layout = v.layout;
        s.complex_coords =
            v.kind == SdpProblem::VarInfo::Kind::Hermitian ? !real_mode : false;
        s.offset = off;
        s.count = v.kind == SdpProblem::VarInfo::Kind::Hermitian
                      ? coord_count(v.dim, s.complex_coords)
                      : v.dim;
        off += s.count;
        cp.slots.push_back(std::move(s));
    }
    cp.n_x = off;

    auto slot_of = [&](const std::string& name) -> const VarSlot& {
        for (const VarSlot& s : cp.slots)
            if (s.name == name) return s;
        throw SolverError("unknown variable '" + name + "'");
    };

    // Objective.
    cp.c.assign(cp.n_x, 0.0);
    cp.offset = cp.sign * p.offset();
    for (const VarSlot& s : cp.slots) {
        if (s.kind == SdpProblem::VarInfo::Kind::Scalar) {
            cp.c[s.offset] += cp.sign * p.objective_scalar_for(s.name);
        } else if (s.kind == SdpProblem::VarInfo::Kind::Vector) {
            const std::vector<double>* v = p.objective_vector_for(s.name);
            if (v)
                for (int i = 0; i < s.count; ++i) cp.c[s.offset + i] += cp.sign * (*v)[i];
        } else {
            const ComplexMatrix* cm = p.objective_matrix_for(s.name);
            if (cm) {
                std::vector<double> co = coords_of(*cm, s.complex_coords);
                for (int i = 0; i < s.count; ++i) cp.c[s.offset + i] += cp.sign * co[i];
            }
        }
    }

    // Constraints.
    // Matrix equality: one row per Hermitian coordinate of the constraint
    // space (the real embedding would produce linearly dependent rows).
    auto add_matrix_eq = [&](const SdpProblem::Constraint& con) {
        int cdim = con.cmat.dim();
        if (cdim == 0) throw SolverError("matrix constraint requires a constant (use zero())");
        const bool cc = !real_mode;
        int rows = coord_count(cdim, cc);
        int base = cp.eq.rows;
        cp.eq.rows += rows;
        cp.eq.cols.resize(cp.n_x);
        cp.eq.b.resize(cp.eq.rows, 0.0);

        auto add_column = [&](int col, const ComplexMatrix& m) {
            if (m.dim() != cdim) throw SolverError("constraint term dimension mismatch");
            std::vector<double> co = coords_of(m, cc);
            for (int r = 0; r < rows; ++r)
                if (co[r] != 0.0) {
                    if (col < 0)
                        cp.eq.b[base + r] = co[r];
                    else
                        cp.eq.cols[col].entries.push_back({base + r, co[r]});
                }
        };
        for (const auto& t : con.terms) {
            const VarSlot& s = slot_of(t.var);
            using K = SdpProblem::Term::Kind;
            if (t.kind == K::ScalarMat) {
                ComplexMatrix m = t.cmat;
                m *= t.coeff;
                add_column(s.offset, m);
            } else if (t.kind == K::VecCombo) {
                if (static_cast<int>(t.combo.size()) != s.count)
                    throw SolverError("vec_combo size mismatch");
                for (int a = 0; a < s.count; ++a) {
                    ComplexMatrix m = t.combo[a];
                    m *= t.coeff;
                    add_column(s.offset + a, m);
                }
            } else {
                for (int k = 0; k < s.count; ++k) {
                    ComplexMatrix b = coord_basis(s.dim, s.complex_coords, k);
                    ComplexMatrix m = apply_mat_term(t, s.layout, b);
                    add_column(s.offset + k, m);
                }
            }
        }
        add_column(-1, con.cmat);
    };

    auto add_matrix_block = [&](const SdpProblem::Constraint& con, bool is_psd) {
        if (!is_psd) {
            add_matrix_eq(con);
            return;
        }
        // Cone blocks are built in the conic "G convention" (cols = -L, h = -C).
        int cdim = con.cmat.dim();
        const bool embed = !real_mode;
        const double gsign = -1.0;

        // Probe dimension if no constant given.
        if (cdim == 0) throw SolverError("matrix constraint requires a constant (use zero())");
        int bn = embed ? 2 * cdim : cdim;
        int rows = svec_size(bn);

        ConeBlock blk;
        blk.psd = true;
        blk.n = bn;
        blk.rows = rows;
        blk.cols.assign(cp.n_x, {});
        blk.h.assign(rows, 0.0);

        std::vector<double> scratch;
        auto add_column = [&](int col, const ComplexMatrix& m, double sgn) {
            if (m.dim() != cdim) throw SolverError("constraint term dimension mismatch");
            if (embed) {
                scratch = embed_real(m);
            } else {
                scratch.assign(static_cast<size_t>(cdim) * cdim, 0.0);
                for (int i = 0; i < cdim; ++i)
                    for (int j = 0; j < cdim; ++j)
                        scratch[static_cast<size_t>(i) * cdim + j] = m(i, j).real();
            }
            int pr = 0;
            for (int j = 0; j < bn; ++j)
                for (int i = j; i < bn; ++i, ++pr) {
                    double v = scratch[static_cast<size_t>(i) * bn + j] * (i == j ? 1.0 : kSqrt2);
                    if (v != 0.0) {
                        if (col < 0)
                            blk.h[pr] += sgn * v;
                        else
                            blk.cols[col].entries.push_back({pr, sgn * v});
                    }
                }
        };

        for (const auto& t : con.terms) {
            const VarSlot& s = slot_of(t.var);
            using K = SdpProblem::Term::Kind;
            if (t.kind == K::ScalarMat) {
                ComplexMatrix m = t.cmat;
                m *= t.coeff;
                add_column(s.offset, m, gsign);
            } else if (t.kind == K::VecCombo) {
                if (static_cast<int>(t.combo.size()) != s.count)
                    throw SolverError("vec_combo size mismatch");
                for (int a = 0; a < s.count; ++a) {
                    ComplexMatrix m = t.combo[a];
                    m *= t.coeff;
                    add_column(s.offset + a, m, gsign);
                }
            } else {
                for (int k = 0; k < s.count; ++k) {
                    ComplexMatrix b = coord_basis(s.dim, s.complex_coords, k);
                    ComplexMatrix m = apply_mat_term(t, s.layout, b);
                    add_column(s.offset + k, m, gsign);
                }
            }
        }
        add_column(-1, con.cmat, 1.0);
        for (double& v : blk.h) v = -v;  // h = -C
        cp.cones.push_back(std::move(blk));
    };

    auto add_vector_block = [&](const SdpProblem::Constraint& con, bool is_nonneg) {
        int rows = static_cast<int>(con.cvec.size());
        ConeBlock blk;
        blk.psd = false;
        blk.n = rows;
        blk.rows = rows;
        blk.cols.assign(cp.n_x, {});
        blk.h.assign(rows, 0.0);
        const double gsign = -1.0;  // s = L(x) - rhs  =>  G = -L, h = -rhs

        for (const auto& t : con.terms) {
            const VarSlot& s = slot_of(t.var);
            using K = SdpProblem::Term::Kind;
            if (t.kind == K::VecId) {
                if (s.count != rows) throw SolverError("vec_id dimension mismatch");
                for (int i = 0; i < rows; ++i)
                    blk.cols[s.offset + i].entries.push_back({i, gsign * t.coeff});
            } else if (t.kind == K::ScalarRow) {
                if (rows != 1) throw SolverError("scalar_row needs a single row");
                blk.cols[s.offset].entries.push_back({0, gsign * t.coeff});
            } else if (t.kind == K::VecDense) {
                if (static_cast<int>(t.dense.size()) != rows)
                    throw SolverError("vec_dense row count mismatch");
                for (int r = 0; r < rows; ++r) {
                    if (static_cast<int>(t.dense[r].size()) != s.count)
                        throw SolverError("vec_dense column count mismatch");
                    for (int cidx = 0; cidx < s.count; ++cidx) {
                        double v = t.dense[r][cidx] * t.coeff;
                        if (v != 0.0) blk.cols[s.offset + cidx].entries.push_back({r, gsign * v});
                    }
                }
            } else {
                throw SolverError("vector constraint requires vector-valued terms");
            }
        }
        for (int r = 0; r < rows; ++r) blk.h[r] = -con.cvec[r];

        if (is_nonneg) {
            cp.cones.push_back(std::move(blk));
        } else {
            int base = cp.eq.rows;
            cp.eq.rows += rows;
            cp.eq.cols.resize(cp.n_x);
            cp.eq.b.resize(cp.eq.rows, 0.0);
            for (int col = 0; col < cp.n_x; ++col)
                for (auto& e : blk.cols[col].entries) cp.eq.cols[col].entries.push_back({base + e.first, -e.second});
            for (int r = 0; r < rows; ++r) cp.eq.b[base + r] = -blk.h[r];
        }
    };

    for (const auto& con : p.constraints()) {
        switch (con.kind) {
            case SdpProblem::Constraint::Kind::Psd: add_matrix_block(con, true); break;
            case SdpProblem::Constraint::Kind::EqMat: add_matrix_block(con, false); break;
            case SdpProblem::Constraint::Kind::Nonneg: add_vector_block(con, true); break;
            case SdpProblem::Constraint::Kind::EqVec: add_vector_block(con, false); break;
        }
    }
    if (cp.eq.rows > 0) cp.eq.cols.resize(cp.n_x);

    // Keep only a maximal independent subset of equality rows (the builders
    // can produce structurally redundant rows, e.g. symmetry-reduced
    // marginal constraints); inconsistent dependent rows are rejected.
    if (cp.eq.rows > 0) {
        const int rows = cp.eq.rows;
        const int nc = cp.n_x;
        std::vector<double> work(static_cast<size_t>(rows) * nc, 0.0);
        std::vector<double> bw = cp.eq.b;
        for (int col = 0; col < nc; ++col)
            for (const auto& e : cp.eq.cols[col].entries)
                work[static_cast<size_t>(e.first) * nc + col] = e.second;
        double scale = 1e-300;
        for (double v : work) scale = std::max(scale, std::abs(v));

        std::vector<bool> used(rows, false);
        std::vector<int> selected;
        for (int step = 0; step < rows; ++step) {
            int prow = -1, pcol = -1;
            double pval = 0.0;
            for (int r = 0; r < rows; ++r) {
                if (used[r]) continue;
                for (int c2 = 0; c2 < nc; ++c2) {
                    double v = std::abs(work[static_cast<size_t>(r) * nc + c2]);
                    if (v > pval) {
                        pval = v;
                        prow = r;
                        pcol = c2;
                    }
                }
            }
            if (pval <= 1e-10 * scale) break;
            used[prow] = true;
            selected.push_back(prow);
            double piv = work[static_cast<size_t>(prow) * nc + pcol];
            for (int r = 0; r < rows; ++r) {
                if (used[r]) continue;
                double f = work[static_cast<size_t>(r) * nc + pcol] / piv;
                if (f == 0.0) continue;
                for (int c2 = 0; c2 < nc; ++c2)
                    work[static_cast<size_t>(r) * nc + c2] -=
                        f * work[static_cast<size_t>(prow) * nc + c2];
                bw[r] -= f * bw[prow];
            }
        }
        double bscale = 1.0;
        for (double v : cp.eq.b) bscale = std::max(bscale, std::abs(v));
        for (int r = 0; r < rows; ++r)
            if (!used[r] && std::abs(bw[r]) > 1e-8 * bscale)
                throw SolverError("inconsistent equality constraints");

        if (static_cast<int>(selected.size()) < rows) {
            std::sort(selected.begin(), selected.end());
            std::vector<int> newrow(rows, -1);
            for (size_t i = 0; i < selected.size(); ++i) newrow[selected[i]] = static_cast<int>(i);
            EqBlock nb;
            nb.rows = static_cast<int>(selected.size());
            nb.cols.assign(nc, {});
            nb.b.resize(nb.rows);
            for (size_t i = 0; i < selected.size(); ++i) nb.b[i] = cp.eq.b[selected[i]];
            for (int col = 0; col < nc; ++col)
                for (const auto& e : cp.eq.cols[col].entries)
                    if (newrow[e.first] >= 0)
                        nb.cols[col].entries.push_back({newrow[e.first], e.second});
            cp.eq = std::move(nb);
        }
    }

    // The Schur complement needs every coordinate to act on some cone.
    std::vector<bool> touched(cp.n_x, false);
    for (const auto& blk : cp.cones)
        for (int col = 0; col < cp.n_x; ++col)
            if (!blk.cols[col].entries.empty()) touched[col] = true;
    for (int col = 0; col < cp.n_x; ++col)
        if (!touched[col])
            throw SolverError("variable coordinate " + std::to_string(col) +
                              " appears in no cone constraint; add a bound or cone membership");

    return cp;
}

}  // namespace detail

std::string SdpProblem::dump_json() const {
    json j;
    j["maximize"] = maximize_;
    j["offset"] = offset_;
    j["variables"] = json::array();
    for (const auto& v : vars_) {
        json jv;
        jv["name"] = v.name;
        jv["kind"] = v.kind == VarInfo::Kind::Hermitian ? "hermitian"
                     : v.kind == VarInfo::Kind::Scalar  ? "scalar"
                                                        : "vector";
        jv["dim"] = v.dim;
        jv["cone"] = v.cone;
        j["variables"].push_back(jv);
    }
    auto dump_mat = [](const ComplexMatrix& m) {
        json entries = json::array();
        for (int i = 0; i < m.dim(); ++i)
            for (int k = 0; k < m.dim(); ++k)
                if (m(i, k) != cxd(0.0))
                    entries.push_back({i, k, m(i, k).real(), m(i, k).imag()});
        return json{{"dim", m.dim()}, {"nonzeros", entries}};
    };
    j["constraints"] = json::array();
    for (const auto& con : cons_) {
        json jc;
        jc["kind"] = con.kind == Constraint::Kind::Psd      ? "psd"
                     : con.kind == Constraint::Kind::EqMat  ? "eq"
                     : con.kind == Constraint::Kind::Nonneg ? "nonneg"
                                                            : "eq_vec";
        jc["terms"] = json::array();
        for (const auto& t : con.terms) {
            json jt;
            jt["var"] = t.var;
            jt["coeff"] = t.coeff;
            jt["op"] = static_cast<int>(t.kind);
            if (!t.labels1.empty()) jt["labels1"] = t.labels1;
            if (!t.labels2.empty()) jt["labels2"] = t.labels2;
            if (t.kron_dim != 1) jt["kron_dim"] = t.kron_dim;
            jc["terms"].push_back(jt);
        }
        if (con.cmat.dim() > 0) jc["constant"] = dump_mat(con.cmat);
        if (!con.cvec.empty()) jc["constant_vec"] = con.cvec;
        j["constraints"].push_back(jc);
    }
    return j.dump(2);
}

}  // namespace qknit
