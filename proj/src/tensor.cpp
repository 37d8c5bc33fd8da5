#include "qknit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <lapacke.h>

namespace qknit {

ComplexMatrix ComplexMatrix::identity(int dim) {
    ComplexMatrix m(dim, true);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::unit(int dim, int i, int j) {
    ComplexMatrix m(dim, i == j);
    m(i, j) = 1.0;
    return m;
}

double ComplexMatrix::hermiticity_defect() const {
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j)
            worst = std::max(worst, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return worst;
}

void ComplexMatrix::make_hermitian() {
    for (int i = 0; i < dim_; ++i) {
        (*this)(i, i) = cxd((*this)(i, i).real(), 0.0);
        for (int j = i + 1; j < dim_; ++j) {
            cxd v = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
            (*this)(i, j) = v;
            (*this)(j, i) = std::conj(v);
        }
    }
    herm_ = true;
}

cxd ComplexMatrix::trace() const {
    cxd t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const cxd& v : a_) m = std::max(m, std::abs(v));
    return m;
}

ComplexMatrix ComplexMatrix::dagger() const {
    ComplexMatrix r(dim_, herm_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(i, j) = (*this)(j, i);
    r.herm_ = false;
    return r;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(i, j));
    r.herm_ = herm_;
    return r;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (o.dim_ != dim_) throw DimensionError("matrix addition: dimension mismatch");
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    herm_ = herm_ && o.herm_;
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (o.dim_ != dim_) throw DimensionError("matrix subtraction: dimension mismatch");
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    herm_ = herm_ && o.herm_;
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cxd s) {
    for (cxd& v : a_) v *= s;
    herm_ = herm_ && std::abs(s.imag()) == 0.0;
    return *this;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionError("matmul: dimension mismatch");
    const int n = a.dim();
    ComplexMatrix r(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            cxd aik = a(i, k);
            if (aik == cxd(0.0)) continue;
            const cxd* brow = b.data() + static_cast<size_t>(k) * n;
            cxd* rrow = r.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) rrow[j] += aik * brow[j];
        }
    }
    return r;
}

cxd hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionError("hs_inner: dimension mismatch");
    cxd s = 0.0;
    const size_t n = a.size();
    for (size_t k = 0; k < n; ++k) s += std::conj(a.data()[k]) * b.data()[k];
    return s;
}

SystemLayout::SystemLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<std::string> seen;
    for (const Factor& f : factors_) {
        if (f.dim <= 0) throw LayoutError("layout factor '" + f.label + "' has non-positive dim");
        if (!seen.insert(f.label).second)
            throw LayoutError("duplicate layout label '" + f.label + "'");
    }
}

int SystemLayout::total_dim() const {
    long long d = 1;
    for (const Factor& f : factors_) d *= f.dim;
    return static_cast<int>(d);
}

size_t SystemLayout::position(const std::string& label) const {
    for (size_t i = 0; i < factors_.size(); ++i)
        if (factors_[i].label == label) return i;
    throw LayoutError("unknown layout label '" + label + "'");
}

bool SystemLayout::has_label(const std::string& label) const {
    for (const Factor& f : factors_)
        if (f.label == label) return true;
    return false;
}

std::vector<size_t> SystemLayout::positions(const std::vector<std::string>& labels) const {
    std::vector<size_t> p;
    p.reserve(labels.size());
    for (const std::string& l : labels) p.push_back(position(l));
    return p;
}

SystemLayout SystemLayout::restricted(const std::vector<std::string>& keep) const {
    std::set<std::string> k(keep.begin(), keep.end());
    for (const std::string& l : keep) position(l);  // validate
    std::vector<Factor> out;
    for (const Factor& f : factors_)
        if (k.count(f.label)) out.push_back(f);
    return SystemLayout(out);
}

SystemLayout SystemLayout::permuted(const std::vector<size_t>& order) const {
    if (order.size() != factors_.size()) throw LayoutError("permutation size mismatch");
    std::vector<Factor> out;
    out.reserve(order.size());
    for (size_t i : order) out.push_back(factors_.at(i));
    return SystemLayout(out);
}

std::vector<std::string> SystemLayout::labels() const {
    std::vector<std::string> l;
    for (const Factor& f : factors_) l.push_back(f.label);
    return l;
}

std::vector<std::string> SystemLayout::labels_with(Role role) const {
    std::vector<std::string> l;
    for (const Factor& f : factors_)
        if (f.role == role) l.push_back(f.label);
    return l;
}

std::vector<std::string> SystemLayout::labels_with(Side side, Role role) const {
    std::vector<std::string> l;
    for (const Factor& f : factors_)
        if (f.side == side && f.role == role) l.push_back(f.label);
    return l;
}

void SystemLayout::check_matches(const ComplexMatrix& m) const {
    if (total_dim() != m.dim())
        throw LayoutError("layout dim " + std::to_string(total_dim()) +
                          " does not match matrix dim " + std::to_string(m.dim()));
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const int da = a.dim(), db = b.dim();
    ComplexMatrix r(da * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j) {
            cxd aij = a(i, j);
            if (aij == cxd(0.0)) continue;
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l) r(i * db + k, j * db + l) = aij * b(k, l);
        }
    r.set_hermitian_flag(a.hermitian_flag() && b.hermitian_flag());
    return r;
}

namespace {

// Decode/encode helpers for row-major multi-indices over factor dims.
struct Indexer {
    std::vector<int> dims;
    explicit Indexer(const SystemLayout& layout) {
        for (const Factor& f : layout.factors()) dims.push_back(f.dim);
    }
    void decode(int idx, std::vector<int>& out) const {
        out.resize(dims.size());
        for (size_t k = dims.size(); k-- > 0;) {
            out[k] = idx % dims[k];
            idx /= dims[k];
        }
    }
    int encode(const std::vector<int>& comp) const {
        int idx = 0;
        for (size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + comp[k];
        return idx;
    }
};

}  // namespace

ComplexMatrix partial_trace(const ComplexMatrix& m, const SystemLayout& layout,
                            const std::vector<std::string>& keep) {
    layout.check_matches(m);
    std::vector<size_t> kp = layout.positions(keep);
    std::set<size_t> kept(kp.begin(), kp.end());

    int dkeep = 1, dtrace = 1;
    std::vector<size_t> keep_pos, trace_pos;
    for (size_t i = 0; i < layout.count(); ++i) {
        if (kept.count(i)) {
            keep_pos.push_back(i);
            dkeep *= layout.factor(i).dim;
        } else {
            trace_pos.push_back(i);
            dtrace *= layout.factor(i).dim;
        }
    }

    // Strides of each factor in the full row index.
    std::vector<long long> stride(layout.count(), 1);
    for (size_t k = layout.count() - 1; k-- > 0;)
        stride[k] = stride[k + 1] * layout.factor(k + 1).dim;

    auto expand = [&](const std::vector<size_t>& pos, int compact) {
        long long idx = 0;
        for (size_t k = pos.size(); k-- > 0;) {
            int d = layout.factor(pos[k]).dim;
            idx += static_cast<long long>(compact % d) * stride[pos[k]];
            compact /= d;
        }
        return idx;
    };

    ComplexMatrix r(dkeep);
    for (int i = 0; i < dkeep; ++i) {
        long long bi = expand(keep_pos, i);
        for (int j = 0; j < dkeep; ++j) {
            long long bj = expand(keep_pos, j);
            cxd s = 0.0;
            for (int t = 0; t < dtrace; ++t) {
                long long bt = expand(trace_pos, t);
                s += m(static_cast<int>(bi + bt), static_cast<int>(bj + bt));
            }
            r(i, j) = s;
        }
    }
    r.set_hermitian_flag(m.hermitian_flag());
    return r;
}

ComplexMatrix partial_transpose(const ComplexMatrix& m, const SystemLayout& layout,
                                const std::vector<std::string>& transpose) {
    layout.check_matches(m);
    std::vector<size_t> tp = layout.positions(transpose);
    std::set<size_t> tset(tp.begin(), tp.end());

    Indexer ix(layout);
    const int d = m.dim();
    ComplexMatrix r(d);
    std::vector<int> ri, ci;
    for (int i = 0; i < d; ++i) {
        ix.decode(i, ri);
        for (int j = 0; j < d; ++j) {
            ix.decode(j, ci);
            std::vector<int> si = ri, sj = ci;
            for (size_t p : tset) std::swap(si[p], sj[p]);
            r(ix.encode(si), ix.encode(sj)) = m(i, j);
        }
    }
    r.set_hermitian_flag(m.hermitian_flag());
    return r;
}

std::vector<int> permute_index_map(const SystemLayout& layout, const std::vector<size_t>& order) {
    if (order.size() != layout.count()) throw LayoutError("permute: order size mismatch");
    Indexer ix(layout);
    Indexer ox(layout.permuted(order));
    const int d = layout.total_dim();
    std::vector<int> map(d);
    std::vector<int> comp, pcomp(order.size());
    for (int i = 0; i < d; ++i) {
        ix.decode(i, comp);
        for (size_t k = 0; k < order.size(); ++k) pcomp[k] = comp[order[k]];
        map[i] = ox.encode(pcomp);
    }
    return map;
}

ComplexMatrix permute_factors(const ComplexMatrix& m, const SystemLayout& layout,
                              const std::vector<size_t>& order) {
    layout.check_matches(m);
    std::vector<int> map = permute_index_map(layout, order);
    const int d = m.dim();
    ComplexMatrix r(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r(map[i], map[j]) = m(i, j);
    r.set_hermitian_flag(m.hermitian_flag());
    return r;
}

std::vector<double> embed_real(const ComplexMatrix& m) {
    const int n = m.dim();
    std::vector<double> e(static_cast<size_t>(2 * n) * (2 * n));
    auto at = [&](int i, int j) -> double& { return e[static_cast<size_t>(i) * 2 * n + j]; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double re = m(i, j).real(), im = m(i, j).imag();
            at(i, j) = re;
            at(i, j + n) = -im;
            at(i + n, j) = im;
            at(i + n, j + n) = re;
        }
    return e;
}

void dsyev_inplace(std::vector<double>& a, int n, std::vector<double>& w, bool vectors) {
    w.assign(n, 0.0);
    int info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, vectors ? 'V' : 'N', 'L', n, a.data(), n, w.data());
    if (info != 0)
        throw std::runtime_error("dsyev failed to converge (info=" + std::to_string(info) + ")");
}

namespace {

void require_hermitian(const ComplexMatrix& m, const char* op) {
    if (!m.hermitian_flag() || !m.is_hermitian(1e-12))
        throw ContractError(std::string(op) + ": input is not flagged/validated Hermitian");
}

}  // namespace

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m) {
    require_hermitian(m, "hermitian_eigenvalues");
    const int n = m.dim();
    std::vector<double> e = embed_real(m);
    std::vector<double> w;
    dsyev_inplace(e, 2 * n, w, false);
    // The embedding doubles every eigenvalue; take every other of the sorted list.
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = w[2 * i];
    return out;
}

EigenSystem hermitian_eigensystem(const ComplexMatrix& m) {
    require_hermitian(m, "hermitian_eigensystem");
    const int n = m.dim();
    std::vector<double> e = embed_real(m);
    std::vector<double> w;
    dsyev_inplace(e, 2 * n, w, true);
    // Rows of e now hold eigenvectors of the embedding (row-major dsyev with
    // jobz='V' stores them in the matrix; with LAPACK_ROW_MAJOR, columns are
    // eigenvectors, i.e. e[k*2n + j] is component k of eigenvector j).
    // Each complex eigenvector z = u + i v appears twice, as (u; v) and
    // (-v; u).  Extract one complex representative per pair by Gram-Schmidt
    // in complex arithmetic.
    EigenSystem sys;
    sys.values.resize(n);
    sys.vectors = ComplexMatrix(n);
    int taken = 0;
    std::vector<cxd> z(n);
    for (int col = 0; col < 2 * n && taken < n; ++col) {
        for (int k = 0; k < n; ++k) {
            double u = e[static_cast<size_t>(k) * 2 * n + col];
            double v = e[static_cast<size_t>(k + n) * 2 * n + col];
            z[k] = cxd(u, v);
        }
        // Project out previously accepted vectors in the same eigenvalue
        // cluster (two passes for numerical orthogonality).
        for (int pass = 0; pass < 2; ++pass) {
            for (int t = 0; t < taken; ++t) {
                if (std::abs(sys.values[t] - w[col]) > 1e-8 * (1.0 + std::abs(w[col]))) continue;
                cxd ov = 0.0;
                for (int k = 0; k < n; ++k) ov += std::conj(sys.vectors(k, t)) * z[k];
                for (int k = 0; k < n; ++k) z[k] -= ov * sys.vectors(k, t);
            }
        }
        double nrm = 0.0;
        for (int k = 0; k < n; ++k) nrm += std::norm(z[k]);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-6) continue;  // an i-multiple of an accepted vector
        for (int k = 0; k < n; ++k) sys.vectors(k, taken) = z[k] / nrm;
        sys.values[taken] = w[col];
        ++taken;
    }
    if (taken != n) throw std::runtime_error("eigenvector extraction from real embedding failed");
    return sys;
}

double spectral_norm(const ComplexMatrix& m) {
    std::vector<double> ev = hermitian_eigenvalues(m);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

double min_eigenvalue(const ComplexMatrix& m) { return hermitian_eigenvalues(m).front(); }

bool psd_within(const ComplexMatrix& m, double tol) {
    const int n = m.dim();
    double shift = tol * std::max(1.0, m.max_abs());
    std::vector<cxd> a(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cxd v = m(i, j);
            if (i == j) v += shift;
            a[static_cast<size_t>(i) * n + j] = v;
        }
    int info = LAPACKE_zpotrf(LAPACK_ROW_MAJOR, 'L', n,
                              reinterpret_cast<lapack_complex_double*>(a.data()), n);
    if (info == 0) return true;
    // Borderline: decide by the actual spectrum.
    ComplexMatrix h = m;
    h.make_hermitian();
    return min_eigenvalue(h) >= -tol * std::max(1.0, m.max_abs());
}

}  // namespace qknit
