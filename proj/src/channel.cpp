#include "qknit/channel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "qknit/twirl.hpp"

using json = nlohmann::json;

namespace qknit {

namespace {

int side_dim(const SystemLayout& layout, Side s, Role r) {
    int d = 1;
    for (const Factor& f : layout.factors())
        if (f.side == s && f.role == r) d *= f.dim;
    return d;
}

}  // namespace

int ChoiRepresentation::dim_in() const { return dim_in_a() * dim_in_b(); }
int ChoiRepresentation::dim_out() const { return dim_out_a() * dim_out_b(); }
int ChoiRepresentation::dim_in_a() const { return side_dim(layout, Side::A, Role::Input); }
int ChoiRepresentation::dim_in_b() const { return side_dim(layout, Side::B, Role::Input); }
int ChoiRepresentation::dim_out_a() const { return side_dim(layout, Side::A, Role::Output); }
int ChoiRepresentation::dim_out_b() const { return side_dim(layout, Side::B, Role::Output); }

std::vector<std::string> ChoiRepresentation::b_labels() const {
    std::vector<std::string> l;
    for (const Factor& f : layout.factors())
        if (f.side == Side::B) l.push_back(f.label);
    return l;
}

ComplexMatrix ChoiRepresentation::normalized() const {
    ComplexMatrix m = matrix;
    m *= 1.0 / dim_in();
    return m;
}

void ChoiRepresentation::validate(double tol) const {
    layout.check_matches(matrix);
    if (!matrix.is_hermitian(1e-10))
        throw ContractError("Choi matrix is not Hermitian");
    double tr = matrix.trace().real();
    if (std::abs(tr - dim_in()) > tol * std::max(1.0, static_cast<double>(dim_in())))
        throw ContractError("Choi trace " + std::to_string(tr) + " != d_A*d_B = " +
                            std::to_string(dim_in()));
    ComplexMatrix marg = partial_trace(matrix, layout, input_labels());
    ComplexMatrix eye = ComplexMatrix::identity(dim_in());
    if ((marg - eye).max_abs() > tol * 10)
        throw ContractError("Choi input marginal is not the identity (not trace-preserving)");
    if (!psd_within(matrix, tol)) throw ContractError("Choi matrix is not PSD");
}

std::string ChoiRepresentation::to_json() const {
    json j;
    j["layout"] = json::array();
    for (const Factor& f : layout.factors()) {
        j["layout"].push_back({{"label", f.label},
                               {"dim", f.dim},
                               {"side", f.side == Side::A ? "A" : "B"},
                               {"role", f.role == Role::Input ? "input" : "output"}});
    }
    json entries = json::array();
    for (int i = 0; i < matrix.dim(); ++i)
        for (int k = 0; k < matrix.dim(); ++k)
            entries.push_back({matrix(i, k).real(), matrix(i, k).imag()});
    j["entries"] = std::move(entries);
    return j.dump();
}

ChoiRepresentation ChoiRepresentation::from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<Factor> factors;
    for (const auto& f : j.at("layout")) {
        Factor fac;
        fac.label = f.at("label").get<std::string>();
        fac.dim = f.at("dim").get<int>();
        std::string side = f.at("side").get<std::string>();
        std::string role = f.at("role").get<std::string>();
        if (side != "A" && side != "B") throw ContractError("channel json: side must be A or B");
        if (role != "input" && role != "output")
            throw ContractError("channel json: role must be input or output");
        fac.side = side == "A" ? Side::A : Side::B;
        fac.role = role == "input" ? Role::Input : Role::Output;
        factors.push_back(fac);
    }
    SystemLayout layout(factors);
    int d = layout.total_dim();
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != d * d)
        throw ContractError("channel json: entries size != dim^2");
    ComplexMatrix m(d);
    size_t idx = 0;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k, ++idx)
            m(i, k) = cxd(entries[idx][0].get<double>(), entries[idx][1].get<double>());
    m.make_hermitian();
    ChoiRepresentation choi{std::move(m), std::move(layout), nullptr};
    choi.validate();
    return choi;
}

Cut Cut::parse(const std::string& text, int num_qubits) {
    auto bar = text.find('|');
    if (bar == std::string::npos) throw ContractError("cut '" + text + "' must contain '|'");
    Cut cut;
    cut.side_of_qubit.assign(num_qubits, Side::A);
    std::vector<bool> seen(num_qubits, false);
    for (size_t i = 0; i < text.size(); ++i) {
        if (i == bar) continue;
        char c = text[i];
        if (c < '1' || c > '9') throw ContractError("cut '" + text + "': bad qubit index");
        int q = c - '1';
        if (q >= num_qubits || seen[q])
            throw ContractError("cut '" + text + "': qubit index out of range or repeated");
        seen[q] = true;
        cut.side_of_qubit[q] = i < bar ? Side::A : Side::B;
    }
    for (bool s : seen)
        if (!s) throw ContractError("cut '" + text + "': every qubit must be assigned");
    cut.check(num_qubits);
    return cut;
}

std::string Cut::to_string() const {
    std::string a, b;
    for (size_t q = 0; q < side_of_qubit.size(); ++q)
        (side_of_qubit[q] == Side::A ? a : b) += static_cast<char>('1' + q);
    return a + "|" + b;
}

void Cut::check(int num_qubits) const {
    if (static_cast<int>(side_of_qubit.size()) != num_qubits)
        throw ContractError("cut does not cover the gate's qubits");
    int na = 0;
    for (Side s : side_of_qubit) na += s == Side::A;
    if (na == 0 || na == num_qubits) throw ContractError("cut must leave both sides nonempty");
}

GateName gate_name_from_string(const std::string& s) {
    if (s == "identity" || s == "id") return GateName::Identity;
    if (s == "cnot" || s == "cx") return GateName::Cnot;
    if (s == "swap") return GateName::Swap;
    if (s == "iswap") return GateName::Iswap;
    if (s == "toffoli" || s == "ccx") return GateName::Toffoli;
    if (s == "cswap" || s == "fredkin") return GateName::Cswap;
    if (s == "custom") return GateName::Custom;
    throw ContractError("unknown gate '" + s + "'");
}

std::string to_string(GateName g) {
    switch (g) {
        case GateName::Identity: return "identity";
        case GateName::Cnot: return "cnot";
        case GateName::Swap: return "swap";
        case GateName::Iswap: return "iswap";
        case GateName::Toffoli: return "toffoli";
        case GateName::Cswap: return "cswap";
        case GateName::Custom: return "custom";
    }
    return "?";
}

namespace {

int library_qubits(GateName g) {
    switch (g) {
        case GateName::Identity:
        case GateName::Cnot:
        case GateName::Swap:
        case GateName::Iswap: return 2;
        case GateName::Toffoli:
        case GateName::Cswap: return 3;
        case GateName::Custom: return 0;
    }
    return 0;
}

ComplexMatrix library_unitary(GateName g) {
    switch (g) {
        case GateName::Identity: return ComplexMatrix::identity(4);
        case GateName::Cnot: {
            ComplexMatrix u(4);
            u(0, 0) = u(1, 1) = u(3, 2) = u(2, 3) = 1.0;
            return u;
        }
        case GateName::Swap: {
            ComplexMatrix u(4);
            u(0, 0) = u(3, 3) = 1.0;
            u(1, 2) = u(2, 1) = 1.0;
            return u;
        }
        case GateName::Iswap: {
            ComplexMatrix u(4);
            u(0, 0) = u(3, 3) = 1.0;
            u(2, 1) = cxd(0, 1);
            u(1, 2) = cxd(0, 1);
            return u;
        }
        case GateName::Toffoli: {
            ComplexMatrix u(8);
            for (int i = 0; i < 6; ++i) u(i, i) = 1.0;
            u(7, 6) = u(6, 7) = 1.0;
            return u;
        }
        case GateName::Cswap: {
            ComplexMatrix u(8);
            for (int i = 0; i < 8; ++i) u(i, i) = 0.0;
            // |0bc> -> |0bc>; |1bc> -> |1cb>
            u(0, 0) = u(1, 1) = u(2, 2) = u(3, 3) = 1.0;
            u(4, 4) = u(7, 7) = 1.0;
            u(6, 5) = u(5, 6) = 1.0;
            return u;
        }
        case GateName::Custom: break;
    }
    throw ContractError("custom gates carry their own unitary");
}

Cut default_cut(int num_qubits) {
    Cut c;
    c.side_of_qubit.assign(num_qubits, Side::B);
    c.side_of_qubit[0] = Side::A;
    return c;
}

}  // namespace

GateSpec GateSpec::library(GateName name, const Cut& cut) {
    if (name == GateName::Custom) throw ContractError("library() cannot build custom gates");
    GateSpec g;
    g.name = name;
    g.cut = cut;
    g.cut.check(library_qubits(name));
    return g;
}

GateSpec GateSpec::library(const std::string& name, const std::string& cut_text) {
    GateName g = gate_name_from_string(name);
    int k = library_qubits(g);
    Cut cut = cut_text.empty() ? default_cut(k) : Cut::parse(cut_text, k);
    return library(g, cut);
}

GateSpec GateSpec::custom(const ComplexMatrix& u, const Cut& cut) {
    int d = u.dim();
    int k = 0;
    while ((1 << k) < d) ++k;
    if ((1 << k) != d) throw ContractError("custom unitary dim must be a power of 2");
    GateSpec g;
    g.name = GateName::Custom;
    g.cut = cut;
    g.cut.check(k);
    g.unitary = u;
    return g;
}

int GateSpec::num_qubits() const {
    return name == GateName::Custom ? cut.qubits() : library_qubits(name);
}

ComplexMatrix GateSpec::unitary_matrix() const {
    if (name == GateName::Custom) {
        if (!unitary) throw ContractError("custom gate without unitary");
        return *unitary;
    }
    return library_unitary(name);
}

NoiseModel NoiseModel::depolarizing(double p, std::vector<int> targets) {
    if (p < 0.0 || p > 1.0) throw ContractError("depolarizing rate p must be in [0,1]");
    NoiseModel n;
    n.kind = Kind::Depolarizing;
    n.parameter = p;
    n.target_qubits = std::move(targets);
    return n;
}

NoiseModel NoiseModel::amplitude_damping(double gamma, int target_qubit) {
    if (gamma < 0.0 || gamma > 1.0) throw ContractError("damping rate gamma must be in [0,1]");
    NoiseModel n;
    n.kind = Kind::AmplitudeDamping;
    n.parameter = gamma;
    n.target_qubits = {target_qubit};
    return n;
}

namespace {

// Factor order permutation taking (in_1..in_k, out_1..out_k) to the global
// (A-in, B-in, A-out, B-out) ordering, qubit order preserved within groups.
std::vector<size_t> global_order(const Cut& cut) {
    int k = cut.qubits();
    std::vector<size_t> order;
    for (int q = 0; q < k; ++q)
        if (cut.side_of_qubit[q] == Side::A) order.push_back(q);
    for (int q = 0; q < k; ++q)
        if (cut.side_of_qubit[q] == Side::B) order.push_back(q);
    for (int q = 0; q < k; ++q)
        if (cut.side_of_qubit[q] == Side::A) order.push_back(k + q);
    for (int q = 0; q < k; ++q)
        if (cut.side_of_qubit[q] == Side::B) order.push_back(k + q);
    return order;
}

SystemLayout natural_layout(const Cut& cut) {
    int k = cut.qubits();
    std::vector<Factor> f;
    for (int q = 0; q < k; ++q)
        f.push_back({"q" + std::to_string(q + 1), 2, cut.side_of_qubit[q], Role::Input});
    for (int q = 0; q < k; ++q)
        f.push_back({"q" + std::to_string(q + 1) + "'", 2, cut.side_of_qubit[q], Role::Output});
    return SystemLayout(f);
}

}  // namespace

ChoiRepresentation choi_from_unitary(const GateSpec& gate) {
    ComplexMatrix u = gate.unitary_matrix();
    const int d = u.dim();
    if (d != (1 << gate.num_qubits()))
        throw ContractError("unitary dimension does not match the cut's qubit count");

    ComplexMatrix uu = matmul(u, u.dagger());
    if ((uu - ComplexMatrix::identity(d)).max_abs() > 1e-10)
        throw ContractError("gate matrix is not unitary");

    // J = sum_ij |i><j| ox U|i><j|U^dag = |v><v| with v = sum_i |i> ox U|i>.
    std::vector<cxd> v(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int o = 0; o < d; ++o) v[static_cast<size_t>(i) * d + o] = u(o, i);
    ComplexMatrix j(d * d);
    for (int r = 0; r < d * d; ++r)
        for (int c = 0; c < d * d; ++c) j(r, c) = v[r] * std::conj(v[c]);
    j.set_hermitian_flag(true);

    SystemLayout nat = natural_layout(gate.cut);
    std::vector<size_t> order = global_order(gate.cut);
    ComplexMatrix jg = permute_factors(j, nat, order);
    SystemLayout glob = nat.permuted(order);

    ChoiRepresentation choi{std::move(jg), std::move(glob), nullptr};
    choi.validate();

    // Clifford gates carry an abelian twirl symmetry: the Choi matrix is
    // fixed by conj(W) ox UWU^dag for every Pauli string W.
    auto images = clifford_images(u, gate.num_qubits());
    if (images) {
        std::vector<ComplexMatrix> strings = pauli_strings(gate.num_qubits());
        std::vector<ComplexMatrix> group;
        group.reserve(strings.size());
        for (size_t w = 0; w < strings.size(); ++w) {
            ComplexMatrix g = kron(strings[w].conj(), (*images)[w]);
            g = permute_factors(g, nat, order);
            group.push_back(std::move(g));
        }
        auto sym = std::make_shared<TwirlSymmetry>();
        sym->basis = joint_eigenbasis(group);
        choi.symmetry = std::move(sym);
    }
    return choi;
}

ComplexMatrix apply_channel(const ChoiRepresentation& choi, const ComplexMatrix& rho,
                            bool any_operator) {
    const int din = choi.dim_in(), dout = choi.dim_out();
    if (rho.dim() != din) throw DimensionError("apply_channel: state dimension mismatch");
    if (!any_operator) {
        if (!rho.is_hermitian(1e-9)) throw ContractError("apply_channel: state not Hermitian");
        if (std::abs(rho.trace().real() - 1.0) > 1e-9)
            throw ContractError("apply_channel: state trace != 1");
        ComplexMatrix h = rho;
        h.make_hermitian();
        if (min_eigenvalue(h) < -1e-9) throw ContractError("apply_channel: state not PSD");
    }
    // Inputs are the leading factors, outputs trailing:
    // N(rho)[o,o'] = sum_{i,i'} rho[i',i] J[(i',o),(i,o')].
    ComplexMatrix out(dout);
    for (int i = 0; i < din; ++i)
        for (int i2 = 0; i2 < din; ++i2) {
            cxd r = rho(i2, i);
            if (r == cxd(0.0)) continue;
            for (int o = 0; o < dout; ++o)
                for (int o2 = 0; o2 < dout; ++o2)
                    out(o, o2) += r * choi.matrix(i2 * dout + o, i * dout + o2);
        }
    out.set_hermitian_flag(rho.hermitian_flag() && choi.matrix.hermitian_flag());
    return out;
}

namespace {

// Applies M on one factor of the output space: J -> (I ox M_f ox I) J (.)^dag
// restricted to rows/columns; implemented over the full index space.
ComplexMatrix conjugate_factor(const ComplexMatrix& j, const SystemLayout& layout,
                               size_t factor_pos, const ComplexMatrix& m) {
    const int d = j.dim();
    int df = layout.factor(factor_pos).dim;
    if (m.dim() != df) throw DimensionError("noise operator dim mismatch");

    // Stride of the factor and dimension layout.
    long long stride = 1;
    for (size_t k = layout.count(); k-- > factor_pos + 1;) stride *= layout.factor(k).dim;
    long long outer = d / (stride * df);

    // Left multiply: rows mixed within the factor.
    ComplexMatrix t(d);
    for (long long a = 0; a < outer; ++a)
        for (int x = 0; x < df; ++x)
            for (long long s = 0; s < stride; ++s) {
                long long row = (a * df + x) * stride + s;
                for (int y = 0; y < df; ++y) {
                    cxd mxy = m(x, y);
                    if (mxy == cxd(0.0)) continue;
                    long long src = (a * df + y) * stride + s;
                    for (int c = 0; c < d; ++c)
                        t(static_cast<int>(row), c) += mxy * j(static_cast<int>(src), c);
                }
            }
    // Right multiply by M^dag: columns mixed.
    ComplexMatrix r(d);
    for (long long a = 0; a < outer; ++a)
        for (int x = 0; x < df; ++x)
            for (long long s = 0; s < stride; ++s) {
                long long col = (a * df + x) * stride + s;
                for (int y = 0; y < df; ++y) {
                    cxd myx = std::conj(m(x, y));
                    if (myx == cxd(0.0)) continue;
                    long long src = (a * df + y) * stride + s;
                    for (int rr = 0; rr < d; ++rr)
                        r(rr, static_cast<int>(col)) += t(rr, static_cast<int>(src)) * myx;
                }
            }
    return r;
}

}  // namespace

ChoiRepresentation attach_noise(const ChoiRepresentation& choi, const NoiseModel& noise) {
    std::vector<std::string> outs = choi.output_labels();
    std::vector<std::string> targets;
    if (noise.target_qubits.empty()) {
        targets = outs;
    } else {
        for (int q : noise.target_qubits) {
            std::string label = "q" + std::to_string(q) + "'";
            // Parallel copies carry suffixed labels; exact match required.
            if (!choi.layout.has_label(label))
                throw LayoutError("noise target qubit " + std::to_string(q) +
                                  " has no output factor '" + label + "'");
            targets.push_back(label);
        }
    }

    ChoiRepresentation out = choi;
    if (noise.kind == NoiseModel::Kind::Depolarizing) {
        const double p = noise.parameter;
        if (p == 0.0) return out;
        // J -> (1-p) J + p * tr_S(J) ox I_S / d_S, with S the targeted outputs.
        std::vector<std::string> keep;
        int ds = 1;
        std::set<std::string> tset(targets.begin(), targets.end());
        for (const Factor& f : choi.layout.factors()) {
            if (tset.count(f.label))
                ds *= f.dim;
            else
                keep.push_back(f.label);
        }
        ComplexMatrix reduced = partial_trace(choi.matrix, choi.layout, keep);
        ComplexMatrix rep = kron(reduced, ComplexMatrix::identity(ds));
        rep *= 1.0 / ds;
        // rep lives on (kept..., S...); permute back to layout order.
        std::vector<Factor> scrambled;
        SystemLayout kl = choi.layout.restricted(keep);
        for (const Factor& f : kl.factors()) scrambled.push_back(f);
        for (const Factor& f : choi.layout.factors())
            if (tset.count(f.label)) scrambled.push_back(f);
        SystemLayout sl{scrambled};
        std::vector<size_t> order;
        for (const Factor& f : choi.layout.factors()) order.push_back(sl.position(f.label));
        rep = permute_factors(rep, sl, order);

        ComplexMatrix m = choi.matrix;
        m *= (1.0 - p);
        rep *= p;
        m += rep;
        out.matrix = std::move(m);
        // Depolarizing commutes with the Pauli twirl, so symmetry survives;
        // consumers re-verify anyway.
    } else {
        const double g = noise.parameter;
        ComplexMatrix k0(2), k1(2);
        k0(0, 0) = 1.0;
        k0(1, 1) = std::sqrt(1.0 - g);
        k1(0, 1) = std::sqrt(g);
        size_t pos = choi.layout.position(targets.at(0));
        if (choi.layout.factor(pos).role != Role::Output)
            throw LayoutError("amplitude damping target must be an output factor");
        ComplexMatrix m = conjugate_factor(choi.matrix, choi.layout, pos, k0);
        m += conjugate_factor(choi.matrix, choi.layout, pos, k1);
        m.make_hermitian();
        out.matrix = std::move(m);
        out.symmetry = nullptr;  // damping breaks the Pauli symmetry
    }
    out.matrix.set_hermitian_flag(true);
    out.validate();
    return out;
}

namespace {

std::vector<size_t> parallel_order(const SystemLayout& single, int n) {
    // Input: n copies of `single` laid side by side; output order groups
    // A-inputs of all copies, then B-inputs, A-outputs, B-outputs.
    size_t m = single.count();
    std::vector<size_t> order;
    auto add = [&](Side s, Role r) {
        for (int c = 0; c < n; ++c)
            for (size_t k = 0; k < m; ++k)
                if (single.factor(k).side == s && single.factor(k).role == r)
                    order.push_back(c * m + k);
    };
    add(Side::A, Role::Input);
    add(Side::B, Role::Input);
    add(Side::A, Role::Output);
    add(Side::B, Role::Output);
    return order;
}

}  // namespace

ChoiRepresentation tensor_parallel(const ChoiRepresentation& choi, int n, int dimension_cap) {
    if (n < 1) throw ContractError("tensor_parallel: n must be >= 1");
    if (n == 1) return choi;
    double dn = std::pow(static_cast<double>(choi.matrix.dim()), n);
    if (dn > dimension_cap)
        throw DimensionError("tensor_parallel: resulting Choi dimension " +
                             std::to_string(static_cast<long long>(dn)) + " exceeds cap " +
                             std::to_string(dimension_cap));

    ComplexMatrix j = choi.matrix;
    for (int c = 1; c < n; ++c) j = kron(j, choi.matrix);

    // Copies side by side, labels suffixed with the copy index.
    std::vector<Factor> flat;
    for (int c = 0; c < n; ++c)
        for (const Factor& f : choi.layout.factors()) {
            Factor g = f;
            g.label = f.label + "#" + std::to_string(c + 1);
            flat.push_back(g);
        }
    SystemLayout flat_layout{flat};
    std::vector<size_t> order = parallel_order(choi.layout, n);

    ChoiRepresentation out;
    out.matrix = permute_factors(j, flat_layout, order);
    out.layout = flat_layout.permuted(order);

    if (choi.symmetry) {
        // The joint eigenbasis of the product group is the tensor of the
        // per-copy bases, re-indexed by the same regrouping.
        ComplexMatrix q = choi.symmetry->basis;
        for (int c = 1; c < n; ++c) q = kron(q, choi.symmetry->basis);
        // Row re-indexing only: columns stay eigenvectors.
        const int d = q.dim();
        std::vector<int> map = permute_index_map(flat_layout, order);
        ComplexMatrix qg(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) qg(map[i], k) = q(i, k);
        auto sym = std::make_shared<TwirlSymmetry>();
        sym->basis = std::move(qg);
        out.symmetry = std::move(sym);
    }
    out.validate();
    return out;
}

ComplexMatrix tensor_parallel_operator(const ComplexMatrix& op, const SystemLayout& single_side,
                                       int n) {
    single_side.check_matches(op);
    ComplexMatrix big = op;
    for (int c = 1; c < n; ++c) big = kron(big, op);
    std::vector<Factor> flat;
    for (int c = 0; c < n; ++c)
        for (const Factor& f : single_side.factors()) {
            Factor g = f;
            g.label = f.label + "#" + std::to_string(c + 1);
            flat.push_back(g);
        }
    SystemLayout flat_layout{flat};
    size_t m = single_side.count();
    std::vector<size_t> order;
    for (Side s : {Side::A, Side::B})
        for (int c = 0; c < n; ++c)
            for (size_t k = 0; k < m; ++k)
                if (single_side.factor(k).side == s) order.push_back(c * m + k);
    return permute_factors(big, flat_layout, order);
}

ChoiRepresentation compose(const ChoiRepresentation& second, const ChoiRepresentation& first) {
    if (first.dim_out() != second.dim_in())
        throw LayoutError("compose: output dim of first != input dim of second");
    if (first.dim_out_a() != second.dim_in_a() || first.dim_out_b() != second.dim_in_b())
        throw LayoutError("compose: side structure mismatch between stages");

    const int din = first.dim_in();
    const int dout = second.dim_out();

    // J[(i,o),(j,o')] = (N2 N1)(|i><j|)[o,o'] in the natural (in, out) order.
    ComplexMatrix jn(din * dout);
    for (int i = 0; i < din; ++i)
        for (int j = 0; j < din; ++j) {
            ComplexMatrix e = ComplexMatrix::unit(din, i, j);
            ComplexMatrix mid = apply_channel(first, e, true);
            ComplexMatrix outm = apply_channel(second, mid, true);
            for (int o = 0; o < dout; ++o)
                for (int o2 = 0; o2 < dout; ++o2) jn(i * dout + o, j * dout + o2) = outm(o, o2);
        }
    jn.make_hermitian();

    // Natural layout here: first's inputs then second's outputs; both are
    // already in (A..., B...) order, so regroup is a no-op and the layout is
    // just the concatenation (relabels guard against collisions).
    std::vector<Factor> f;
    for (const Factor& x : first.layout.factors())
        if (x.role == Role::Input) f.push_back(x);
    for (const Factor& x : second.layout.factors())
        if (x.role == Role::Output) f.push_back(x);
    std::set<std::string> labels;
    for (Factor& x : f)
        while (!labels.insert(x.label).second) x.label += "+";

    ChoiRepresentation out{std::move(jn), SystemLayout(f), nullptr};
    out.validate();
    return out;
}

ChoiRepresentation conjugate_local(const ChoiRepresentation& choi,
                                   const std::vector<ComplexMatrix>& u_in,
                                   const std::vector<ComplexMatrix>& u_out) {
    // N'(rho) = W_out N(W_in rho W_in^dag) W_out^dag has Choi
    // (conj(W_in) ox W_out) J (conj(W_in) ox W_out)^dag.
    std::vector<std::string> ins = choi.input_labels(), outs = choi.output_labels();
    if (u_in.size() != ins.size() || u_out.size() != outs.size())
        throw DimensionError("conjugate_local: one unitary per factor required");
    ComplexMatrix m = choi.matrix;
    for (size_t k = 0; k < ins.size(); ++k)
        m = conjugate_factor(m, choi.layout, choi.layout.position(ins[k]), u_in[k].conj());
    for (size_t k = 0; k < outs.size(); ++k)
        m = conjugate_factor(m, choi.layout, choi.layout.position(outs[k]), u_out[k]);
    m.make_hermitian();
    ChoiRepresentation out{std::move(m), choi.layout, nullptr};
    out.validate();
    return out;
}

}  // namespace qknit
