// Command-line surface: gate measurements, noise sweeps, quasi-probability
// sampling experiments, and certificate checks, emitting plot-ready CSV/JSON.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qknit/measures.hpp"
#include "qknit/qpdsim.hpp"
#include "qknit/version.hpp"

using json = nlohmann::json;
using namespace qknit;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitCompute = 2;

double default_tol() {
    if (const char* env = std::getenv("QKNIT_SDP_TOL")) {
        try {
            double v = std::stod(env);
            if (v >= 1e-10 && v <= 1e-4) return v;
        } catch (...) {
        }
        std::cerr << "warning: ignoring invalid QKNIT_SDP_TOL\n";
    }
    return 1e-7;
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

ComplexMatrix matrix_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open '" + path + "'");
    json j = json::parse(in);
    int d = j.at("dim").get<int>();
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != d * d)
        throw ContractError("matrix json: entries size != dim^2");
    ComplexMatrix m(d);
    size_t idx = 0;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k, ++idx)
            m(i, k) = cxd(entries[idx][0].get<double>(), entries[idx][1].get<double>());
    return m;
}

struct GateArgs {
    std::string gate = "cnot";
    std::string cut;
    std::string unitary_file;
    std::string noise_kind;  // "", "depolarizing", "amplitude-damping"
    double noise_p = 0.0;
    int noise_target = 2;
    std::vector<int> depol_targets;

    void attach(CLI::App* cmd) {
        cmd->add_option("--gate", gate,
                        "gate name (identity, cnot, swap, iswap, toffoli, cswap, custom)");
        cmd->add_option("--cut", cut, "qubit partition, e.g. 1|23");
        cmd->add_option("--unitary", unitary_file, "JSON file with a custom unitary");
        cmd->add_option("--noise", noise_kind, "depolarizing or amplitude-damping");
        cmd->add_option("--p", noise_p, "noise rate (p or gamma)");
        cmd->add_option("--target", noise_target, "amplitude-damping target qubit (1-based)");
        cmd->add_option("--depol-targets", depol_targets,
                        "depolarizing target qubits (default: all outputs)");
    }

    GateSpec spec() const {
        if (gate == "custom" || !unitary_file.empty()) {
            ComplexMatrix u = matrix_from_json_file(unitary_file);
            int k = 0;
            while ((1 << k) < u.dim()) ++k;
            std::string text = cut;
            if (text.empty()) {
                text = "1|";
                for (int q = 2; q <= k; ++q) text += static_cast<char>('0' + q);
            }
            return GateSpec::custom(u, Cut::parse(text, k));
        }
        return GateSpec::library(gate, cut);
    }

    std::optional<NoiseModel> noise(double rate) const {
        if (noise_kind.empty()) return std::nullopt;
        if (noise_kind == "depolarizing") return NoiseModel::depolarizing(rate, depol_targets);
        if (noise_kind == "amplitude-damping")
            return NoiseModel::amplitude_damping(rate, noise_target);
        throw ContractError("unknown noise kind '" + noise_kind + "'");
    }

    ChoiRepresentation channel(double rate) const {
        ChoiRepresentation c = choi_from_unitary(spec());
        auto nm = noise(rate);
        return nm ? attach_noise(c, *nm) : c;
    }

    std::string id(double rate) const {
        std::string s = gate;
        if (!cut.empty()) s += "[cut=" + cut + "]";
        if (!noise_kind.empty()) s += "+" + noise_kind + "(" + fmt9(rate) + ")";
        return s;
    }
};

std::vector<std::string> parse_quantities(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item != "gamma_ppt" && item != "ln_max" && item != "max_rains" && item != "w_hat")
            throw ContractError("unknown quantity '" + item + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ContractError("empty quantity list");
    return out;
}

bool wants(const std::vector<std::string>& qs, const char* name) {
    return std::find(qs.begin(), qs.end(), name) != qs.end();
}

MeasureReport partial_report(const ChoiRepresentation& choi, const std::string& id,
                             const std::vector<std::string>& qs, const MeasureOptions& opt) {
    MeasureReport rep;
    rep.channel_id = id;
    double nan = std::numeric_limits<double>::quiet_NaN();
    rep.gamma_ppt = rep.w_hat = rep.ln_max = rep.max_rains = nan;
    rep.bound_from_ln_max = rep.bound_from_max_rains = nan;
    if (wants(qs, "gamma_ppt")) {
        GammaResult g = gamma_ppt(choi, opt);
        rep.gamma_ppt = g.gamma;
        rep.diag_gamma = g.diag;
    }
    if (wants(qs, "ln_max")) {
        ValueResult v = ln_max(choi, opt);
        rep.ln_max = v.value;
        rep.diag_ln = v.diag;
        rep.bound_from_ln_max = std::pow(2.0, v.value);
    }
    if (wants(qs, "max_rains")) {
        RainsResult v = max_rains(choi, opt);
        rep.max_rains = v.value;
        rep.diag_rains = v.diag_primal;
        rep.bound_from_max_rains = std::pow(2.0, v.value);
    }
    if (wants(qs, "w_hat")) {
        WhatResult v = w_hat(choi, opt);
        rep.w_hat = v.value;
        rep.diag_what = v.diag;
    }
    return rep;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << text << "\n";
}

ComplexMatrix parse_state(const std::string& spec, int qubits) {
    int d = 1 << qubits;
    if (spec == "mixed") {
        ComplexMatrix rho = ComplexMatrix::identity(d);
        rho *= 1.0 / d;
        return rho;
    }
    if (static_cast<int>(spec.size()) != qubits)
        throw ContractError("state '" + spec + "' must have one symbol per qubit");
    std::vector<cxd> psi = {1.0};
    for (char ch : spec) {
        std::vector<cxd> q;
        const double s = 1.0 / std::sqrt(2.0);
        switch (ch) {
            case '0': q = {1.0, 0.0}; break;
            case '1': q = {0.0, 1.0}; break;
            case '+': q = {s, s}; break;
            case '-': q = {s, -s}; break;
            default: throw ContractError("state symbols are 0, 1, +, -");
        }
        std::vector<cxd> next(psi.size() * 2);
        for (size_t i = 0; i < psi.size(); ++i) {
            next[2 * i] = psi[i] * q[0];
            next[2 * i + 1] = psi[i] * q[1];
        }
        psi = std::move(next);
    }
    ComplexMatrix rho(d, true);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rho(i, j) = psi[i] * std::conj(psi[j]);
    return rho;
}

ComplexMatrix parse_observable(const std::string& spec, int qubits) {
    if (static_cast<int>(spec.size()) != qubits)
        throw ContractError("observable '" + spec + "' must have one Pauli per qubit");
    ComplexMatrix m;
    bool first = true;
    for (char ch : spec) {
        ComplexMatrix p(2, true);
        switch (ch) {
            case 'I': p(0, 0) = p(1, 1) = 1.0; break;
            case 'X': p(0, 1) = p(1, 0) = 1.0; break;
            case 'Y':
                p(0, 1) = cxd(0, -1);
                p(1, 0) = cxd(0, 1);
                break;
            case 'Z':
                p(0, 0) = 1.0;
                p(1, 1) = -1.0;
                break;
            default: throw ContractError("observable symbols are I, X, Y, Z");
        }
        m = first ? p : kron(m, p);
        first = false;
    }
    return m;
}

// State and observable strings are in left-to-right qubit order; gate
// input/output factors are ordered A-side qubits then B-side.
ComplexMatrix to_cut_order(const ComplexMatrix& op, const GateSpec& g, Role role) {
    int k = g.num_qubits();
    std::vector<Factor> f;
    for (int q = 0; q < k; ++q)
        f.push_back({"q" + std::to_string(q + 1), 2, g.cut.side_of_qubit[q], role});
    SystemLayout natural(f);
    std::vector<size_t> order;
    for (int q = 0; q < k; ++q)
        if (g.cut.side_of_qubit[q] == Side::A) order.push_back(q);
    for (int q = 0; q < k; ++q)
        if (g.cut.side_of_qubit[q] == Side::B) order.push_back(q);
    return permute_factors(op, natural, order);
}

int cmd_measure(const GateArgs& gargs, const std::string& quantities, double tol,
                const std::string& format, const std::string& output) {
    std::vector<std::string> qs = parse_quantities(quantities);
    MeasureOptions opt;
    opt.tol = tol;
    ChoiRepresentation choi = gargs.channel(gargs.noise_p);
    MeasureReport rep = partial_report(choi, gargs.id(gargs.noise_p), qs, opt);
    if (format == "csv")
        write_text(output, MeasureReport::csv_header() + "\n" + rep.csv_row(gargs.noise_p));
    else
        write_text(output, rep.to_json());
    return 0;
}

int cmd_sweep(const GateArgs& gargs, const std::string& quantities, double start, double stop,
              double step, double tol, const std::string& output, int jobs) {
    if (gargs.noise_kind.empty())
        throw ContractError("sweep requires --noise depolarizing or amplitude-damping");
    if (step <= 0.0 || stop < start) throw ContractError("grid requires start <= stop, step > 0");
    std::vector<double> grid;
    for (double v = start; v <= stop + 1e-12; v += step) grid.push_back(std::min(v, 1.0));
    if (grid.size() > 201) throw ContractError("grid too fine: more than 201 points");

    std::vector<std::string> qs = parse_quantities(quantities);
    MeasureOptions opt;
    opt.tol = tol;

    std::vector<std::string> rows(grid.size());
    std::vector<std::string> errors(grid.size());
    std::atomic<size_t> next{0};
    int njobs = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    njobs = std::max(1, std::min<int>(njobs, static_cast<int>(grid.size())));

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= grid.size()) break;
            try {
                ChoiRepresentation choi = gargs.channel(grid[i]);
                MeasureReport rep = partial_report(choi, gargs.id(grid[i]), qs, opt);
                rows[i] = rep.csv_row(grid[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < njobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // Rows are flushed in grid order up to the first failure.
    std::string csv = MeasureReport::csv_header();
    size_t done = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!errors[i].empty()) break;
        csv += "\n" + rows[i];
        ++done;
    }
    write_text(output, csv);

    json manifest;
    manifest["version"] = kVersion;
    manifest["tol"] = tol;
    manifest["gate"] = gargs.gate;
    manifest["cut"] = gargs.cut;
    manifest["noise"] = gargs.noise_kind;
    manifest["grid"] = {{"start", start}, {"stop", stop}, {"step", step}};
    manifest["quantities"] = qs;
    manifest["columns"] = MeasureReport::csv_header();
    manifest["rows_completed"] = done;
    if (!output.empty() && output != "-") {
        std::ofstream mf(output + ".manifest.json");
        mf << manifest.dump(2) << "\n";
    }

    for (size_t i = 0; i < grid.size(); ++i)
        if (!errors[i].empty()) {
            std::cerr << "sweep failed at grid point " << grid[i] << ": " << errors[i] << "\n";
            return kExitCompute;
        }
    return 0;
}

int cmd_knit_sim(const GateArgs& gargs, const std::string& state_spec, const std::string& obs_spec,
                 double delta, double epsilon, int trials, uint64_t seed, int parallel, double tol,
                 const std::string& output) {
    MeasureOptions opt;
    opt.tol = tol;
    GateSpec g = gargs.spec();
    ChoiRepresentation choi = gargs.channel(gargs.noise_p);

    int k = g.num_qubits();
    std::string st = state_spec.empty() ? ("+" + std::string(k - 1, '0')) : state_spec;
    std::string ob = obs_spec.empty() ? std::string(k, 'Z') : obs_spec;
    ComplexMatrix rho = to_cut_order(parse_state(st, k), g, Role::Input);
    ComplexMatrix obs = to_cut_order(parse_observable(ob, k), g, Role::Output);

    ChoiRepresentation target = choi;
    if (parallel > 1) {
        target = tensor_parallel(choi, parallel);
        rho = tensor_parallel_operator(rho, choi.layout.restricted(choi.input_labels()),
                                       parallel);
        obs = tensor_parallel_operator(obs, choi.layout.restricted(choi.output_labels()),
                                       parallel);
    }

    GammaResult gamma = gamma_ppt(target, opt);

    EstimationTask task;
    task.qpd = gamma.qpd;
    task.input_state = rho;
    task.observable = obs;
    task.delta = delta;
    task.epsilon = epsilon;
    task.seed = seed;
    CoverageResult cov = run_trials(task, trials);

    json j;
    j["gate"] = gargs.id(gargs.noise_p);
    j["state"] = st;
    j["observable"] = ob;
    j["parallel"] = parallel;
    j["gamma_ppt"] = gamma.gamma;
    if (parallel > 1) j["effective_overhead_per_copy"] = std::pow(gamma.gamma, 1.0 / parallel);
    j["kappa"] = task.qpd.kappa;
    j["delta"] = delta;
    j["epsilon"] = epsilon;
    j["seed"] = seed;
    j["rng"] = "splitmix64";
    j["trials"] = cov.trials;
    j["coverage"] = cov.coverage;
    j["within_delta"] = cov.within_delta;
    j["truth"] = cov.truth;
    j["samples_per_trial"] = cov.samples_per_trial;
    write_text(output, j.dump(2));
    return 0;
}

int cmd_certify(const GateArgs& gargs, const std::string& cert_file, bool bundled,
                const std::string& output) {
    ChoiRepresentation choi = gargs.channel(gargs.noise_p);
    ComplexMatrix y, r;
    if (bundled) {
        // Analytic dual pairs: Y = J/(2 d_AB) for CNOT-class, Y = J/d_AB for
        // SWAP-class, both with R = I/d_AB.
        double dab = choi.dim_in();
        double yscale = gargs.gate == "cnot" ? 1.0 / (2.0 * dab) : 1.0 / dab;
        y = choi.matrix;
        y *= yscale;
        r = ComplexMatrix::identity(choi.dim_in());
        r *= 1.0 / dab;
    } else {
        if (cert_file.empty()) throw ContractError("certify needs --certificate or --bundled");
        std::ifstream in(cert_file);
        if (!in) throw ContractError("cannot open '" + cert_file + "'");
        json j = json::parse(in);
        auto load = [](const json& node) {
            int d = node.at("dim").get<int>();
            const auto& entries = node.at("entries");
            if (static_cast<int>(entries.size()) != d * d)
                throw ContractError("certificate matrix: entries size != dim^2");
            ComplexMatrix m(d);
            size_t idx = 0;
            for (int i = 0; i < d; ++i)
                for (int k2 = 0; k2 < d; ++k2, ++idx)
                    m(i, k2) = cxd(entries[idx][0].get<double>(), entries[idx][1].get<double>());
            return m;
        };
        try {
            y = load(j.at("y"));
            r = load(j.at("r"));
        } catch (const json::exception& e) {
            throw ContractError(std::string("certificate parse failure: ") + e.what());
        }
    }

    CertificateCheck chk = verify_certificate(choi, y, r);
    std::string verdict = chk.feasible
                              ? "feasible, bound " + fmt9(chk.bound)
                              : "infeasible: " + chk.violated + " violation " + fmt9(chk.violation);
    write_text(output, verdict);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semidefinite lower bounds on circuit-knitting sampling overhead"};
    app.require_subcommand(1);

    double tol = default_tol();
    app.add_option("--tol", tol, "solver relative-gap tolerance")->check(CLI::Range(1e-10, 1e-4));

    GateArgs margs;
    std::string mq = "gamma_ppt,ln_max,max_rains,w_hat";
    std::string mformat = "json", moutput;
    CLI::App* measure = app.add_subcommand("measure", "compute bounds for one channel");
    margs.attach(measure);
    measure->add_option("--quantities", mq, "comma-separated subset of quantities");
    measure->add_option("--format", mformat, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    measure->add_option("--output,-o", moutput, "output path (default stdout)");

    GateArgs sargs;
    std::string sq = "gamma_ppt,ln_max,max_rains,w_hat";
    double sstart = 0.0, sstop = 1.0, sstep = 0.05;
    std::string soutput;
    int sjobs = 0;
    CLI::App* sweep = app.add_subcommand("sweep", "sweep a noise parameter grid to CSV");
    sargs.attach(sweep);
    sweep->add_option("--start", sstart, "grid start");
    sweep->add_option("--stop", sstop, "grid stop");
    sweep->add_option("--step", sstep, "grid step");
    sweep->add_option("--quantities", sq, "comma-separated subset of quantities");
    sweep->add_option("--output,-o", soutput, "CSV output path")->required();
    sweep->add_option("--jobs", sjobs, "worker pool size (default: processors)");

    GateArgs kargs;
    std::string kstate, kobs, koutput;
    double kdelta = 0.05, kepsilon = 0.05;
    int ktrials = 200, kparallel = 1;
    uint64_t kseed = 42;
    CLI::App* knit = app.add_subcommand("knit-sim", "sample the quasi-probability protocol");
    kargs.attach(knit);
    knit->add_option("--state", kstate, "input state per qubit (0,1,+,-) or 'mixed'");
    knit->add_option("--observable", kobs, "Pauli string observable");
    knit->add_option("--delta", kdelta, "target additive error");
    knit->add_option("--epsilon", kepsilon, "failure probability");
    knit->add_option("--trials", ktrials, "number of independent trials");
    knit->add_option("--seed", kseed, "master seed");
    knit->add_option("--parallel", kparallel, "number of parallel copies to cut jointly");
    knit->add_option("--output,-o", koutput, "output path (default stdout)");

    GateArgs cargs;
    std::string ccert, coutput;
    bool cbundled = false;
    CLI::App* certify = app.add_subcommand("certify", "check a dual certificate");
    cargs.attach(certify);
    certify->add_option("--certificate", ccert, "JSON file with matrices y and r");
    certify->add_flag("--bundled", cbundled, "use the built-in analytic certificate");
    certify->add_option("--output,-o", coutput, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (measure->parsed()) return cmd_measure(margs, mq, tol, mformat, moutput);
        if (sweep->parsed()) return cmd_sweep(sargs, sq, sstart, sstop, sstep, tol, soutput, sjobs);
        if (knit->parsed())
            return cmd_knit_sim(kargs, kstate, kobs, kdelta, kepsilon, ktrials, kseed, kparallel,
                                tol, koutput);
        if (certify->parsed()) return cmd_certify(cargs, ccert, cbundled, coutput);
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const LayoutError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "computation failed: " << e.what() << "\n";
        return kExitCompute;
    }
    return kExitUsage;
}
