#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qknit/channel.hpp"

// Integration tests driving the installed binary.  The path comes from the
// build system.
#ifndef QKNIT_BIN
#define QKNIT_BIN "./qknit"
#endif

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = std::string(QKNIT_BIN) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("measure cnot emits gamma 3") {
    RunResult r = run("measure --gate cnot --quantities gamma_ppt --format csv");
    CHECK(r.exit_code == 0);
    auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(std::stod(rows[1][1]) - 3.0) < 1e-5);
}

TEST_CASE("measure swap emits gamma 7") {
    RunResult r = run("measure --gate swap --quantities gamma_ppt --format csv");
    CHECK(r.exit_code == 0);
    auto rows = parse_csv(r.out);
    CHECK(std::abs(std::stod(rows[1][1]) - 7.0) < 1e-5);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("measure --gate nosuchgate").exit_code == 1);
    CHECK(run("nosuchcommand").exit_code == 1);
    CHECK(run("sweep --gate cnot -o /tmp/x.csv").exit_code == 1);  // missing --noise
    CHECK(run("measure --gate cnot --quantities bogus").exit_code == 1);
}

TEST_CASE("sweep CSV round-trips through the schema and is byte-stable") {
    std::string out = "/tmp/qknit_test_sweep.csv";
    RunResult r = run("sweep --gate cnot --noise depolarizing --start 0 --stop 0.4 --step 0.2 "
                      "--quantities gamma_ppt,ln_max,max_rains,w_hat -o " + out);
    CHECK(r.exit_code == 0);
    std::string first = slurp(out);
    auto rows = parse_csv(first);
    REQUIRE(rows.size() == 4);  // header + 3 points
    CHECK(rows[0].size() == 9);
    CHECK(rows[0][0] == "parameter");
    for (size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 9);
        // numeric columns parse back
        for (size_t c = 0; c < 9; ++c) CHECK_NOTHROW((void)std::stod(rows[i][c]));
    }
    CHECK(std::abs(std::stod(rows[1][1]) - 3.0) < 1e-5);

    // companion manifest exists and names the column schema
    std::string manifest = slurp(out + ".manifest.json");
    CHECK(manifest.find("\"columns\"") != std::string::npos);
    CHECK(manifest.find("parameter,gamma_ppt") != std::string::npos);

    // re-running with identical arguments gives byte-identical output
    RunResult r2 = run("sweep --gate cnot --noise depolarizing --start 0 --stop 0.4 --step 0.2 "
                       "--quantities gamma_ppt,ln_max,max_rains,w_hat -o " + out);
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out) == first);
}

TEST_CASE("knit-sim produces coverage json") {
    RunResult r = run("knit-sim --gate cnot --trials 25 --seed 7");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"coverage\"") != std::string::npos);
    CHECK(r.out.find("\"splitmix64\"") != std::string::npos);
    // deterministic rerun
    RunResult r2 = run("knit-sim --gate cnot --trials 25 --seed 7");
    CHECK(r2.out == r.out);
}

TEST_CASE("certify bundled certificates") {
    RunResult cx = run("certify --gate cnot --bundled");
    CHECK(cx.exit_code == 0);
    CHECK(cx.out.find("feasible, bound 2") != std::string::npos);
    RunResult sw = run("certify --gate swap --bundled");
    CHECK(sw.exit_code == 0);
    CHECK(sw.out.find("feasible, bound 4") != std::string::npos);
}

TEST_CASE("certify flags a scaled-up certificate as infeasible") {
    // Y = J/2 (too big), R = I/16: the LMI fails by 1 - 1/16
    qknit::ChoiRepresentation cx =
        qknit::choi_from_unitary(qknit::GateSpec::library("cnot"));
    auto dump = [](const qknit::ComplexMatrix& m) {
        std::string s = "{\"dim\": " + std::to_string(m.dim()) + ", \"entries\": [";
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j) {
                if (i + j > 0) s += ",";
                s += "[" + std::to_string(m(i, j).real()) + "," +
                     std::to_string(m(i, j).imag()) + "]";
            }
        return s + "]}";
    };
    qknit::ComplexMatrix y = cx.matrix;
    y *= 0.5;
    qknit::ComplexMatrix r = qknit::ComplexMatrix::identity(4);
    r *= 1.0 / 16.0;
    std::ofstream f("/tmp/qknit_bad_cert.json");
    f << "{\"y\": " << dump(y) << ", \"r\": " << dump(r) << "}";
    f.close();
    RunResult bad = run("certify --gate cnot --certificate /tmp/qknit_bad_cert.json");
    CHECK(bad.exit_code == 0);  // a verdict, not a failure
    CHECK(bad.out.find("infeasible") != std::string::npos);
    CHECK(bad.out.find("0.9375") != std::string::npos);

    // malformed certificate files are usage errors
    std::ofstream g("/tmp/qknit_malformed_cert.json");
    g << "{\"y\": {\"dim\": 16, \"entries\": []}, \"r\": {\"dim\": 4, \"entries\": []}}";
    g.close();
    RunResult mal = run("certify --gate cnot --certificate /tmp/qknit_malformed_cert.json");
    CHECK(mal.exit_code == 1);
}

TEST_CASE("custom unitary file") {
    // a custom 2-qubit gate: SWAP written out explicitly
    std::ofstream f("/tmp/qknit_custom_swap.json");
    f << "{\"dim\": 4, \"entries\": [";
    const char* rows =
        "[1,0],[0,0],[0,0],[0,0],"
        "[0,0],[0,0],[1,0],[0,0],"
        "[0,0],[1,0],[0,0],[0,0],"
        "[0,0],[0,0],[0,0],[1,0]";
    f << rows << "]}";
    f.close();
    RunResult r = run("measure --gate custom --unitary /tmp/qknit_custom_swap.json "
                      "--quantities gamma_ppt --format csv");
    CHECK(r.exit_code == 0);
    auto rows2 = parse_csv(r.out);
    REQUIRE(rows2.size() == 2);
    CHECK(std::abs(std::stod(rows2[1][1]) - 7.0) < 1e-5);
}
