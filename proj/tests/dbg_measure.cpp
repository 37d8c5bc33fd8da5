// Scratch driver for measure debugging (not registered with ctest).
#include <cstdio>
#include <cstring>

#include "qknit/measures.hpp"

using namespace qknit;

int main(int argc, char** argv) {
    std::string gate = argc > 1 ? argv[1] : "cswap";
    std::string cut = argc > 2 ? argv[2] : "";
    std::string what = argc > 3 ? argv[3] : "rains";
    ChoiRepresentation c = choi_from_unitary(GateSpec::library(gate, cut));
    MeasureOptions opt;
    try {
        if (what == "rains") {
            RainsResult r = max_rains(c, opt);
            std::printf("%s: primal %.8f dual %.8f\n", gate.c_str(), r.primal_gamma,
                        r.dual_gamma);
        } else if (what == "gamma") {
            std::printf("%s: gamma %.8f\n", gate.c_str(), gamma_ppt(c, opt).gamma);
        } else if (what == "ln") {
            std::printf("%s: ln %.8f\n", gate.c_str(), ln_max(c, opt).value);
        } else {
            WhatResult w = w_hat(c, opt);
            std::printf("%s: what %.8f dual %.8f\n", gate.c_str(), w.value, w.dual_value);
        }
    } catch (const std::exception& e) {
        std::printf("EXCEPTION: %s\n", e.what());
        return 1;
    }
    return 0;
}
