#include <cstring>
#include <iostream>

#include "conewidth/acceptance.hpp"

int main(int argc, char** argv) {
    conewidth::AcceptanceOptions opts;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) opts.skip_slow = true;
        else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) opts.out_dir = argv[++i];
    }
    return conewidth::run_acceptance(std::cout, opts) == 0 ? 0 : 1;
}
