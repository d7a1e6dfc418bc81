#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "msmilp/oracle.hpp"
#include "msmilp/threads.hpp"

using namespace msmilp;

namespace {

double run(const TwoStageInstance& inst, bool parallel, std::string& csv) {
    OracleOptions opt;
    opt.parallel = parallel;
    auto t0 = std::chrono::steady_clock::now();
    OracleReport rep = oracle_solve(inst, RiskMode::Optimistic, opt);
    auto t1 = std::chrono::steady_clock::now();
    csv = rep.xi_csv() + rep.phi_csv();
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    int seeds = 12;
    std::string file;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--seeds" && i + 1 < argc) {
            seeds = std::atoi(argv[++i]);
        } else if (a == "--file" && i + 1 < argc) {
            file = argv[++i];
        } else {
            std::fprintf(stderr, "usage: bench_oracle [--seeds N] [--file instance.json]\n");
            return 4;
        }
    }

    std::printf("workers: %d\n", worker_count());
    std::printf("%-22s %10s %10s %8s %6s\n", "workload", "serial_s", "parallel_s", "speedup", "agree");

    double ser_total = 0, par_total = 0;
    bool all_agree = true;
    RandomDims dims;
    dims.n1 = 3;
    dims.n2 = 3;
    dims.scenarios = 3;
    for (int s = 1; s <= seeds; ++s) {
        TwoStageInstance inst = random_instance(static_cast<unsigned long>(s), dims);
        std::string a, b;
        ser_total += run(inst, false, a);
        par_total += run(inst, true, b);
        all_agree = all_agree && a == b;
    }
    std::printf("%-22s %10.3f %10.3f %8.2f %6s\n",
                ("random x" + std::to_string(seeds)).c_str(), ser_total, par_total,
                par_total > 0 ? ser_total / par_total : 0.0, all_agree ? "yes" : "NO");

    if (!file.empty()) {
        TwoStageInstance inst = load_instance(file);
        std::string a, b;
        double ser = run(inst, false, a);
        double par = run(inst, true, b);
        bool agree = a == b;
        all_agree = all_agree && agree;
        std::printf("%-22s %10.3f %10.3f %8.2f %6s\n", file.c_str(), ser, par,
                    par > 0 ? ser / par : 0.0, agree ? "yes" : "NO");
    }
    return all_agree ? 0 : 1;
}
