#ifndef QISD_RUNNER_HPP
#define QISD_RUNNER_HPP

#include <string>
#include <vector>

#include "qisd/config.hpp"

namespace qisd {

struct RunContext {
    std::string out_dir = "out";
    int threads = 1;
    bool quiet = false;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

// Mutual-consistency checks between the reference solvers and the path-weight
// machinery for the local-drag white-noise benchmark system.
std::vector<CheckResult> oracle_consistency_checks(double mass, double omega, double gamma,
                                                   double kBT);

// Executes one subcommand; returns the process exit code and writes outputs
// plus a JSON-lines manifest under ctx.out_dir.
int run_subcommand(const std::string& name, const Config& cfg, const RunContext& ctx);

} // namespace qisd

#endif
