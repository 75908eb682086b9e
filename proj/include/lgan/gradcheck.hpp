#pragma once

#include <string>
#include <vector>

namespace lgan {

struct GradCheckResult {
    std::string op;
    std::string mode; // "32-bit" or "64-bit"
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Known suite names accepted by run_gradchecks.
std::vector<std::string> gradcheck_op_names();

// Central finite differences (eps = 1e-3) against the tape's gradients, in
// 32-bit (tol 1e-3) and 64-bit (tol 1e-6) mode. An empty filter runs
// everything. `mutate` deliberately corrupts each analytic gradient before
// comparison so the checker itself can be tested.
std::vector<GradCheckResult> run_gradchecks(const std::vector<std::string>& ops = {},
                                            bool mutate = false);

std::string gradcheck_table(const std::vector<GradCheckResult>& results);

} // namespace lgan
