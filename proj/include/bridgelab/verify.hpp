#pragma once

#include <string>
#include <vector>

namespace bridgelab {

// One property check: the largest error observed and the bound it must
// stay under. Rows print as a fixed-width table via verify_table.
struct VerifyRow {
    std::string name;
    double max_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Suites: "oracle" (discrete h-transform identities), "gradients" (scores
// vs finite differences), "reconstruction" (inversion replay and no-op edit
// collapse), "all" (everything). Unknown names are a config error.
std::vector<VerifyRow> verify_suite(const std::string& suite);

bool all_pass(const std::vector<VerifyRow>& rows);

std::string verify_table(const std::vector<VerifyRow>& rows);

}  // namespace bridgelab
