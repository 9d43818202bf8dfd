#pragma once

#include <string>
#include <vector>

#include "nlq/cli_io.hpp"

namespace nlq {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
    bool lower_bound = false;  // pass means value >= tolerance
};

std::vector<CheckResult> verify_algebra(const RunConfig& c);
std::vector<CheckResult> verify_coefficients(const RunConfig& c);
std::vector<CheckResult> verify_identities(const RunConfig& c);
// suite: algebra | coefficients | identities | all. Throws ConfigError otherwise.
std::vector<CheckResult> verify_suite(const std::string& suite, const RunConfig& c);

// "PASS name value <= tol (detail)", or ">=" for lower bounds
std::string format_check(const CheckResult& r);

// R(x) diag(lambda(x)) R(x)^T with a nondegenerate spectrum everywhere.
QField manufactured_biaxial_field(const Grid2D& g);

}  // namespace nlq
