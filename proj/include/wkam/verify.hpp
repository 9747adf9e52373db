#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wkam/config.hpp"

namespace wkam {

/// One measured quantity against its tolerance. relation is "<=" or ">=".
struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string relation = "<=";
    bool pass = false;
};

/// value <= tol, failing on NaN.
Check check_le(std::string name, double value, double tol);
/// value >= bound, failing on NaN.
Check check_ge(std::string name, double value, double bound);

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<Check> checks;
    std::string error;     ///< message of an exception that aborted the criterion
    double seconds = 0.0;  ///< wall time; not part of the report

    bool pass() const;
};

struct VerificationReport {
    std::vector<CriterionResult> criteria;
    std::string config_hash;

    bool pass() const;
    /// Sorted-key JSON with the environment stamp; no timings.
    std::string to_json() const;
};

/// Number of acceptance criteria.
constexpr int kCriteria = 10;

/// Runs the acceptance checks with the tolerances and seeds of a config.
///
/// The exp-model weak KAM solution is shared between criteria 4 and 6 and computed on
/// first use.
class Verifier {
public:
    explicit Verifier(ExperimentConfig cfg);
    ~Verifier();

    CriterionResult run(int id);
    /// Runs the given criteria (all when empty) in increasing order.
    VerificationReport run_all(const std::vector<int>& ids = {},
                               const std::function<void(const CriterionResult&)>& progress = {});

private:
    struct Cache;
    ExperimentConfig cfg_;
    std::unique_ptr<Cache> cache_;
};

/// Compiler, library versions and build flags.
std::string environment_stamp();

}  // namespace wkam
