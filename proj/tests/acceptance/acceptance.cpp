// Acceptance run: one line per criterion, then a determinism line comparing two full reports.
#include <cstdio>
#include <cstring>
#include <string>

#include "wkam/config.hpp"
#include "wkam/verify.hpp"

namespace {

// Wall-clock budgets in seconds, criteria 1..9.
constexpr double kBudget[9] = {1, 1, 1, 60, 10, 120, 10, 5, 10};

}  // namespace

int main(int argc, char** argv) {
    wkam::ExperimentConfig cfg;
    if (argc > 1) cfg = wkam::ExperimentConfig::from_file(argv[1]);

    bool ok = true;
    wkam::Verifier first(cfg);
    const wkam::VerificationReport rep = first.run_all({1, 2, 3, 4, 5, 6, 7, 8, 9}, [&](const wkam::CriterionResult& c) {
        const bool in_time = c.seconds < kBudget[c.id - 1];
        const bool pass = c.pass() && in_time;
        ok = ok && pass;
        std::printf("criterion %2d %-32s %s  %7.2fs (budget %g s)\n", c.id, c.title.c_str(), pass ? "PASS" : "FAIL",
                    c.seconds, kBudget[c.id - 1]);
        for (const auto& k : c.checks)
            std::printf("    %-44s %s %-12.4g %s %-10.3g %s\n", k.name.c_str(), "value", k.value, k.relation.c_str(),
                        k.tolerance, k.pass ? "ok" : "FAIL");
        if (!c.error.empty()) std::printf("    error: %s\n", c.error.c_str());
        std::fflush(stdout);
    });

    // Criterion 10: the report of a second, independent run must match byte for byte.
    wkam::Verifier second(cfg);
    const std::string a = rep.to_json();
    const std::string b = second.run_all({1, 2, 3, 4, 5, 6, 7, 8, 9}).to_json();
    const wkam::CriterionResult inner = second.run(10);
    const bool same = a == b && inner.pass();
    ok = ok && same;
    std::printf("criterion 10 %-32s %s  (reports %zu bytes, %s; in-report check %s)\n", "determinism",
                same ? "PASS" : "FAIL", a.size(), a == b ? "identical" : "differ", inner.pass() ? "pass" : "fail");
    return ok ? 0 : 1;
}
