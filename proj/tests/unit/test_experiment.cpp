#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wkam/config.hpp"
#include "wkam/experiment.hpp"

using namespace wkam;

namespace {

ExperimentConfig small_exp() {
    ExperimentConfig cfg = ExperimentConfig::from_string(
        "[model]\nn = 4\nlambda = 2\nwarp = exp\nwindow_lo = 1\nwindow_hi = 3\ngrid_h = 0.05\n"
        "[solver]\nh_t = 0.05\ncore_lo = 1.5\ncore_hi = 2.5\nworkers = 1\n"
        "[flow]\nbase_r = 1.5\nT = 1\n[riccati]\nbase_r = 1.5\nT = 0.5\ndt = 1e-3\n"
        "[rigidity]\nbase_r = 1.5\nend = right\nspan = 1\n");
    return cfg;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("grid and solver parameters come from the config") {
    const ExperimentConfig cfg = small_exp();
    const auto m = model_from_config(cfg);
    CHECK(m.warp_kind() == WarpKind::Exp);
    const RadialGrid grid = grid_from_config(cfg);
    CHECK(grid.lo == 1.0);
    CHECK(grid.hi() == doctest::Approx(3.0));
    const LaxOleinikParams p = solver_params_from_config(cfg, m, grid);
    CHECK(p.time_step == 0.05);
    CHECK_NOTHROW(p.validate(m, grid));
}

TEST_CASE("solve writes its artifacts and exits 0") {
    const auto dir = fresh_dir("wkam_unit_solve");
    std::ostringstream log;
    CHECK(run_command("solve", small_exp(), {dir.string(), {"f_overlay"}}, log) == kExitOk);
    CHECK(std::filesystem::exists(dir / "F.csv"));
    CHECK(std::filesystem::exists(dir / "solve.json"));
    CHECK(std::filesystem::exists(dir / "config.ini"));
    CHECK(std::filesystem::exists(dir / "plots" / "f_overlay.csv"));
    CHECK(std::filesystem::exists(dir / "plots" / "manifest.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("an iteration cap maps to exit 3") {
    const auto dir = fresh_dir("wkam_unit_cap");
    ExperimentConfig cfg = small_exp();
    cfg.set("solver.max_iters=1");
    std::ostringstream log;
    CHECK(run_command("solve", cfg, {dir.string(), {}}, log) == kExitNonConvergence);
    CHECK(std::filesystem::exists(dir / "F_history.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("configuration problems map to exit 2") {
    const auto dir = fresh_dir("wkam_unit_bad");
    std::ostringstream log;
    ExperimentConfig cfg = small_exp();
    cfg.set("solver.search_radius=0.001");
    CHECK(run_command("solve", cfg, {dir.string(), {}}, log) == kExitConfig);
    CHECK(run_command("solve", small_exp(), {dir.string(), {"histogram"}}, log) == kExitConfig);
    CHECK(run_command("transmogrify", small_exp(), {dir.string(), {}}, log) == kExitConfig);
    std::filesystem::remove_all(dir);
}

TEST_CASE("flow, riccati and rigidity run on the small config") {
    for (const char* sub : {"flow", "riccati", "rigidity"}) {
        const auto dir = fresh_dir(std::string("wkam_unit_") + sub);
        std::ostringstream log;
        CHECK_MESSAGE(run_command(sub, small_exp(), {dir.string(), {}}, log) == kExitOk, sub << ": " << log.str());
        CHECK(std::filesystem::exists(dir / (std::string(sub) + ".json")));
        std::filesystem::remove_all(dir);
    }
}
