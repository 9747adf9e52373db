#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wkam/artifacts.hpp"
#include "wkam/config.hpp"
#include "wkam/error.hpp"

using namespace wkam;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("defaults cover the whole schema") {
    const ExperimentConfig cfg;
    for (const auto& k : config_schema()) CHECK_NOTHROW(cfg.text(k.name));
    CHECK(cfg.integer("model.n") >= 3);
    CHECK(cfg.hash().size() == 8);
}

TEST_CASE("canonical text round-trips") {
    const ExperimentConfig cfg = ExperimentConfig::from_string("[model]\nn = 5\nwarp = exp\n[solver]\ntol = 1e-9\n");
    CHECK(cfg.integer("model.n") == 5);
    CHECK(cfg.text("model.warp") == "exp");
    CHECK(cfg.real("solver.tol") == 1e-9);
    const ExperimentConfig back = ExperimentConfig::from_string(cfg.to_ini());
    CHECK(back == cfg);
    CHECK(back.hash() == cfg.hash());
    CHECK(back.hash() != ExperimentConfig().hash());
}

TEST_CASE("overrides") {
    ExperimentConfig cfg;
    cfg.set("solver.max_iters=17");
    cfg.set("outputs.plots", "f_overlay, warp_fit");
    CHECK(cfg.integer("solver.max_iters") == 17);
    CHECK(cfg.list("outputs.plots") == std::vector<std::string>{"f_overlay", "warp_fit"});
    cfg.set("solver.conjugate", "true");
    CHECK(cfg.flag("solver.conjugate"));
    CHECK_THROWS_AS(cfg.set("solver.max_iters"), ConfigError);
    CHECK_THROWS_AS(cfg.set("solver.nope=1"), ConfigError);
}

TEST_CASE("invalid values are rejected with their origin") {
    auto message = [](const std::string& text) -> std::string {
        try {
            ExperimentConfig::from_string(text, "cfg.ini");
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message("[model]\nwarp = sinh\n").find("model.warp") != std::string::npos);
    CHECK(message("[model]\nn = 2\n").find("model.n") != std::string::npos);
    CHECK(message("[model]\nlambda = two\n").find("not a number") != std::string::npos);
    CHECK(message("[model]\nbogus = 1\n").find("cfg.ini") != std::string::npos);
    CHECK(message("[model\nn = 4\n").find("cfg.ini:1") != std::string::npos);
    CHECK(message("[solver]\nconjugate = maybe\n").find("flag") != std::string::npos);
    CHECK_THROWS_AS(ExperimentConfig::from_file("no/such/file.ini"), ConfigError);
}

TEST_CASE("from_file records the base directory") {
    const auto dir = std::filesystem::temp_directory_path() / "wkam_unit_cfg";
    std::filesystem::create_directories(dir);
    const auto path = dir / "c.ini";
    std::ofstream(path) << "[model]\nn = 3\n";
    const ExperimentConfig cfg = ExperimentConfig::from_file(path.string());
    CHECK(cfg.integer("model.n") == 3);
    CHECK(std::filesystem::equivalent(cfg.base_dir(), dir));
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-20) == "1e-20");
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(1.0 / 0.0) == "inf");
    CHECK(format_number(-1.0 / 0.0) == "-inf");
}

TEST_CASE("CSV and plot manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "wkam_unit_art";
    std::filesystem::remove_all(dir);
    write_csv((dir / "a.csv").string(), {"x", "y"}, {{1.0, 2.0}, {0.5, 0.25}});
    CHECK(slurp(dir / "a.csv") == "x,y\n1,0.5\n2,0.25\n");
    CHECK_THROWS(write_csv((dir / "b.csv").string(), {"x", "y"}, {{1.0}, {1.0, 2.0}}));

    PlotEmitter plots(dir.string());
    CHECK(plots.empty());
    CHECK_THROWS_AS(plots.emit("histogram", {{1.0}}, "test"), ConfigError);
    CHECK_THROWS_AS(plots.emit("warp_fit", {{1.0}}, "test"), ConfigError);
    plots.emit("warp_fit", {{0.0, 1.0}, {1.0, 2.0}, {1.0, 2.0}}, "unit test");
    plots.write_manifest();
    const std::string manifest = slurp(dir / "plots" / "manifest.json");
    CHECK(manifest.find("\"warp_fit\"") != std::string::npos);
    CHECK(manifest.find("\"rows\": 2") != std::string::npos);
    CHECK(slurp(dir / "plots" / "warp_fit.csv").rfind("t,w_rec,w_fit\n", 0) == 0);
    std::filesystem::remove_all(dir);
}
