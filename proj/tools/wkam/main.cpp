// wkam <subcommand> --config <path> [--set key=value ...] [--plot kind ...] --out <dir>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wkam/config.hpp"
#include "wkam/error.hpp"
#include "wkam/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Weak KAM workbench on warped-product model manifolds"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides, plots;
    for (const char* name : {"solve", "flow", "riccati", "rigidity", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "override, section.key=value")->take_all();
        sub->add_option("--out", out_dir, "artifact directory (default: outputs.directory)");
        sub->add_option("--plot", plots, "plot data kinds (f_overlay, riccati_margin, warp_fit)")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wkam::kExitConfig;
    }

    wkam::ExperimentConfig cfg;
    try {
        cfg = wkam::ExperimentConfig::from_file(config_path);
        for (const auto& o : overrides) cfg.set(o);
    } catch (const wkam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return wkam::kExitConfig;
    }
    return wkam::run_command(app.get_subcommands().front()->get_name(), cfg, {out_dir, plots}, std::cerr);
}
