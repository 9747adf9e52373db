#include "wkam/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wkam/error.hpp"

namespace wkam {

namespace {

using K = ConfigKey::Kind;

ConfigKey real(std::string name, std::string def, std::string doc, double lo = -1e308, double hi = 1e308) {
    return {std::move(name), K::Real, std::move(def), std::move(doc), lo, hi, {}};
}
ConfigKey integer(std::string name, std::string def, std::string doc, double lo, double hi = 1e18) {
    return {std::move(name), K::Integer, std::move(def), std::move(doc), lo, hi, {}};
}
ConfigKey choice(std::string name, std::string def, std::string doc, std::vector<std::string> opts) {
    return {std::move(name), K::Choice, std::move(def), std::move(doc), 0, 0, std::move(opts)};
}
ConfigKey text(std::string name, std::string def, std::string doc) {
    return {std::move(name), K::Text, std::move(def), std::move(doc), 0, 0, {}};
}
ConfigKey flag(std::string name, std::string def, std::string doc) {
    return {std::move(name), K::Flag, std::move(def), std::move(doc), 0, 0, {}};
}

std::vector<ConfigKey> build_schema() {
    constexpr double tiny = 1e-300;
    return {
        integer("model.n", "4", "dimension", 3, 64),
        real("model.lambda", "2", "eigenvalue", tiny),
        choice("model.warp", "exp", "warp factor", {"cosh", "exp", "custom"}),
        text("model.warp_file", "", "two-column r w(r) samples for warp = custom"),
        real("model.c_V", "0.5", "potential coefficient, V = c_V w^{-(2n-2)}", tiny),
        real("model.window_lo", "-1", "left edge of the solver window"),
        real("model.window_hi", "4", "right edge of the solver window"),
        real("model.grid_h", "0.005", "grid spacing", tiny),

        real("solver.h_t", "0.01", "time step of one Lax-Oleinik step", tiny),
        real("solver.search_radius", "0", "max hop per step; 0 picks 1.05 sqrt(2 V_max) h_t", 0.0),
        real("solver.tol", "1e-7", "sup-norm Cauchy tolerance", tiny),
        integer("solver.max_iters", "200000", "iteration cap", 1),
        choice("solver.seed", "zero", "initial datum", {"zero", "left", "right"}),
        real("solver.seed_width", "0.5", "width of the seeded strip for left/right seeds", 0.0),
        flag("solver.conjugate", "false", "also compute the conjugate solution G"),
        choice("solver.candidates", "segments", "inner minimization set", {"segments", "nodes"}),
        choice("solver.rule", "trapezoid", "potential quadrature", {"trapezoid", "midpoint"}),
        real("solver.monotone_tol", "1e-3", "allowed decrease per conjugate iteration", 0.0),
        integer("solver.workers", "0", "threads; 0 reads WKAM_WORKERS, then the hardware count", 0, 1024),
        real("solver.core_lo", "0", "left edge of the region where residuals are reported"),
        real("solver.core_hi", "3", "right edge of that region"),

        real("flow.base_r", "0", "initial radius of the zero-energy orbit"),
        real("flow.T", "10", "duration", tiny),
        real("flow.dt", "1e-3", "time step", tiny),
        choice("flow.direction", "increasing", "initial radial direction", {"increasing", "decreasing"}),

        real("riccati.base_r", "0", "initial radius"),
        real("riccati.T", "2", "duration", tiny),
        real("riccati.dt", "1e-4", "time step", tiny),
        choice("riccati.direction", "increasing", "initial radial direction", {"increasing", "decreasing"}),
        choice("riccati.s0", "rigid", "initial S: rigid Hessian data, plus an isotropic or random symmetric shift",
               {"rigid", "isotropic", "random"}),
        real("riccati.s0_scale", "0.3", "size of the shift", 0.0),
        integer("riccati.seed", "1", "random seed for s0 = random", 0),
        flag("riccati.rescale", "true", "also report b and the comparison solution in unit-speed time"),
        choice("riccati.k", "consistent", "exponent of the comparison solution", {"consistent", "printed"}),

        real("rigidity.base_r", "0", "base point"),
        choice("rigidity.end", "right", "end the calibrating curves come from", {"left", "right"}),
        real("rigidity.span", "2", "unit-speed flow time on each side", 1.0),
        real("rigidity.spacing", "0.01", "sample spacing of the flow series", tiny),
        real("rigidity.dt", "1e-3", "Hamiltonian time step", tiny),

        text("outputs.directory", "out", "artifact directory when --out is absent"),
        text("outputs.formats", "csv,json", "artifact formats to write"),
        text("outputs.plots", "f_overlay,riccati_margin,warp_fit", "plot data kinds to emit when applicable"),

        real("tolerances.eigen_residual", "1e-3", "sup |Delta g + lambda g| at h = 0.01", 0.0),
        real("tolerances.eigen_order", "1.8", "minimal observed order under one halving", 0.0),
        real("tolerances.ricci_margin", "1e-12", "allowed negative Ricci margin; also |margin| for exp", 0.0),
        real("tolerances.energy", "1e-8", "max |H| along the zero-energy exp orbit", 0.0),
        real("tolerances.position", "1e-6", "position error at t = 1", 0.0),
        real("tolerances.wkam_sup", "0.02", "sup |F - oracle| on the core", 0.0),
        real("tolerances.hj", "2e-2", "sup |HJ residual| on the core", 0.0),
        real("tolerances.harmonic", "0.05", "sup |Delta F| on smooth core cells", 0.0),
        real("tolerances.operator", "1e-12", "monotonicity, shift and brute-force discrepancies", 0.0),
        real("tolerances.fixed_point", "1e-7", "one extra step after convergence", 0.0),
        real("tolerances.conjugate_exp", "0.04", "sup |F + G| on the exp core", 0.0),
        real("tolerances.conjugate_cosh", "0.03", "sup |F + G - line action| on the cosh core", 0.0),
        real("tolerances.trace_rigid", "1e-5", "|trace inequality| on rigid orbits", 0.0),
        real("tolerances.jacobi_riccati", "1e-6", "S from B versus S from the Riccati flow (relative)", 0.0),
        real("tolerances.trace_perturbed", "1e-5", "max trace inequality on the perturbed warp", 0.0),
        real("tolerances.bbar_ode", "1e-8", "ODE residual of the comparison solution", 0.0),
        real("tolerances.comparison", "1e-6", "allowed excess of b over the comparison solution", 0.0),
        real("tolerances.blowup", "1e-6", "error of the n = 3 blow-up time", 0.0),
        real("tolerances.fundamental", "1e-10", "closed-form M versus integrated M, and det M - 1", 0.0),
        real("tolerances.flow_g", "1e-6", "relative error of g along the flow", 0.0),
        real("tolerances.b_diag", "1e-6", "relative deviation of diag B", 0.0),
        real("tolerances.b_offdiag", "1e-8", "off-diagonal B", 0.0),
        real("tolerances.fit_residual", "1e-5", "warp fit residual", 0.0),
        real("tolerances.fit_params", "1e-4", "error of the fitted lambda and c", 0.0),

        integer("verify.seed", "20240601", "seed of every randomized check", 0),
        integer("verify.fields", "100", "random fields per operator law", 1, 100000),
        integer("verify.comparisons", "20", "random initial conditions for the comparison check", 1, 100000),
    };
}

const ConfigKey* find_key(const std::string& name) {
    for (const auto& k : config_schema())
        if (k.name == name) return &k;
    return nullptr;
}

double parse_number(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ConfigError(key + ": '" + value + "' is not a number");
    return v;
}

std::string checked(const ConfigKey& k, std::string value) {
    boost::algorithm::trim(value);
    switch (k.kind) {
        case K::Real:
        case K::Integer: {
            const double v = parse_number(k.name, value);
            if (k.kind == K::Integer && v != static_cast<double>(static_cast<long long>(v)))
                throw ConfigError(k.name + ": '" + value + "' is not an integer");
            if (v < k.min || v > k.max)
                throw ConfigError(k.name + ": " + value + " outside [" + std::to_string(k.min) + ", " +
                                  std::to_string(k.max) + "]");
            break;
        }
        case K::Choice:
            if (std::find(k.choices.begin(), k.choices.end(), value) == k.choices.end()) {
                std::string all;
                for (const auto& c : k.choices) all += (all.empty() ? "" : "|") + c;
                throw ConfigError(k.name + ": unknown value '" + value + "' (expected " + all + ")");
            }
            break;
        case K::Flag:
            if (value == "1" || value == "yes" || value == "on") value = "true";
            if (value == "0" || value == "no" || value == "off") value = "false";
            if (value != "true" && value != "false") throw ConfigError(k.name + ": '" + value + "' is not a flag");
            break;
        case K::Text:
            break;
    }
    return value;
}

const std::string& lookup(const std::map<std::string, std::string>& values, const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("unknown config key " + key);
    return it->second;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = build_schema();
    return schema;
}

ExperimentConfig::ExperimentConfig() {
    for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = from_string(ss.str(), path);
    cfg.base_dir_ = std::filesystem::absolute(path).parent_path().string();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text, const std::string& origin) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(origin + ": key '" + section + "' outside any section");
        for (const auto& [key, node] : body) {
            const std::string name = section + "." + key;
            if (!find_key(name)) throw ConfigError(origin + ": unknown key " + name);
            try {
                cfg.set(name, node.get_value<std::string>());
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ": " + e.what());
            }
        }
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
    std::string key = assignment.substr(0, eq);
    boost::algorithm::trim(key);
    set(key, assignment.substr(eq + 1));
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const ConfigKey* k = find_key(key);
    if (!k) throw ConfigError("unknown config key " + key);
    values_[key] = checked(*k, value);
}

double ExperimentConfig::real(const std::string& key) const { return parse_number(key, lookup(values_, key)); }

long ExperimentConfig::integer(const std::string& key) const {
    return static_cast<long>(parse_number(key, lookup(values_, key)));
}

const std::string& ExperimentConfig::text(const std::string& key) const { return lookup(values_, key); }

bool ExperimentConfig::flag(const std::string& key) const { return lookup(values_, key) == "true"; }

std::vector<std::string> ExperimentConfig::list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(lookup(values_, key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        boost::algorithm::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string ExperimentConfig::to_ini() const {
    std::string out, current;
    for (const auto& [name, value] : values_) {
        const auto dot = name.find('.');
        const std::string section = name.substr(0, dot);
        if (section != current) {
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
            current = section;
        }
        out += name.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

std::string ExperimentConfig::hash() const {
    boost::crc_32_type crc;
    const std::string s = to_ini();
    crc.process_bytes(s.data(), s.size());
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
    return buf;
}

}  // namespace wkam
