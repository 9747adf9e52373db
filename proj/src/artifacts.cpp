#include "wkam/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wkam/error.hpp"

namespace wkam {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw PreconditionError("write_csv: header and column count differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw PreconditionError("write_csv: ragged columns in " + path);
    std::string text;
    for (std::size_t j = 0; j < header.size(); ++j) text += (j ? "," : "") + header[j];
    text += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) text += (j ? "," : "") + format_number(columns[j][i]);
        text += '\n';
    }
    write_text(path, text);
}

const std::map<std::string, std::vector<std::string>>& plot_kinds() {
    static const std::map<std::string, std::vector<std::string>> kinds = {
        {"f_overlay", {"r", "F_numeric", "F_oracle"}},
        {"riccati_margin", {"t", "margin"}},
        {"warp_fit", {"t", "w_rec", "w_fit"}},
    };
    return kinds;
}

PlotEmitter::PlotEmitter(std::string dir) : dir_(std::move(dir)) {}

void PlotEmitter::emit(const std::string& kind, const std::vector<std::vector<double>>& columns,
                       const std::string& source) {
    const auto it = plot_kinds().find(kind);
    if (it == plot_kinds().end()) throw ConfigError("unknown plot kind '" + kind + "'");
    if (columns.size() != it->second.size())
        throw ConfigError("plot kind " + kind + " takes " + std::to_string(it->second.size()) + " columns");
    const std::string file = kind + ".csv";
    write_csv((std::filesystem::path(dir_) / "plots" / file).string(), it->second, columns);
    entries_[kind] = {file, source, columns.front().size()};
}

void PlotEmitter::write_manifest() const {
    if (entries_.empty()) return;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [kind, e] : entries_) {
        j[kind] = {{"file", e.file}, {"columns", plot_kinds().at(kind)}, {"rows", e.rows}, {"source", e.source}};
    }
    write_text((std::filesystem::path(dir_) / "plots" / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace wkam
