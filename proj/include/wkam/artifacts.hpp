#pragma once

#include <map>
#include <string>
#include <vector>

namespace wkam {

/// Shortest round-trip decimal form of x ("inf", "-inf", "nan" for non-finite values).
std::string format_number(double x);

/// Column-major CSV with one header row. Columns must have equal length.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

void write_text(const std::string& path, const std::string& text);

/// Plot kinds and their column names.
const std::map<std::string, std::vector<std::string>>& plot_kinds();

/// Writes plot-ready CSV files into <dir>/plots and a manifest.json naming each series.
class PlotEmitter {
public:
    explicit PlotEmitter(std::string dir);

    /// Throws ConfigError for an unknown kind or a column count that does not match it.
    void emit(const std::string& kind, const std::vector<std::vector<double>>& columns, const std::string& source);
    /// Sorted-key manifest of everything emitted so far; nothing is written when empty.
    void write_manifest() const;
    bool empty() const { return entries_.empty(); }

private:
    struct Entry {
        std::string file;
        std::string source;
        std::size_t rows = 0;
    };
    std::string dir_;
    std::map<std::string, Entry> entries_;
};

}  // namespace wkam
