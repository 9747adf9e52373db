#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wkam {

/// One documented configuration key.
struct ConfigKey {
    enum class Kind { Real, Integer, Text, Choice, Flag };
    std::string name;  ///< "section.key"
    Kind kind = Kind::Real;
    std::string default_value;
    std::string doc;
    double min = -1e308;                ///< inclusive bound for Real and Integer
    double max = 1e308;
    std::vector<std::string> choices;   ///< Choice only
};

/// Every key the tool understands, grouped by section.
const std::vector<ConfigKey>& config_schema();

/// Experiment settings read from an INI-style file: "[section]" headers and "key = value"
/// lines. Unknown sections or keys, malformed numbers and out-of-range values raise
/// ConfigError naming the file line or the key.
class ExperimentConfig {
public:
    /// All keys at their defaults.
    ExperimentConfig();

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text, const std::string& origin = "<string>");

    /// Applies "section.key=value".
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    double real(const std::string& key) const;
    long integer(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    bool flag(const std::string& key) const;
    /// Comma-separated list, blanks dropped.
    std::vector<std::string> list(const std::string& key) const;

    /// Canonical text: sections and keys sorted, every key written.
    std::string to_ini() const;
    /// CRC-32 of to_ini(), as 8 hex digits.
    std::string hash() const;

    /// Directory of the file the config came from, for relative paths ("" otherwise).
    const std::string& base_dir() const { return base_dir_; }

    bool operator==(const ExperimentConfig& other) const { return values_ == other.values_; }

private:
    std::map<std::string, std::string> values_;
    std::string base_dir_;
};

}  // namespace wkam
