#pragma once

// Flat `key = value` configuration text. Keys carry dotted section prefixes
// (`sece.l_sece`); `#` starts a comment. Values are SI floats, integers,
// booleans (true/false) or bare words.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pehsim {

class Config {
public:
    Config() = default;

    /// Throws ConfigError on malformed lines or duplicate keys.
    [[nodiscard]] static Config parse(std::string_view text, std::string source = "<string>");
    /// Reads a file; throws IoError when it cannot be opened.
    [[nodiscard]] static Config load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key) const { return entries_.contains(key); }
    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const;
    /// Line number of a key in the source text, 0 when set programmatically.
    [[nodiscard]] int line_of(const std::string& key) const;
    void set(const std::string& key, std::string value);

    [[nodiscard]] std::vector<std::string> keys() const;
    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    /// Directory relative paths in the config resolve against.
    [[nodiscard]] const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;
    std::string source_ = "<string>";
    std::filesystem::path base_dir_ = ".";
};

// Typed value conversion; errors name the key and the source location.
[[nodiscard]] double parse_double(const std::string& text, const std::string& what);
[[nodiscard]] std::int64_t parse_int(const std::string& text, const std::string& what);
[[nodiscard]] bool parse_bool(const std::string& text, const std::string& what);
/// Comma-separated list of doubles.
[[nodiscard]] std::vector<double> parse_double_list(const std::string& text, const std::string& what);

}  // namespace pehsim
