#include "pehsim/config.hpp"

#include "pehsim/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pehsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') {
        return false;
    }
    for (char c : k) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '.' || c == '-';
        if (!ok) {
            return false;
        }
    }
    return k.find("..") == std::string_view::npos;
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
    Config cfg;
    cfg.source_ = std::move(source);
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        std::ostringstream where;
        where << cfg.source_ << ":" << line_no;
        if (eq == std::string_view::npos) {
            throw ConfigError(where.str() + ": expected `key = value`, got '" + std::string(line) + "'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!valid_key(key)) {
            throw ConfigError(where.str() + ": invalid key '" + key + "'");
        }
        if (value.empty()) {
            throw ConfigError(where.str() + ": key '" + key + "' has no value");
        }
        if (cfg.entries_.contains(key)) {
            std::ostringstream msg;
            msg << where.str() << ": duplicate key '" << key << "' (first set on line "
                << cfg.entries_[key].line << ")";
            throw ConfigError(msg.str());
        }
        cfg.entries_[key] = Entry{value, line_no};
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    Config cfg = parse(buf.str(), path.string());
    cfg.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return cfg;
}

std::optional<std::string> Config::raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.value;
}

int Config::line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

void Config::set(const std::string& key, std::string value) {
    if (!valid_key(key)) {
        throw ConfigError("invalid key '" + key + "'");
    }
    entries_[key] = Entry{std::move(value), 0};
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, _] : entries_) {
        out.push_back(k);
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError(what + ": expected a number, got '" + text + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(what + ": expected an integer, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError(what + ": expected true/false, got '" + text + "'");
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto piece = trim(std::string_view(text).substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (piece.empty()) {
            throw ConfigError(what + ": empty item in list '" + text + "'");
        }
        out.push_back(parse_double(std::string(piece), what));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

}  // namespace pehsim
