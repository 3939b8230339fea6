#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "latentscope/common.hpp"
#include "latentscope/csv.hpp"

namespace latentscope {

// `key = value` lines under `[section]` headers. `#` and `;` start comments.
// Top-level keys (before any section) live under the "" section.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path) {
        std::ifstream in(path);
        require_config(in.good(), "cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str(), path);
    }

    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<config>") {
        ConfigFile cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            const auto trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                require_config(trimmed.back() == ']',
                               origin + ":" + std::to_string(lineno) + ": malformed section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                cfg.sections_[section];
                continue;
            }
            const auto eq = trimmed.find('=');
            require_config(eq != std::string::npos,
                           origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            require_config(!key.empty(),
                           origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.sections_[section][key] = value;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key) const {
        return sections_.at(section).at(key);
    }

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t");
        return s.substr(a, b - a + 1);
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Typed reader that tracks which keys were consumed so anything left over can
// be rejected by name.
class ConfigReader {
public:
    explicit ConfigReader(const ConfigFile& file) : file_(file) {}

    double number(const std::string& section, const std::string& key, double fallback) {
        mark(section, key);
        if (!file_.has(section, key)) return fallback;
        return parse_double(file_.get(section, key), qualify(section, key));
    }

    std::uint64_t unsigned_int(const std::string& section, const std::string& key,
                               std::uint64_t fallback) {
        mark(section, key);
        if (!file_.has(section, key)) return fallback;
        const std::string s = file_.get(section, key);
        std::uint64_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        require_config(res.ec == std::errc() && res.ptr == s.data() + s.size(),
                       "expected a non-negative integer for " + qualify(section, key) +
                           ", got '" + s + "'");
        return v;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) {
        mark(section, key);
        if (!file_.has(section, key)) return fallback;
        const std::string s = file_.get(section, key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw config_error("expected true/false for " + qualify(section, key) + ", got '" + s + "'");
    }

    std::string text(const std::string& section, const std::string& key,
                     const std::string& fallback) {
        mark(section, key);
        if (!file_.has(section, key)) return fallback;
        return file_.get(section, key);
    }

    // Rejects any key the typed loader never asked about.
    void reject_unknown() const {
        for (const auto& [section, kv] : file_.sections()) {
            for (const auto& [key, value] : kv) {
                if (!consumed_.count(qualify(section, key)))
                    throw config_error("unknown config key " + qualify(section, key));
            }
        }
    }

    static std::string qualify(const std::string& section, const std::string& key) {
        return section.empty() ? key : "[" + section + "] " + key;
    }

private:
    void mark(const std::string& section, const std::string& key) {
        consumed_.insert(qualify(section, key));
    }

    const ConfigFile& file_;
    std::set<std::string> consumed_;
};

}  // namespace latentscope
