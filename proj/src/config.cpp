#include "pendlab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pendlab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty section name");
            if (!cfg.data_.count(section)) {
                cfg.data_[section] = {};
                cfg.order_.push_back(section);
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside any [section]");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key");
        cfg.set(section, key, value);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::serialize() const {
    std::string out;
    bool first = true;
    for (const auto& sec : order_) {
        if (!first) out += "\n";
        first = false;
        out += "[" + sec + "]\n";
        for (const auto& [k, v] : data_.at(sec)) out += k + " = " + v + "\n";
    }
    return out;
}

std::string Config::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize())));
    return buf;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key).has_value();
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    if (!data_.count(section)) {
        data_[section] = {};
        order_.push_back(section);
    }
    auto& items = data_[section];
    for (auto& [k, v] : items) {
        if (k == key) {
            v = value;
            return;
        }
    }
    items.emplace_back(key, value);
}

std::optional<std::string> Config::find(const std::string& section,
                                        const std::string& key) const {
    auto it = data_.find(section);
    if (it == data_.end()) return std::nullopt;
    for (const auto& [k, v] : it->second)
        if (k == key) return v;
    return std::nullopt;
}

std::string Config::get_str(const std::string& section,
                            const std::string& key) const {
    auto v = find(section, key);
    if (!v) throw ConfigError("missing config key [" + section + "] " + key);
    return *v;
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto v = find(section, key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
    const std::string v = get_str(section, key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key [" + section + "] " + key +
                          " is not a number: '" + v + "'");
    }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
    const std::string v = get_str(section, key);
    try {
        std::size_t pos = 0;
        const long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("config key [" + section + "] " + key +
                          " is not an integer: '" + v + "'");
    }
}

long Config::get_int(const std::string& section, const std::string& key,
                     long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get_str(section, key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key [" + section + "] " + key +
                      " is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& section,
                                     const std::string& key) const {
    const std::string v = get_str(section, key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("config key [" + section + "] " + key +
                              ": bad list element '" + tok + "'");
        }
    }
    if (out.empty())
        throw ConfigError("config key [" + section + "] " + key +
                          ": empty list");
    return out;
}

std::vector<std::pair<std::string, std::string>> Config::items(
    const std::string& section) const {
    auto it = data_.find(section);
    if (it == data_.end()) return {};
    return it->second;
}

}  // namespace pendlab
