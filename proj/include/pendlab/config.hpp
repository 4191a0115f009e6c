#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pendlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat sectioned key-value configuration ("[section]" lines, "key = value"
// lines, '#'/';' comments). Keys keep insertion order so that
// parse -> serialize round-trips bit-exactly on canonical files; serialize
// always emits the canonical form (one blank line between sections,
// "key = value").
class Config {
  public:
    Config() = default;
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    std::string serialize() const;
    // FNV-1a 64-bit over the canonical serialization, rendered as 16 hex chars.
    std::string hash() const;

    bool has(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key,
             const std::string& value);

    std::string get_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_int(const std::string& section, const std::string& key) const;
    long get_int(const std::string& section, const std::string& key,
                 long fallback) const;
    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;
    // Comma-separated doubles.
    std::vector<double> get_list(const std::string& section,
                                 const std::string& key) const;

    const std::vector<std::string>& section_order() const { return order_; }
    std::vector<std::pair<std::string, std::string>> items(
        const std::string& section) const;

  private:
    std::optional<std::string> find(const std::string& section,
                                    const std::string& key) const;

    // section -> ordered (key, value) pairs; order_ tracks section insertion.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> data_;
    std::vector<std::string> order_;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace pendlab
